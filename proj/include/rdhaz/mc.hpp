#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rdhaz/dgp.hpp"
#include "rdhaz/inference.hpp"

namespace rdhaz {

struct BandwidthRule {
  double c = 0.8;
  double exponent = -0.2;  // h = c * n^exponent
};

struct ExperimentPlan {
  DGPSpec dgp;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> bandwidths;  // explicit list; empty means use the rule
  BandwidthRule rule;
  int p = 1;
  int nu = 0;
  int q = 2;
  double b_factor = 2.0;  // pilot bandwidth b = b_factor * h
  double alpha = 0.05;
  KernelSpec kernel = KernelSpec::uniform();
  double ridge_guard = 1e12;
  int replications = 2;
  std::vector<double> eval_times;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<double> bandwidths_for(std::size_t n) const;
};

// Aggregates for one (n, h, t) cell. Coverage is reported for all three CI
// modes; the raw and bias-corrected centers share one set of replicates.
struct MCCell {
  std::size_t n = 0;
  double h = 0.0;
  double b = 0.0;
  double t = 0.0;
  int replications = 0;
  int used = 0;            // non-degenerate replicates entering the moments
  int degenerate = 0;      // j_fraction == 0 or analysis failure
  bool cell_degenerate = false;  // more than 10% of replicates failed
  double theta_true = 0.0;
  double theta_risk_true = 0.0;
  double mean_estimate = 0.0;
  double mean_bias = 0.0;  // against theta_risk_true (== theta_true unconfounded)
  double mc_se = 0.0;
  double empirical_var = 0.0;
  double mean_estimated_var = 0.0;
  double mean_bc_estimate = 0.0;
  double mean_bc_bias = 0.0;
  double mean_robust_var = 0.0;
  double coverage_raw = 0.0;
  double coverage_bc = 0.0;
  double coverage_robust = 0.0;
  double coverage_band_lo = 0.0;  // binomial band around 1 - alpha
  double coverage_band_hi = 0.0;
  double mean_j_fraction = 0.0;
  double mean_var_side0 = 0.0;  // e' V_{0,p,n}(t,h) e
  double mean_var_side1 = 0.0;
  double runtime_seconds = 0.0;
};

struct MCReport {
  ExperimentPlan plan;
  std::vector<MCCell> cells;

  const MCCell& cell(std::size_t n, double h, double t) const;
};

MCReport run_experiment(const ExperimentPlan& plan, int threads = 1);

void write_report_csv(const MCReport& report, std::ostream& out);

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  bool conclusive = false;
};

// Least-squares slope of log|mean bias| against log h at fixed n and t.
// Flagged inconclusive when the mean bias is within 2 MC standard errors of
// zero at every bandwidth.
SlopeFit bias_rate_check(const MCReport& report, std::size_t n, double t);

ExperimentPlan plan_from_config(const class Config& cfg);
DGPSpec dgp_from_config(const class Config& cfg);

}  // namespace rdhaz
