#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rdhaz/dataset.hpp"
#include "rdhaz/lp_aalen.hpp"

namespace rdhaz {

enum class CIMode {
  undersmoothed,     // raw estimate, martingale variance, no bias correction
  conventional_bc,   // bias-corrected center, variance ignores the correction noise
  robust_bc,         // bias-corrected center, rho-adjusted variance
};

CIMode ci_mode_from_string(const std::string& s);
std::string to_string(CIMode mode);

struct InferenceConfig {
  FitConfig fit;
  int q = 2;          // pilot polynomial order, q >= p + 1
  double b = 0.0;     // pilot bandwidth, b >= h
  double alpha = 0.05;
  CIMode mode = CIMode::robust_bc;
  // Test hook: forces the rho used in the robust variance weights (rho = 0
  // reproduces the conventional variance exactly).
  std::optional<double> rho_override;

  double rho() const { return rho_override ? *rho_override : fit.h / b; }
  void validate() const;
};

struct EffectEstimate {
  std::vector<double> grid;
  std::vector<double> theta;            // Theta-hat^(nu)
  std::vector<double> theta_bc;         // bias-corrected
  std::vector<double> theta_treated;    // A-hat^(nu)_{1,p}
  std::vector<double> theta_control;    // A-hat^(nu)_{0,p}
  std::vector<double> var_conventional; // Var-hat of Theta-hat^(nu)
  std::vector<double> var_robust;       // rho-adjusted Var-hat of the bc estimate
  std::vector<double> ci_lo, ci_hi;
  std::vector<double> var_side
      [2];  // per-side e' V_{g,p,n}(t,h) e quadratic forms (diagnostics/oracles)
  double j_fraction_main = 1.0;
  double j_fraction_pilot = 1.0;
  long n_window_control = 0;
  long n_window_treated = 0;
  long solve_failures = 0;
};

// V_{g,p,n}(t,h) at each query time (ascending grid required).
std::vector<Eigen::MatrixXd> variance_path(const SurvivalDataset& ds, int side,
                                           const FitConfig& cfg,
                                           const std::vector<double>& grid);

// Conventional variance of Theta-hat^(nu)(t,h): both sides combined,
// (nu!)^2 e' (V_0 + V_1) e / (n h^{2 nu + 1}).
double theta_variance(const SurvivalDataset& ds, const FitConfig& cfg, double t, int nu);

// Bias-corrected Theta-hat using a pilot fit of order q at bandwidth b.
double bias_corrected_theta(const SurvivalDataset& ds, const InferenceConfig& icfg, double t);

// Empirical cross-covariation: plug-in estimate of
// n * b * <Mbar_{p,n}(h), Mbar_{q,n}(b)>_t per side, mirroring the variance
// estimator; reduces to variance_path when h = b and q = p.
std::vector<Eigen::MatrixXd> cross_covariation(const SurvivalDataset& ds, int side,
                                               const InferenceConfig& icfg,
                                               const std::vector<double>& grid);

// rho-adjusted variance of the bias-corrected estimator.
double robust_variance(const SurvivalDataset& ds, const InferenceConfig& icfg, double t,
                       int nu);

// Full pointwise analysis over a query grid.
EffectEstimate confidence_band(const SurvivalDataset& ds, const InferenceConfig& icfg,
                               std::vector<double> grid);

// Standard normal quantile via rational approximation (absolute error ~1e-9).
double normal_quantile(double prob);

}  // namespace rdhaz
