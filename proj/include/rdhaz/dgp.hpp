#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdhaz/dataset.hpp"
#include "rdhaz/kernel.hpp"
#include "rdhaz/rng.hpp"

namespace rdhaz {

// a(t, z) = c0 + c1 (z - z0) + c2 (z - z0)^2 + ct * t.
struct PolyRate {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, ct = 0.0;

  double value(double t, double dz) const { return c0 + dz * (c1 + dz * c2) + ct * t; }
  double integral(double t, double dz) const {
    return (c0 + dz * (c1 + dz * c2)) * t + 0.5 * ct * t * t;
  }
  double dz1(double dz) const { return c1 + 2.0 * c2 * dz; }  // d/dz of the z-part
  double dz2() const { return 2.0 * c2; }
};

// How the mean-1 gamma frailty U enters the two hazards:
//   baseline_only: alpha_0 = a0 * U, alpha_1 = a0 * U + d
//                  (the treatment difference is functionally independent of U)
//   both:          alpha_g = (a0 + g d) * U
//                  (the difference d * U is confounded; the estimator targets
//                   the at-risk effect rather than the marginal one)
enum class FrailtyMode { baseline_only, both };

enum class ForcingFamily { uniform, triangular };

struct DGPSpec {
  PolyRate baseline;  // a0(t, z)
  PolyRate effect;    // d(t, z)
  FrailtyMode frailty_mode = FrailtyMode::baseline_only;
  double frailty_var = 0.0;  // theta >= 0; 0 means U = 1
  ForcingFamily forcing = ForcingFamily::uniform;
  double forcing_halfwidth = 1.0;  // support [z0 - w, z0 + w]
  double censor_rate = 0.0;        // exponential censoring; 0 disables
  double horizon = 1.0;            // tau
  double cutoff = 0.0;             // z0
  std::uint64_t seed = 1;

  void validate() const;
  double forcing_density(double z) const;
  double censoring_cdf(double t) const;  // H(t)
};

// Trace of latent draws for diagnostics and distributional tests.
struct SimulationTrace {
  std::vector<double> frailty;
  std::vector<double> censor_time;
  std::vector<double> latent_time;  // uncensored potential lifetime (inf if none)
};

SurvivalDataset simulate(const DGPSpec& spec, std::size_t n);
SurvivalDataset simulate_replicate(const DGPSpec& spec, std::size_t n,
                                   std::uint64_t replicate, SimulationTrace* trace = nullptr);

// Uncensored lifetime on side g at forcing value z, for frailty u and a unit
// exponential draw e; +inf when the cumulative hazard never reaches e on
// [0, +inf).
double sample_lifetime(const DGPSpec& spec, int side, double z, double u, double e);

// Conditional hazard among at-risk subjects, in closed form.
double conditional_hazard_bar(const DGPSpec& spec, int side, double t, double z);
// First and second z-derivatives of the conditional hazard (analytic).
double conditional_hazard_bar_dz1(const DGPSpec& spec, int side, double t, double z);
double conditional_hazard_bar_dz2(const DGPSpec& spec, int side, double t, double z);
// Marginal survival E S_g(t, z, U) and the at-risk expectation y_g = (1-H) Sbar.
double survival_bar(const DGPSpec& spec, int side, double t, double z);
double at_risk_expectation(const DGPSpec& spec, int side, double t, double z);

struct TrueEffect {
  double theta;       // Theta(t, z0) = integral of d(s, z0)
  double theta_risk;  // integral of alphabar_1 - alphabar_0 at z0
};
TrueEffect true_theta(const DGPSpec& spec, double t);

// (nu!)^2 e' [<Mbar_0> + <Mbar_1>]_t e from Theorem-1 closed forms; the
// per-side version returns e' <Mbar_g>_t e without the factorial factor.
double limiting_variance_side(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                              double t, int side);
double limiting_variance_oracle(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                                double t);

// Leading smoothing bias of Theta-hat^(nu)(t, h): the kernel constant times
// the integrated (p+1)th z-derivatives, with the left side carrying the
// mirror sign (-1)^{p+1+nu}.
double theoretical_leading_bias(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                                double t, double h);

}  // namespace rdhaz
