#include "rdhaz/dgp.hpp"

#include <cmath>
#include <limits>

#include "rdhaz/errors.hpp"
#include "rdhaz/kernel_constants.hpp"
#include "rdhaz/quadrature.hpp"

namespace rdhaz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pre-frailty rate of side g: a0 for g = 0, a0 + d for g = 1.
double side_rate(const DGPSpec& spec, int g, double t, double dz) {
  double a = spec.baseline.value(t, dz);
  if (g == 1) a += spec.effect.value(t, dz);
  return a;
}

double side_cumulative(const DGPSpec& spec, int g, double t, double dz) {
  double a = spec.baseline.integral(t, dz);
  if (g == 1) a += spec.effect.integral(t, dz);
  return a;
}

}  // namespace

void DGPSpec::validate() const {
  if (!(horizon > 0.0)) throw ValidationError("dgp: horizon must be positive");
  if (!(forcing_halfwidth > 0.0)) throw ValidationError("dgp: forcing halfwidth must be positive");
  if (frailty_var < 0.0) throw ValidationError("dgp: frailty variance must be >= 0");
  if (censor_rate < 0.0) throw ValidationError("dgp: censoring rate must be >= 0");
  if (censoring_cdf(horizon) >= 0.99)
    throw ValidationError("dgp: censoring too heavy, H(horizon) >= 0.99");
  // Hazard nonnegativity over [0, horizon] x support. The rates are affine in
  // t and quadratic in dz, so checking the t endpoints on a fine dz grid covers
  // the rectangle up to grid resolution.
  const int grid = 400;
  for (int g = 0; g <= 1; ++g) {
    for (int i = 0; i <= grid; ++i) {
      const double dz = -forcing_halfwidth + 2.0 * forcing_halfwidth * i / grid;
      if (side_rate(*this, g, 0.0, dz) < 0.0 || side_rate(*this, g, horizon, dz) < 0.0)
        throw ValidationError("dgp: hazard negative inside the observation window");
    }
  }
}

double DGPSpec::forcing_density(double z) const {
  const double dz = z - cutoff;
  const double w = forcing_halfwidth;
  if (dz < -w || dz > w) return 0.0;
  switch (forcing) {
    case ForcingFamily::uniform:
      return 0.5 / w;
    case ForcingFamily::triangular:
      return (1.0 - std::abs(dz) / w) / w;
  }
  return 0.0;
}

double DGPSpec::censoring_cdf(double t) const {
  if (censor_rate <= 0.0 || t <= 0.0) return 0.0;
  return -std::expm1(-censor_rate * t);
}

double sample_lifetime(const DGPSpec& spec, int side, double z, double u, double e) {
  const double dz = z - spec.cutoff;
  // Cumulative hazard is alpha*t + beta*t^2/2 in t; invert analytically.
  double alpha, beta;
  if (spec.frailty_mode == FrailtyMode::both) {
    alpha = side_rate(spec, side, 0.0, dz) * u;
    beta = (spec.baseline.ct + (side == 1 ? spec.effect.ct : 0.0)) * u;
  } else {
    alpha = spec.baseline.value(0.0, dz) * u;
    beta = spec.baseline.ct * u;
    if (side == 1) {
      alpha += spec.effect.value(0.0, dz);
      beta += spec.effect.ct;
    }
  }
  if (alpha < 0.0) throw NumericError("dgp: negative hazard encountered at t = 0");
  const double disc = alpha * alpha + 2.0 * beta * e;
  if (disc <= 0.0) return kInf;  // cumulative hazard plateaus below e
  const double denom = alpha + std::sqrt(disc);
  if (denom <= 0.0) return kInf;
  const double t = 2.0 * e / denom;
  // Hazard must stay nonnegative up to the sampled time (or the horizon).
  if (alpha + beta * std::min(t, spec.horizon) < -1e-12)
    throw NumericError("dgp: hazard went negative before the sampled event time");
  return t;
}

SurvivalDataset simulate_replicate(const DGPSpec& spec, std::size_t n,
                                   std::uint64_t replicate, SimulationTrace* trace) {
  spec.validate();
  Rng rng = Rng::for_replicate(spec.seed, replicate);
  std::vector<SurvivalRecord> records;
  records.reserve(n);
  if (trace) {
    trace->frailty.clear();
    trace->censor_time.clear();
    trace->latent_time.clear();
  }
  const double theta = spec.frailty_var;
  for (std::size_t i = 0; i < n; ++i) {
    // Fixed draw order per record: Z, U, E, C.
    const double zu = rng.uniform01();
    double dz;
    if (spec.forcing == ForcingFamily::uniform) {
      dz = spec.forcing_halfwidth * (2.0 * zu - 1.0);
    } else {
      // Symmetric triangular on [-w, w] via inverse CDF.
      const double w = spec.forcing_halfwidth;
      dz = zu < 0.5 ? w * (std::sqrt(2.0 * zu) - 1.0) : w * (1.0 - std::sqrt(2.0 * (1.0 - zu)));
    }
    const double z = spec.cutoff + dz;
    const double u = theta > 0.0 ? rng.gamma(1.0 / theta, theta) : 1.0;
    const double e = rng.exponential();
    const double c = spec.censor_rate > 0.0 ? rng.exponential(spec.censor_rate) : kInf;
    const int g = z >= spec.cutoff ? 1 : 0;
    const double lifetime = sample_lifetime(spec, g, z, u, e);
    SurvivalRecord r;
    r.forcing = z;
    if (lifetime <= c) {
      r.time = lifetime;
      r.event = true;
    } else {
      r.time = c;
      r.event = false;
    }
    // The dataset constructor truncates times beyond the horizon.
    if (std::isinf(r.time)) {
      r.time = spec.horizon;
      r.event = false;
    }
    records.push_back(r);
    if (trace) {
      trace->frailty.push_back(u);
      trace->censor_time.push_back(c);
      trace->latent_time.push_back(lifetime);
    }
  }
  return SurvivalDataset(std::move(records), spec.cutoff, spec.horizon);
}

SurvivalDataset simulate(const DGPSpec& spec, std::size_t n) {
  return simulate_replicate(spec, n, 0, nullptr);
}

double conditional_hazard_bar(const DGPSpec& spec, int side, double t, double z) {
  const double dz = z - spec.cutoff;
  const double theta = spec.frailty_var;
  if (theta <= 0.0) return side_rate(spec, side, t, dz);
  if (spec.frailty_mode == FrailtyMode::both) {
    const double a = side_rate(spec, side, t, dz);
    const double cum = side_cumulative(spec, side, t, dz);
    return a / (1.0 + theta * cum);
  }
  // baseline_only: frailty multiplies a0; d enters additively and cancels in
  // the frailty average.
  const double a0 = spec.baseline.value(t, dz);
  const double cum0 = spec.baseline.integral(t, dz);
  double bar = a0 / (1.0 + theta * cum0);
  if (side == 1) bar += spec.effect.value(t, dz);
  return bar;
}

namespace {

// z-derivatives of a/(1 + theta A) for polynomial a(z), A(t,z) = zpart(z)*t + ...
struct RateParts {
  double a, a1, a2;    // value and first/second dz-derivatives of the rate
  double A, A1, A2;    // same for the cumulative
};

RateParts poly_parts(const PolyRate& r, double t, double dz) {
  RateParts p;
  p.a = r.value(t, dz);
  p.a1 = r.dz1(dz);
  p.a2 = r.dz2();
  p.A = r.integral(t, dz);
  p.A1 = r.dz1(dz) * t;
  p.A2 = r.dz2() * t;
  return p;
}

RateParts side_parts(const DGPSpec& spec, int g, double t, double dz) {
  RateParts p = poly_parts(spec.baseline, t, dz);
  if (g == 1) {
    const RateParts d = poly_parts(spec.effect, t, dz);
    p.a += d.a;
    p.a1 += d.a1;
    p.a2 += d.a2;
    p.A += d.A;
    p.A1 += d.A1;
    p.A2 += d.A2;
  }
  return p;
}

double frailty_ratio_dz1(const RateParts& p, double theta) {
  const double den = 1.0 + theta * p.A;
  return p.a1 / den - p.a * theta * p.A1 / (den * den);
}

double frailty_ratio_dz2(const RateParts& p, double theta) {
  const double den = 1.0 + theta * p.A;
  return p.a2 / den - 2.0 * p.a1 * theta * p.A1 / (den * den) -
         p.a * theta * p.A2 / (den * den) +
         2.0 * p.a * theta * theta * p.A1 * p.A1 / (den * den * den);
}

}  // namespace

double conditional_hazard_bar_dz1(const DGPSpec& spec, int side, double t, double z) {
  const double dz = z - spec.cutoff;
  const double theta = spec.frailty_var;
  if (theta <= 0.0) {
    RateParts p = side_parts(spec, side, t, dz);
    return p.a1;
  }
  if (spec.frailty_mode == FrailtyMode::both)
    return frailty_ratio_dz1(side_parts(spec, side, t, dz), theta);
  double v = frailty_ratio_dz1(poly_parts(spec.baseline, t, dz), theta);
  if (side == 1) v += spec.effect.dz1(dz);
  return v;
}

double conditional_hazard_bar_dz2(const DGPSpec& spec, int side, double t, double z) {
  const double dz = z - spec.cutoff;
  const double theta = spec.frailty_var;
  if (theta <= 0.0) {
    RateParts p = side_parts(spec, side, t, dz);
    return p.a2;
  }
  if (spec.frailty_mode == FrailtyMode::both)
    return frailty_ratio_dz2(side_parts(spec, side, t, dz), theta);
  double v = frailty_ratio_dz2(poly_parts(spec.baseline, t, dz), theta);
  if (side == 1) v += spec.effect.dz2();
  return v;
}

double survival_bar(const DGPSpec& spec, int side, double t, double z) {
  const double dz = z - spec.cutoff;
  const double theta = spec.frailty_var;
  if (theta <= 0.0) return std::exp(-side_cumulative(spec, side, t, dz));
  if (spec.frailty_mode == FrailtyMode::both) {
    const double cum = side_cumulative(spec, side, t, dz);
    return std::pow(1.0 + theta * cum, -1.0 / theta);
  }
  const double cum0 = spec.baseline.integral(t, dz);
  double s = std::pow(1.0 + theta * cum0, -1.0 / theta);
  if (side == 1) s *= std::exp(-spec.effect.integral(t, dz));
  return s;
}

double at_risk_expectation(const DGPSpec& spec, int side, double t, double z) {
  return (1.0 - spec.censoring_cdf(t)) * survival_bar(spec, side, t, z);
}

TrueEffect true_theta(const DGPSpec& spec, double t) {
  TrueEffect eff;
  eff.theta = spec.effect.integral(t, 0.0);
  const double theta = spec.frailty_var;
  if (theta <= 0.0 || spec.frailty_mode == FrailtyMode::baseline_only) {
    eff.theta_risk = eff.theta;
    return eff;
  }
  // both-mode: integral of a_g/(1+theta A_g) is log(1+theta A_g)/theta.
  const double cum1 = side_cumulative(spec, 1, t, 0.0);
  const double cum0 = side_cumulative(spec, 0, t, 0.0);
  eff.theta_risk = (std::log1p(theta * cum1) - std::log1p(theta * cum0)) / theta;
  return eff;
}

double limiting_variance_side(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                              double t, int side) {
  const double fz = spec.forcing_density(spec.cutoff);
  if (!(fz > 0.0)) throw ValidationError("forcing density vanishes at the cutoff");
  const double integral = integrate(
      [&](double s) {
        const double num = conditional_hazard_bar(spec, side, s, spec.cutoff);
        const double den = at_risk_expectation(spec, side, s, spec.cutoff);
        return num / den;
      },
      0.0, t, 1e-10);
  const Eigen::MatrixXd gamma = gamma_matrix(kernel, p);
  const Eigen::MatrixXd psi = psi_matrix(kernel, p);
  const Eigen::MatrixXd ginv = gamma.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  const Eigen::MatrixXd sandwich = ginv * psi * ginv;
  return integral / fz * sandwich(nu, nu);
}

double limiting_variance_oracle(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                                double t) {
  double fact = 1.0;
  for (int i = 2; i <= nu; ++i) fact *= i;
  return fact * fact *
         (limiting_variance_side(spec, kernel, p, nu, t, 0) +
          limiting_variance_side(spec, kernel, p, nu, t, 1));
}

double theoretical_leading_bias(const DGPSpec& spec, const KernelSpec& kernel, int p, int nu,
                                double t, double h) {
  if (p > 1)
    throw ValidationError(
        "theoretical_leading_bias: analytic z-derivatives available up to order 2 (p <= 1)");
  auto deriv = [&](int side, double s) {
    return p == 0 ? conditional_hazard_bar_dz1(spec, side, s, spec.cutoff)
                  : conditional_hazard_bar_dz2(spec, side, s, spec.cutoff);
  };
  const double constant = bias_constant(kernel, p, nu);
  const double int1 = integrate([&](double s) { return deriv(1, s); }, 0.0, t, 1e-10);
  const double int0 = integrate([&](double s) { return deriv(0, s); }, 0.0, t, 1e-10);
  const double mirror = ((p + 1 + nu) % 2 == 0) ? 1.0 : -1.0;
  return std::pow(h, p + 1 - nu) * constant * (int1 - mirror * int0);
}

}  // namespace rdhaz
