#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rdhaz/dgp.hpp"
#include "rdhaz/errors.hpp"
#include "rdhaz/quadrature.hpp"

using namespace rdhaz;

namespace {

DGPSpec flat_spec(double c0, double d0, double theta, FrailtyMode mode,
                  double censor_rate = 0.0) {
  DGPSpec s;
  s.baseline = {c0, 0.0, 0.0, 0.0};
  s.effect = {d0, 0.0, 0.0, 0.0};
  s.frailty_mode = mode;
  s.frailty_var = theta;
  s.censor_rate = censor_rate;
  s.horizon = 2.0;
  s.cutoff = 0.0;
  s.forcing_halfwidth = 1.0;
  s.seed = 42;
  return s;
}

// Kolmogorov-Smirnov distance between a sample and an analytic CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

}  // namespace

TEST_CASE("spec validation") {
  DGPSpec s = flat_spec(1.0, 0.5, 0.0, FrailtyMode::both);
  CHECK_NOTHROW(s.validate());
  s.censor_rate = 10.0;  // H(2) = 1 - e^-20 >= 0.99
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = flat_spec(0.2, 0.5, 0.0, FrailtyMode::both);
  s.baseline.c2 = -0.5;  // negative hazard at |dz| = 1
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("n = 0 gives an empty dataset; seeds are deterministic") {
  DGPSpec s = flat_spec(1.0, 0.5, 0.5, FrailtyMode::both, 0.3);
  CHECK(simulate(s, 0).size() == 0);
  SurvivalDataset a = simulate(s, 500);
  SurvivalDataset b = simulate(s, 500);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records()[i].time == b.records()[i].time);
    CHECK(a.records()[i].event == b.records()[i].event);
    CHECK(a.records()[i].forcing == b.records()[i].forcing);
  }
  // Different replicate streams differ.
  SurvivalDataset c = simulate_replicate(s, 500, 1);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_diff = any_diff || a.records()[i].time != c.records()[i].time;
  CHECK(any_diff);
}

TEST_CASE("constant hazards give exponential treated lifetimes") {
  // theta = 0, a0 = c0, d = d0: treated lifetimes are Exp(c0 + d0). Use a
  // long horizon and no censoring so truncation is immaterial.
  DGPSpec s = flat_spec(0.6, 0.9, 0.0, FrailtyMode::both);
  s.horizon = 50.0;
  const SurvivalDataset ds = simulate(s, 20000);
  std::vector<double> treated;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.side(i) == 1 && ds.records()[i].event) treated.push_back(ds.records()[i].time);
  REQUIRE(treated.size() > 8000);
  const double rate = 1.5;
  const double d = ks_statistic(treated, [&](double t) { return -std::expm1(-rate * t); });
  // 1% critical value 1.63 / sqrt(n).
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(treated.size())));
}

TEST_CASE("conditional hazard closed forms") {
  // theta = 0: alphabar = a_g.
  DGPSpec s = flat_spec(0.8, 0.4, 0.0, FrailtyMode::both);
  s.baseline.c1 = 0.3;
  s.baseline.c2 = 0.2;
  CHECK(conditional_hazard_bar(s, 0, 1.0, 0.5) ==
        doctest::Approx(0.8 + 0.3 * 0.5 + 0.2 * 0.25).epsilon(1e-14));
  CHECK(conditional_hazard_bar(s, 1, 1.0, 0.5) ==
        doctest::Approx(0.8 + 0.3 * 0.5 + 0.2 * 0.25 + 0.4).epsilon(1e-14));

  // t = 0 returns a_g(0, z) for any theta.
  s.frailty_var = 0.7;
  CHECK(conditional_hazard_bar(s, 0, 0.0, 0.3) ==
        doctest::Approx(s.baseline.value(0.0, 0.3)).epsilon(1e-14));

  // Gamma frailty: alphabar_0 = c0 / (1 + theta c0 t), checked against a
  // numeric integration oracle over the gamma density.
  const double c0 = 0.8, theta = 0.5, t = 1.3;
  DGPSpec flat = flat_spec(c0, 0.0, theta, FrailtyMode::both);
  const double shape = 1.0 / theta, scale = theta;
  auto gamma_pdf = [&](double u) {
    return std::pow(u, shape - 1.0) * std::exp(-u / scale) /
           (std::tgamma(shape) * std::pow(scale, shape));
  };
  const double num = integrate(
      [&](double u) { return c0 * u * std::exp(-c0 * t * u) * gamma_pdf(u); }, 0.0, 60.0,
      1e-12);
  const double den = integrate(
      [&](double u) { return std::exp(-c0 * t * u) * gamma_pdf(u); }, 0.0, 60.0, 1e-12);
  CHECK(conditional_hazard_bar(flat, 0, t, 0.1) == doctest::Approx(num / den).epsilon(1e-8));
  CHECK(conditional_hazard_bar(flat, 0, t, 0.1) ==
        doctest::Approx(c0 / (1.0 + theta * c0 * t)).epsilon(1e-12));

  // baseline_only mode: alphabar_1 = alphabar_0 + d.
  DGPSpec base = flat_spec(c0, 0.4, theta, FrailtyMode::baseline_only);
  CHECK(conditional_hazard_bar(base, 1, t, 0.0) ==
        doctest::Approx(c0 / (1.0 + theta * c0 * t) + 0.4).epsilon(1e-12));
}

TEST_CASE("conditional hazard derivatives match finite differences") {
  DGPSpec s;
  s.baseline = {0.7, 0.25, 0.45, 0.1};
  s.effect = {0.3, -0.1, 0.2, 0.0};
  s.frailty_var = 0.6;
  s.horizon = 2.0;
  s.forcing_halfwidth = 1.0;
  for (FrailtyMode mode : {FrailtyMode::both, FrailtyMode::baseline_only}) {
    s.frailty_mode = mode;
    for (int side : {0, 1}) {
      for (double z : {-0.4, 0.0, 0.3}) {
        const double t = 1.1;
        const double eps = 1e-5;
        auto f = [&](double zz) { return conditional_hazard_bar(s, side, t, zz); };
        const double d1 = (f(z + eps) - f(z - eps)) / (2.0 * eps);
        const double d2 = (f(z + eps) - 2.0 * f(z) + f(z - eps)) / (eps * eps);
        CHECK(conditional_hazard_bar_dz1(s, side, t, z) == doctest::Approx(d1).epsilon(1e-6));
        CHECK(conditional_hazard_bar_dz2(s, side, t, z) ==
              doctest::Approx(d2).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("true effect pair") {
  // d constant, theta = 0: Theta(t) = d0 t = Theta_risk.
  DGPSpec s = flat_spec(1.0, 0.5, 0.0, FrailtyMode::both);
  TrueEffect e = true_theta(s, 1.4);
  CHECK(e.theta == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(e.theta_risk == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(true_theta(s, 0.0).theta == 0.0);
  CHECK(true_theta(s, 0.0).theta_risk == 0.0);

  // theta > 0, both-mode: Theta_risk integrates the closed-form conditional
  // hazards; compare the log form against an adaptive quadrature oracle.
  s = flat_spec(1.0, 1.0, 0.5, FrailtyMode::both);
  e = true_theta(s, 1.0);
  const double want = integrate(
      [&](double u) {
        return conditional_hazard_bar(s, 1, u, 0.0) - conditional_hazard_bar(s, 0, u, 0.0);
      },
      0.0, 1.0, 1e-12);
  CHECK(e.theta_risk == doctest::Approx(want).epsilon(1e-10));
  CHECK(e.theta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.theta_risk < e.theta);  // at-risk subjects are healthier on average

  // baseline_only keeps the two estimands equal for any theta.
  s = flat_spec(1.0, 1.0, 0.5, FrailtyMode::baseline_only);
  e = true_theta(s, 1.0);
  CHECK(e.theta_risk == doctest::Approx(e.theta).epsilon(1e-14));
}

TEST_CASE("limiting variance closed forms") {
  DGPSpec s = flat_spec(0.9, 0.0, 0.0, FrailtyMode::both);
  CHECK(limiting_variance_oracle(s, KernelSpec::uniform(), 0, 0, 0.0) == 0.0);
  // Constant hazard c, no censoring, p = 0 uniform kernel on support
  // half-width 1: Gamma = Psi = 1, f_Z = 1/2, and int alphabar/y = e^{ct}-1.
  const double c = 0.9, t = 1.5;
  const double side0 = limiting_variance_side(s, KernelSpec::uniform(), 0, 0, t, 0);
  CHECK(side0 == doctest::Approx(2.0 * (std::exp(c * t) - 1.0)).epsilon(1e-9));
  // Treated side has the same constant hazard when d0 = 0.
  const double total = limiting_variance_oracle(s, KernelSpec::uniform(), 0, 0, t);
  CHECK(total == doctest::Approx(2.0 * side0).epsilon(1e-9));
}

TEST_CASE("frailty identity: theta = 0 conditional survival is exp(-A)") {
  DGPSpec s = flat_spec(0.5, 0.7, 0.0, FrailtyMode::both);
  s.baseline.c2 = 0.3;
  s.horizon = 100.0;
  const double z = 0.4;
  const int n = 10000;
  Rng rng(777);
  std::vector<double> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) draws.push_back(sample_lifetime(s, 1, z, 1.0, rng.exponential()));
  const double rate = s.baseline.value(0.0, z) + s.effect.value(0.0, z);
  const double d = ks_statistic(draws, [&](double t) { return -std::expm1(-rate * t); });
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("censoring is independent of the frailty") {
  DGPSpec s = flat_spec(1.0, 0.5, 0.8, FrailtyMode::both, 0.4);
  SimulationTrace trace;
  simulate_replicate(s, 10000, 0, &trace);
  const std::size_t n = trace.frailty.size();
  REQUIRE(n == 10000);
  double mu = 0.0, mc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += trace.frailty[i];
    mc += trace.censor_time[i];
  }
  mu /= n;
  mc /= n;
  double suu = 0.0, scc = 0.0, suc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double du = trace.frailty[i] - mu;
    const double dc = trace.censor_time[i] - mc;
    suu += du * du;
    scc += dc * dc;
    suc += du * dc;
  }
  const double corr = suc / std::sqrt(suu * scc);
  // Under independence the empirical correlation is ~N(0, 1/n).
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("simulated marginal survival matches (1 - H) Sbar at fixed z") {
  // Marginal observed survival P(T > t | Z = z) should equal
  // (1 - H(t)) * Sbar_g(t, z). Simulate at a pinned forcing value via the
  // latent draws and compare at a grid of time points.
  DGPSpec s = flat_spec(0.8, 0.5, 0.5, FrailtyMode::both, 0.25);
  s.horizon = 6.0;
  const double z = 0.2;
  const int n = 20000;
  Rng rng(909);
  std::vector<double> observed;
  observed.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.gamma(1.0 / s.frailty_var, s.frailty_var);
    const double latent = sample_lifetime(s, 1, z, u, rng.exponential());
    const double c = rng.exponential(s.censor_rate);
    observed.push_back(std::min(latent, c));
  }
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    long alive = 0;
    for (double v : observed) alive += v > t;
    const double empirical = static_cast<double>(alive) / n;
    const double want = at_risk_expectation(s, 1, t, z);
    CHECK(empirical == doctest::Approx(want).epsilon(0.03));
  }
}

TEST_CASE("hazard positivity is asserted during inverse transform") {
  DGPSpec s = flat_spec(0.5, 0.2, 0.0, FrailtyMode::both);
  s.baseline.ct = -0.2;  // decreasing but nonnegative on [0, 2]: 0.5 - 0.2*2 = 0.1
  CHECK_NOTHROW(s.validate());
  SurvivalDataset ds = simulate(s, 2000);
  CHECK(ds.size() == 2000);
  for (const auto& r : ds.records()) CHECK(r.time >= 0.0);
}
