// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy Monte Carlo settings are pinned here, including all
// tolerances; nothing is deferred to runtime calibration.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rational_oracle.hpp"
#include "rdhaz/dataset.hpp"
#include "rdhaz/dgp.hpp"
#include "rdhaz/inference.hpp"
#include "rdhaz/kernel_constants.hpp"
#include "rdhaz/lp_aalen.hpp"
#include "rdhaz/mc.hpp"
#include "wls_oracle.hpp"

using namespace rdhaz;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

KernelSpec as_custom(const KernelSpec& k) {
  return KernelSpec::custom(k.kappa, [k](double u) { return k.one_sided(u); });
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: kernel constants vs exact rational / dense trapezoid oracles.
// ---------------------------------------------------------------------------
void criterion_1() {
  const double t0 = now_seconds();
  double worst_rational = 0.0;
  for (const KernelSpec& base : {KernelSpec::uniform(), KernelSpec::triangular()}) {
    const KernelSpec quad = as_custom(base);  // forces the quadrature route
    for (int p = 0; p <= 4; ++p) {
      const Eigen::MatrixXd g = gamma_matrix(quad, p);
      const Eigen::MatrixXd s = psi_matrix(quad, p);
      for (int i = 0; i <= p; ++i)
        for (int j = 0; j <= p; ++j) {
          worst_rational = std::max(
              worst_rational, std::abs(g(i, j) - oracle::gamma_entry(base.family, i, j).value()));
          worst_rational = std::max(
              worst_rational, std::abs(s(i, j) - oracle::psi_entry(base.family, i, j).value()));
        }
      for (int q = 0; q <= 4; ++q) {
        const Eigen::VectorXd v = vartheta_vector(quad, p, q);
        for (int i = 0; i <= p; ++i)
          worst_rational =
              std::max(worst_rational,
                       std::abs(v(i) - oracle::vartheta_entry(base.family, i, q).value()));
      }
    }
  }

  // Psi_{p,q}(rho): library values against the 1e6-node trapezoid oracle.
  double worst_cross = 0.0;
  const long nodes = 1000000;
  for (const KernelSpec& base : {KernelSpec::uniform(), KernelSpec::triangular()}) {
    for (double rho : {0.0, 0.5, 1.0}) {
      // Power sums over one shared pass: M_m = trapezoid of k(u) k(rho u) u^m.
      std::vector<double> moments(9, 0.0);
      const double step = base.kappa / static_cast<double>(nodes);
      for (long k = 0; k <= nodes; ++k) {
        const double u = step * static_cast<double>(k);
        const double w = (k == 0 || k == nodes) ? 0.5 : 1.0;
        const double kv = base.one_sided(u) * base.one_sided(rho * u) * w;
        double um = 1.0;
        for (int m = 0; m <= 8; ++m) {
          moments[m] += kv * um;
          um *= u;
        }
      }
      for (double& m : moments) m *= step;
      for (int p = 0; p <= 4; ++p)
        for (int q = 0; q <= 4; ++q) {
          const Eigen::MatrixXd got = psi_cross_matrix(base, p, q, rho);
          for (int i = 0; i <= p; ++i)
            for (int j = 0; j <= q; ++j) {
              const double want = std::pow(rho, j) * moments[i + j];
              worst_cross = std::max(worst_cross, std::abs(got(i, j) - want));
            }
        }
    }
  }
  const double secs = now_seconds() - t0;
  const bool pass = worst_rational < 1e-12 && worst_cross < 1e-10 && secs < 5.0;
  report(1, pass,
         fmt("kernel constants: quadrature vs rational oracle %.2e (tol 1e-12), "
             "cross moments vs trapezoid %.2e (tol 1e-10), %.2fs (< 5s)",
             worst_rational, worst_cross, secs));
}

// ---------------------------------------------------------------------------
// Criteria 2 + 3: estimator and variance against independent oracles.
// ---------------------------------------------------------------------------
SurvivalDataset random_dataset(std::mt19937_64& gen, int n, double horizon, double h) {
  std::uniform_real_distribution<double> ut(0.02, horizon * 1.2);
  std::uniform_real_distribution<double> uz(-1.0, 1.0);
  std::bernoulli_distribution ev(0.75);
  std::vector<SurvivalRecord> recs;
  for (int i = 0; i < n; ++i) recs.push_back({ut(gen), ev(gen), uz(gen)});
  // Horizon-censored guards spread across both kernel windows keep the design
  // matrices populated and well conditioned at every event time; without them
  // near-singular designs (condition numbers up to the ridge guard) make the
  // 1e-10 agreement between two independent solvers unattainable.
  for (double f : {0.12, 0.38, 0.65, 0.9}) {
    recs.push_back({horizon, false, f * h});
    recs.push_back({horizon, false, -f * h});
  }
  return SurvivalDataset(std::move(recs), 0.0, horizon);
}

void criterion_2() {
  const double t0 = now_seconds();
  std::mt19937_64 gen(20240617);
  const KernelSpec kernels[3] = {KernelSpec::uniform(), KernelSpec::triangular(),
                                 KernelSpec::epanechnikov()};
  double worst = 0.0;
  bool structure_ok = true;
  bool na_exact = true;
  const double horizon = 4.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 10 + static_cast<int>(gen() % 33);  // n + 8 guards <= 50
    const int p = static_cast<int>(gen() % 3);
    const double h = 0.35 + 0.08 * static_cast<double>(gen() % 9);
    SurvivalDataset ds = random_dataset(gen, n, horizon, h);
    FitConfig cfg;
    cfg.p = p;
    cfg.h = h;
    cfg.kernel = kernels[rep % 3];
    for (int side : {0, 1}) {
      StepEstimate path = fit_path(ds, side, cfg);
      const auto want = oracle::fit_path_oracle(ds, side, p, h, cfg.kernel, cfg.ridge_guard);
      if (path.jump_times().size() != want.size()) {
        structure_ok = false;
        continue;
      }
      for (std::size_t i = 0; i < want.size(); ++i) {
        if (path.jump_times()[i] != want[i].time || path.j_flags()[i] != want[i].j_flag)
          structure_ok = false;
        for (int a = 0; a <= p; ++a)
          worst = std::max(worst, std::abs(path.increments()[i](a) - want[i].increment[a]));
      }
    }

    // p = 0 uniform kernel: bit-exact windowed Nelson-Aalen.
    FitConfig na_cfg;
    na_cfg.p = 0;
    na_cfg.h = 0.8;
    na_cfg.kernel = KernelSpec::uniform();
    for (int side : {0, 1}) {
      StepEstimate path = fit_path(ds, side, na_cfg);
      const auto na = oracle::nelson_aalen_oracle(ds, side, na_cfg.h);
      if (path.jump_times().size() != na.size()) {
        na_exact = false;
        continue;
      }
      for (std::size_t i = 0; i < na.size(); ++i) {
        if (path.j_flags()[i] != 1) na_exact = false;
        if (path.increments()[i](0) != na[i].increment[0]) na_exact = false;
      }
    }
  }
  const double secs = now_seconds() - t0;
  const bool pass = structure_ok && na_exact && worst < 1e-10 && secs < 10.0;
  report(2, pass,
         fmt("estimator oracle equivalence on 100 datasets: max increment deviation %.2e "
             "(tol 1e-10), jump/flag structure %s, Nelson-Aalen reduction %s, %.2fs (< 10s)",
             worst, structure_ok ? "identical" : "MISMATCH",
             na_exact ? "bit-exact" : "MISMATCH", secs));
}

void criterion_3() {
  std::mt19937_64 gen(5550123);
  bool exact = true;
  double worst = 0.0;
  const double horizon = 4.0;
  FitConfig cfg;
  cfg.p = 0;
  cfg.h = 0.8;
  cfg.kernel = KernelSpec::uniform();
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 10 + static_cast<int>(gen() % 39);
    SurvivalDataset ds = random_dataset(gen, n, horizon, cfg.h);
    const double nn = static_cast<double>(ds.size());
    for (int side : {0, 1}) {
      const double got = variance_path(ds, side, cfg, {horizon})[0](0, 0);
      // Independent Nelson-Aalen variance routine: per-event 1/m^2 with its
      // own at-risk counting, accumulated in event-time order and scaled by
      // n*h exactly like the estimator contract.
      double acc = 0.0;
      std::vector<std::pair<double, int>> events;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.records()[i];
        if (!r.event || ds.side(i) != side) continue;
        if (std::abs(r.forcing) > cfg.h) continue;
        events.push_back({r.time, static_cast<int>(i)});
      }
      std::sort(events.begin(), events.end());
      for (const auto& [t, idx] : events) {
        long m = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const auto& r = ds.records()[i];
          if (ds.side(i) != side || r.time < t) continue;
          if (std::abs(r.forcing) > cfg.h) continue;
          ++m;
        }
        const double q = 1.0 / static_cast<double>(m);
        acc += q * q;
      }
      const double want = nn * cfg.h * acc;
      if (got != want) exact = false;
      worst = std::max(worst, std::abs(got - want));
    }
  }
  report(3, exact || worst < 1e-15,
         fmt("variance oracle: p=0 per-event 1/m^2 reduction on 100 datasets, "
             "max deviation %.2e (%s)",
             worst, exact ? "bit-exact" : "within 1e-15"));
}

// ---------------------------------------------------------------------------
// Shared DGP for criteria 4-7: quadratic-in-z hazards, no frailty.
// ---------------------------------------------------------------------------
DGPSpec rate_dgp() {
  DGPSpec spec;
  spec.baseline = {0.3, 0.0, -0.2, 0.0};
  spec.effect = {0.2, 0.0, 8.0, 0.0};
  spec.frailty_mode = FrailtyMode::both;
  spec.frailty_var = 0.0;
  spec.forcing = ForcingFamily::uniform;
  spec.forcing_halfwidth = 1.0;
  spec.censor_rate = 0.2;
  spec.horizon = 1.0;
  spec.cutoff = 0.0;
  return spec;
}

ExperimentPlan base_plan(const DGPSpec& dgp) {
  ExperimentPlan plan;
  plan.dgp = dgp;
  plan.p = 1;
  plan.nu = 0;
  plan.q = 2;
  plan.b_factor = 2.0;
  plan.alpha = 0.05;
  plan.kernel = KernelSpec::uniform();
  plan.eval_times = {dgp.horizon};
  return plan;
}

int mc_threads() { return 8; }

void criterion_4() {
  const double t0 = now_seconds();
  ExperimentPlan plan = base_plan(rate_dgp());
  plan.sample_sizes = {20000};
  plan.bandwidths = {0.1, 0.2, 0.4};
  plan.replications = 1000;
  plan.seed = 401;
  plan.dgp.seed = 401;
  const MCReport rep = run_experiment(plan, mc_threads());
  const SlopeFit fit = bias_rate_check(rep, 20000, 1.0);
  const double secs = now_seconds() - t0;
  const bool pass =
      fit.conclusive && fit.slope >= 1.5 && fit.slope <= 2.5 && secs < 600.0;
  report(4, pass,
         fmt("bias rate: log-log slope %.3f (se %.3f) in [1.5, 2.5], R=1000, n=20000, "
             "h in {0.1,0.2,0.4}, %.1fs (< 600s)",
             fit.slope, fit.stderr_slope, secs));
}

void criteria_5_and_6() {
  ExperimentPlan plan = base_plan(rate_dgp());
  plan.sample_sizes = {1000, 4000};
  plan.rule = {0.8, -0.2};
  plan.replications = 500;
  plan.seed = 501;
  plan.dgp.seed = 501;
  const MCReport rep = run_experiment(plan, mc_threads());

  const double h1 = 0.8 * std::pow(1000.0, -0.2);
  const double h4 = 0.8 * std::pow(4000.0, -0.2);
  const MCCell& c1 = rep.cell(1000, h1, 1.0);
  const MCCell& c4 = rep.cell(4000, h4, 1.0);

  const double theory = theoretical_leading_bias(plan.dgp, plan.kernel, 1, 0, 1.0, h4);
  const bool smaller = std::abs(c4.mean_bias) < std::abs(c1.mean_bias);
  const bool matches = std::abs(c4.mean_bias - theory) <= 3.0 * c4.mc_se;
  report(5, smaller && matches,
         fmt("consistency: |bias| %.4f (n=1000) -> %.4f (n=4000), theoretical leading bias "
             "%.4f, |diff| %.4f <= 3 MC-SE (%.4f)",
             std::abs(c1.mean_bias), std::abs(c4.mean_bias), theory,
             std::abs(c4.mean_bias - theory), 3.0 * c4.mc_se));

  const double ratio = c4.mean_estimated_var / c4.empirical_var;
  const double oracle0 = limiting_variance_side(plan.dgp, plan.kernel, 1, 0, 1.0, 0);
  const double oracle1 = limiting_variance_side(plan.dgp, plan.kernel, 1, 0, 1.0, 1);
  const double rel0 = std::abs(c4.mean_var_side0 - oracle0) / oracle0;
  const double rel1 = std::abs(c4.mean_var_side1 - oracle1) / oracle1;
  const bool pass_ratio = ratio >= 0.8 && ratio <= 1.25;
  const bool pass_sides = rel0 <= 0.10 && rel1 <= 0.10;
  report(6, pass_ratio && pass_sides,
         fmt("variance consistency: mean(est var)/empirical var = %.3f in [0.8, 1.25]; "
             "per-side V vs limit: control %.1f%%, treated %.1f%% (tol 10%%)",
             ratio, 100.0 * rel0, 100.0 * rel1));
}

void criterion_7() {
  const DGPSpec dgp = rate_dgp();
  // MSE-optimal bandwidth constant from the DGP oracle: minimizing
  // (B c^2)^2 n^{-4/5} + V / (c n^{4/5}) gives c* = (V / (4 B^2))^{1/5},
  // where B is the leading-bias coefficient at h = 1 and V the limiting
  // variance scale. At this bandwidth |bias|/sd = 1/2, so the uncorrected
  // interval must undercover.
  const double bias_coeff = theoretical_leading_bias(dgp, KernelSpec::uniform(), 1, 0, 1.0, 1.0);
  const double var_scale = limiting_variance_oracle(dgp, KernelSpec::uniform(), 1, 0, 1.0);
  const double c_star = std::pow(var_scale / (4.0 * bias_coeff * bias_coeff), 0.2);

  ExperimentPlan plan = base_plan(dgp);
  plan.sample_sizes = {4000};
  const double h_robust = 0.8 * std::pow(4000.0, -0.2);
  const double h_mse = c_star * std::pow(4000.0, -0.2);
  plan.bandwidths = {h_robust, h_mse};  // shared replicates pair the two arms
  plan.replications = 1000;
  plan.seed = 701;
  plan.dgp.seed = 701;
  const MCReport rep = run_experiment(plan, mc_threads());
  const MCCell& robust_cell = rep.cell(4000, h_robust, 1.0);
  const MCCell& mse_cell = rep.cell(4000, h_mse, 1.0);

  // Undersmoothed intervals: h so that n h^5 -> 0.
  ExperimentPlan us = plan;
  us.bandwidths.clear();
  us.rule = {0.8, -0.25};
  us.seed = 702;
  us.dgp.seed = 702;
  const MCReport us_rep = run_experiment(us, mc_threads());
  const double h_us = 0.8 * std::pow(4000.0, -0.25);
  const MCCell& usc = us_rep.cell(4000, h_us, 1.0);

  const bool robust_ok =
      robust_cell.coverage_robust >= 0.91 && robust_cell.coverage_robust <= 0.98;
  const bool us_ok = usc.coverage_raw >= 0.91 && usc.coverage_raw <= 0.98;
  const bool directional = mse_cell.coverage_raw < robust_cell.coverage_robust;
  report(7, robust_ok && us_ok && directional,
         fmt("coverage: robust-bc %.3f in [0.91, 0.98]; undersmoothed %.3f in [0.91, 0.98]; "
             "conventional (uncorrected, h = %.3f MSE-optimal) %.3f < robust %.3f",
             robust_cell.coverage_robust, usc.coverage_raw, h_mse, mse_cell.coverage_raw,
             robust_cell.coverage_robust));
}

void criterion_8() {
  DGPSpec spec;
  spec.baseline = {1.0, 0.0, 0.0, 0.0};
  spec.effect = {1.0, 0.0, 0.0, 0.0};
  spec.frailty_mode = FrailtyMode::both;
  spec.frailty_var = 0.5;
  spec.forcing_halfwidth = 1.0;
  spec.censor_rate = 0.2;
  spec.horizon = 1.0;
  spec.cutoff = 0.0;

  ExperimentPlan plan = base_plan(spec);
  plan.sample_sizes = {4000};
  plan.rule = {0.8, -0.2};
  plan.replications = 500;
  plan.seed = 801;
  plan.dgp.seed = 801;
  const MCReport rep = run_experiment(plan, mc_threads());
  const double h = 0.8 * std::pow(4000.0, -0.2);
  const MCCell& cell = rep.cell(4000, h, 1.0);

  const double gap = std::abs(cell.theta_true - cell.theta_risk_true);
  const bool separated = gap >= 5.0 * cell.mc_se;
  const bool near_risk = std::abs(cell.mean_estimate - cell.theta_risk_true) <= 3.0 * cell.mc_se;
  const bool far_from_marginal =
      std::abs(cell.mean_estimate - cell.theta_true) > 3.0 * cell.mc_se;
  report(8, separated && near_risk && far_from_marginal,
         fmt("confounded estimand: mean %.4f vs Theta_risk %.4f (|diff| %.4f <= 3 MC-SE %.4f) "
             "and vs Theta %.4f (|diff| %.4f > 3 MC-SE); estimand gap %.3f >= 5 MC-SE",
             cell.mean_estimate, cell.theta_risk_true,
             std::abs(cell.mean_estimate - cell.theta_risk_true), 3.0 * cell.mc_se,
             cell.theta_true, std::abs(cell.mean_estimate - cell.theta_true), gap));
}

void criterion_9() {
  // Full seeded pipeline: simulate -> csv round trip -> infer, twice; and the
  // Monte Carlo harness across thread counts 1 and 8.
  DGPSpec spec = rate_dgp();
  spec.seed = 901;
  auto pipeline = [&]() {
    const SurvivalDataset ds = simulate(spec, 2000);
    std::ostringstream csv;
    write_csv(ds, csv);
    std::istringstream in(csv.str());
    const SurvivalDataset back = read_csv_stream(in, spec.cutoff, spec.horizon, "pipe");
    InferenceConfig icfg;
    icfg.fit.p = 1;
    icfg.fit.h = 0.25;
    icfg.fit.kernel = KernelSpec::uniform();
    icfg.q = 2;
    icfg.b = 0.5;
    icfg.mode = CIMode::robust_bc;
    const EffectEstimate est = confidence_band(back, icfg, {0.5, 1.0});
    std::ostringstream out;
    out << csv.str();
    char buf[256];
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n", est.grid[i],
                    est.theta[i], est.theta_bc[i], est.var_conventional[i],
                    est.var_robust[i]);
      out << buf;
    }
    return out.str();
  };
  const bool pipeline_stable = pipeline() == pipeline();

  ExperimentPlan plan = base_plan(rate_dgp());
  plan.sample_sizes = {500};
  plan.bandwidths = {0.3};
  plan.replications = 64;
  plan.seed = 902;
  plan.dgp.seed = 902;
  std::ostringstream s1, s8, s1b;
  write_report_csv(run_experiment(plan, 1), s1);
  write_report_csv(run_experiment(plan, 8), s8);
  write_report_csv(run_experiment(plan, 1), s1b);
  const bool harness_stable = s1.str() == s8.str() && s1.str() == s1b.str();
  report(9, pipeline_stable && harness_stable,
         fmt("determinism: pipeline rerun %s; harness identical across runs and thread "
             "counts 1 vs 8: %s",
             pipeline_stable ? "byte-identical" : "DIFFERS",
             harness_stable ? "yes" : "NO"));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criteria_5_and_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
