#include "rdhaz/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "rdhaz/config.hpp"
#include "rdhaz/errors.hpp"
#include "rdhaz/kernel_constants.hpp"

namespace rdhaz {

void ExperimentPlan::validate() const {
  dgp.validate();
  if (sample_sizes.empty()) throw ValidationError("plan: sample_sizes is empty");
  if (replications < 2) throw ValidationError("plan: at least 2 replications required");
  if (eval_times.empty()) throw ValidationError("plan: eval_times is empty");
  for (double t : eval_times)
    if (t < 0.0 || t > dgp.horizon)
      throw ValidationError("plan: eval time outside [0, horizon]");
  for (double h : bandwidths)
    if (!(h > 0.0)) throw ValidationError("plan: bandwidths must be positive");
  if (bandwidths.empty() && !(rule.c > 0.0))
    throw ValidationError("plan: bandwidth rule constant must be positive");
  if (p < 0 || p > kMaxOrder || nu < 0 || nu > p)
    throw ValidationError("plan: invalid (p, nu)");
  if (q < p + 1 || q > kMaxOrder) throw ValidationError("plan: pilot order q must be in [p+1, 4]");
  if (!(b_factor >= 1.0)) throw ValidationError("plan: b_factor must be >= 1");
}

std::vector<double> ExperimentPlan::bandwidths_for(std::size_t n) const {
  if (!bandwidths.empty()) return bandwidths;
  return {rule.c * std::pow(static_cast<double>(n), rule.exponent)};
}

namespace {

struct ReplicateRow {
  bool ok = false;
  bool degenerate = false;
  // Per eval time:
  std::vector<double> theta, theta_bc, var_conv, var_robust;
  std::vector<char> cover_raw, cover_bc, cover_robust;
  std::vector<double> vside0, vside1;
  double j_fraction = 1.0;
};

ReplicateRow run_replicate(const ExperimentPlan& plan, std::size_t n, double h, double b,
                           std::uint64_t replicate, const std::vector<TrueEffect>& truths) {
  ReplicateRow row;
  try {
    const SurvivalDataset ds = simulate_replicate(plan.dgp, n, replicate);
    InferenceConfig icfg;
    icfg.fit.p = plan.p;
    icfg.fit.nu = plan.nu;
    icfg.fit.h = h;
    icfg.fit.kernel = plan.kernel;
    icfg.fit.ridge_guard = plan.ridge_guard;
    icfg.q = plan.q;
    icfg.b = b;
    icfg.alpha = plan.alpha;
    icfg.mode = CIMode::robust_bc;
    const EffectEstimate est = confidence_band(ds, icfg, plan.eval_times);
    const std::size_t m = plan.eval_times.size();
    row.theta.resize(m);
    row.theta_bc.resize(m);
    row.var_conv.resize(m);
    row.var_robust.resize(m);
    row.cover_raw.resize(m);
    row.cover_bc.resize(m);
    row.cover_robust.resize(m);
    row.vside0.resize(m);
    row.vside1.resize(m);
    const double z = plan.alpha >= 1.0 ? 0.0 : normal_quantile(1.0 - plan.alpha / 2.0);
    for (std::size_t i = 0; i < m; ++i) {
      row.theta[i] = est.theta[i];
      row.theta_bc[i] = est.theta_bc[i];
      row.var_conv[i] = est.var_conventional[i];
      row.var_robust[i] = est.var_robust[i];
      row.vside0[i] = est.var_side[0][i];
      row.vside1[i] = est.var_side[1][i];
      const double target = truths[i].theta_risk;
      const double se_c = std::sqrt(std::max(est.var_conventional[i], 0.0));
      const double se_r = std::sqrt(std::max(est.var_robust[i], 0.0));
      row.cover_raw[i] = std::abs(est.theta[i] - target) <= z * se_c;
      row.cover_bc[i] = std::abs(est.theta_bc[i] - target) <= z * se_c;
      row.cover_robust[i] = std::abs(est.theta_bc[i] - target) <= z * se_r;
    }
    row.j_fraction = est.j_fraction_main;
    row.degenerate = est.j_fraction_main == 0.0;
    row.ok = true;
  } catch (const std::exception&) {
    row.ok = false;
    row.degenerate = true;
  }
  return row;
}

}  // namespace

MCReport run_experiment(const ExperimentPlan& plan, int threads) {
  plan.validate();
  if (threads < 1) threads = 1;
  MCReport report;
  report.plan = plan;
  const std::size_t m = plan.eval_times.size();

  for (std::size_t n : plan.sample_sizes) {
    for (double h : plan.bandwidths_for(n)) {
      const double b = plan.b_factor * h;
      std::vector<TrueEffect> truths(m);
      for (std::size_t i = 0; i < m; ++i) truths[i] = true_theta(plan.dgp, plan.eval_times[i]);

      const auto start = std::chrono::steady_clock::now();
      std::vector<ReplicateRow> rows(plan.replications);
      const int R = plan.replications;
      if (threads == 1) {
        for (int r = 0; r < R; ++r)
          rows[r] = run_replicate(plan, n, h, b, static_cast<std::uint64_t>(r), truths);
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < threads; ++w) {
          pool.emplace_back([&]() {
            for (;;) {
              const int r = next.fetch_add(1);
              if (r >= R) break;
              rows[r] = run_replicate(plan, n, h, b, static_cast<std::uint64_t>(r), truths);
            }
          });
        }
        for (auto& th : pool) th.join();
      }
      const auto stop = std::chrono::steady_clock::now();
      const double secs = std::chrono::duration<double>(stop - start).count();

      // Reduce in replicate order; parallel and serial runs agree exactly.
      for (std::size_t i = 0; i < m; ++i) {
        MCCell cell;
        cell.n = n;
        cell.h = h;
        cell.b = b;
        cell.t = plan.eval_times[i];
        cell.replications = R;
        cell.theta_true = truths[i].theta;
        cell.theta_risk_true = truths[i].theta_risk;
        cell.runtime_seconds = secs;
        double sum = 0.0, sumsq = 0.0, sum_bc = 0.0;
        double sum_var = 0.0, sum_rvar = 0.0, sum_j = 0.0, sum_v0 = 0.0, sum_v1 = 0.0;
        long cov_raw = 0, cov_bc = 0, cov_rob = 0;
        for (const ReplicateRow& row : rows) {
          if (!row.ok || row.degenerate) {
            ++cell.degenerate;
            continue;
          }
          ++cell.used;
          sum += row.theta[i];
          sumsq += row.theta[i] * row.theta[i];
          sum_bc += row.theta_bc[i];
          sum_var += row.var_conv[i];
          sum_rvar += row.var_robust[i];
          sum_j += row.j_fraction;
          sum_v0 += row.vside0[i];
          sum_v1 += row.vside1[i];
          cov_raw += row.cover_raw[i];
          cov_bc += row.cover_bc[i];
          cov_rob += row.cover_robust[i];
        }
        if (cell.used > 0) {
          const double used = cell.used;
          cell.mean_estimate = sum / used;
          cell.mean_bias = cell.mean_estimate - cell.theta_risk_true;
          cell.empirical_var =
              cell.used > 1 ? (sumsq - sum * sum / used) / (used - 1.0) : 0.0;
          cell.mc_se = std::sqrt(std::max(cell.empirical_var, 0.0) / used);
          cell.mean_estimated_var = sum_var / used;
          cell.mean_bc_estimate = sum_bc / used;
          cell.mean_bc_bias = cell.mean_bc_estimate - cell.theta_risk_true;
          cell.mean_robust_var = sum_rvar / used;
          cell.mean_j_fraction = sum_j / used;
          cell.mean_var_side0 = sum_v0 / used;
          cell.mean_var_side1 = sum_v1 / used;
          cell.coverage_raw = cov_raw / used;
          cell.coverage_bc = cov_bc / used;
          cell.coverage_robust = cov_rob / used;
        }
        const double nominal = 1.0 - plan.alpha;
        const double band = 1.96 * std::sqrt(nominal * (1.0 - nominal) /
                                             std::max(cell.used, 1));
        cell.coverage_band_lo = nominal - band;
        cell.coverage_band_hi = nominal + band;
        cell.cell_degenerate = cell.degenerate > 0.1 * cell.replications;
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

const MCCell& MCReport::cell(std::size_t n, double h, double t) const {
  for (const MCCell& c : cells)
    if (c.n == n && std::abs(c.h - h) < 1e-12 && std::abs(c.t - t) < 1e-12) return c;
  throw ValidationError("MCReport: no cell for requested (n, h, t)");
}

// Runtimes stay out of the CSV so seeded runs are byte-identical; they remain
// available on the MCCell struct and in the log stream.
void write_report_csv(const MCReport& report, std::ostream& out) {
  out << "n,h,b,t,replications,used,degenerate,cell_degenerate,theta_true,theta_risk_true,"
         "mean_estimate,mean_bias,mc_se,empirical_var,mean_estimated_var,"
         "mean_bc_estimate,mean_bc_bias,mean_robust_var,"
         "coverage_raw,coverage_bc,coverage_robust,coverage_band_lo,coverage_band_hi,"
         "mean_j_fraction,mean_var_side0,mean_var_side1\n";
  char buf[1024];
  for (const MCCell& c : report.cells) {
    std::snprintf(
        buf, sizeof(buf),
        "%zu,%.12g,%.12g,%.12g,%d,%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
        "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
        c.n, c.h, c.b, c.t, c.replications, c.used, c.degenerate, c.cell_degenerate ? 1 : 0,
        c.theta_true,
        c.theta_risk_true, c.mean_estimate, c.mean_bias, c.mc_se, c.empirical_var,
        c.mean_estimated_var, c.mean_bc_estimate, c.mean_bc_bias, c.mean_robust_var,
        c.coverage_raw, c.coverage_bc, c.coverage_robust, c.coverage_band_lo,
        c.coverage_band_hi, c.mean_j_fraction, c.mean_var_side0, c.mean_var_side1);
    out << buf;
  }
}

SlopeFit bias_rate_check(const MCReport& report, std::size_t n, double t) {
  std::vector<double> hs, biases, ses;
  for (const MCCell& c : report.cells) {
    if (c.n != n || std::abs(c.t - t) > 1e-12 || c.used == 0) continue;
    hs.push_back(c.h);
    biases.push_back(c.mean_bias);
    ses.push_back(c.mc_se);
  }
  if (hs.size() < 3)
    throw ValidationError("bias_rate_check needs at least 3 bandwidths at fixed n");
  SlopeFit fit;
  bool any_signal = false;
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (std::abs(biases[i]) > 2.0 * ses[i]) any_signal = true;
  if (!any_signal) {
    fit.conclusive = false;
    return fit;
  }
  // Least squares of log|bias| on log h.
  const std::size_t k = hs.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> xs(k), ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    xs[i] = std::log(hs[i]);
    ys[i] = std::log(std::abs(biases[i]));
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = k * sxx - sx * sx;
  fit.slope = (k * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.slope * sx) / k;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ys[i] - intercept - fit.slope * xs[i];
    rss += r * r;
  }
  if (k > 2) fit.stderr_slope = std::sqrt(rss / (k - 2) / (sxx - sx * sx / k));
  fit.conclusive = true;
  return fit;
}

DGPSpec dgp_from_config(const Config& cfg) {
  DGPSpec spec;
  spec.baseline.c0 = cfg.get_double("baseline_c0");
  spec.baseline.c1 = cfg.get_double("baseline_c1", 0.0);
  spec.baseline.c2 = cfg.get_double("baseline_c2", 0.0);
  spec.baseline.ct = cfg.get_double("baseline_ct", 0.0);
  spec.effect.c0 = cfg.get_double("effect_d0");
  spec.effect.c1 = cfg.get_double("effect_d1", 0.0);
  spec.effect.c2 = cfg.get_double("effect_d2", 0.0);
  spec.effect.ct = cfg.get_double("effect_dt", 0.0);
  const std::string mode = cfg.get_string("frailty_mode", "baseline");
  if (mode == "baseline" || mode == "baseline_only")
    spec.frailty_mode = FrailtyMode::baseline_only;
  else if (mode == "both")
    spec.frailty_mode = FrailtyMode::both;
  else
    throw ValidationError("frailty_mode must be 'baseline' or 'both'");
  spec.frailty_var = cfg.get_double("frailty_var", 0.0);
  const std::string forcing = cfg.get_string("forcing", "uniform");
  if (forcing == "uniform")
    spec.forcing = ForcingFamily::uniform;
  else if (forcing == "triangular")
    spec.forcing = ForcingFamily::triangular;
  else
    throw ValidationError("forcing must be 'uniform' or 'triangular'");
  spec.forcing_halfwidth = cfg.get_double("forcing_halfwidth", 1.0);
  spec.censor_rate = cfg.get_double("censor_rate", 0.0);
  spec.horizon = cfg.get_double("horizon");
  spec.cutoff = cfg.get_double("cutoff", 0.0);
  spec.seed = cfg.get_seed("seed", 1);
  spec.validate();
  return spec;
}

ExperimentPlan plan_from_config(const Config& cfg) {
  ExperimentPlan plan;
  plan.dgp = dgp_from_config(cfg);
  for (double v : cfg.get_double_list("sample_sizes")) {
    if (v < 1.0 || v != std::floor(v))
      throw ValidationError("plan: sample_sizes must be positive integers");
    plan.sample_sizes.push_back(static_cast<std::size_t>(v));
  }
  if (cfg.has("bandwidths")) plan.bandwidths = cfg.get_double_list("bandwidths");
  plan.rule.c = cfg.get_double("bandwidth_c", 0.8);
  plan.rule.exponent = cfg.get_double("bandwidth_exponent", -0.2);
  plan.p = static_cast<int>(cfg.get_long("p", 1));
  plan.nu = static_cast<int>(cfg.get_long("nu", 0));
  plan.q = static_cast<int>(cfg.get_long("q", plan.p + 1));
  plan.b_factor = cfg.get_double("b_factor", 2.0);
  plan.alpha = cfg.get_double("alpha", 0.05);
  plan.kernel = KernelSpec::by_name(cfg.get_string("kernel", "uniform"));
  plan.ridge_guard = cfg.get_double("ridge_guard", 1e12);
  plan.replications = static_cast<int>(cfg.get_long("replications"));
  plan.eval_times = cfg.get_double_list("eval_times");
  plan.seed = cfg.get_seed("seed", 1);
  plan.dgp.seed = plan.seed;
  plan.validate();
  return plan;
}

}  // namespace rdhaz
