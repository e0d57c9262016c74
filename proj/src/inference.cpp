#include "rdhaz/inference.hpp"

#include <algorithm>
#include <cmath>

#include "rdhaz/errors.hpp"
#include "rdhaz/kernel_constants.hpp"
#include "rdhaz/sweep.hpp"

namespace rdhaz {

CIMode ci_mode_from_string(const std::string& s) {
  if (s == "raw" || s == "undersmoothed") return CIMode::undersmoothed;
  if (s == "bc" || s == "conventional-bc") return CIMode::conventional_bc;
  if (s == "robust" || s == "robust-bc") return CIMode::robust_bc;
  throw ValidationError("unknown CI mode '" + s + "' (expected raw, bc, or robust)");
}

std::string to_string(CIMode mode) {
  switch (mode) {
    case CIMode::undersmoothed:
      return "raw";
    case CIMode::conventional_bc:
      return "bc";
    case CIMode::robust_bc:
      return "robust";
  }
  return "?";
}

void InferenceConfig::validate() const {
  fit.validate();
  if (mode == CIMode::undersmoothed) return;
  if (q < fit.p + 1)
    throw ValidationError("pilot order q must be at least p + 1");
  if (q > kMaxOrder)
    throw ValidationError("pilot order q capped at " + std::to_string(kMaxOrder));
  if (!(b >= fit.h)) throw ValidationError("pilot bandwidth b must satisfy b >= h");
}

double normal_quantile(double prob) {
  // Acklam's rational approximation to the inverse normal CDF.
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.5) return 0.0;
    throw ValidationError("normal_quantile: probability must lie in (0,1)");
  }
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (prob < plow) {
    const double u = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (prob <= 1.0 - plow) {
    const double u = prob - 0.5;
    const double r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double u = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  return x;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_grid(const std::vector<double>& grid, double horizon) {
  if (grid.empty()) throw ValidationError("query grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > horizon)
      throw ValidationError("query time outside [0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1])
      throw ValidationError("query grid must be ascending");
  }
}

// Accumulates sums over event times, snapshotting at grid points. Grid must
// be ascending; values at grid time t include all events with time <= t.
class GridSnapshotter {
 public:
  GridSnapshotter(const std::vector<double>& grid) : grid_(grid) {}

  // Call with the current event time before accumulating its contributions.
  template <typename Snapshot>
  void advance(double time, const Snapshot& snap) {
    while (next_ < grid_.size() && grid_[next_] < time) {
      snap(next_);
      ++next_;
    }
  }
  template <typename Snapshot>
  void flush(const Snapshot& snap) {
    while (next_ < grid_.size()) {
      snap(next_);
      ++next_;
    }
  }

 private:
  const std::vector<double>& grid_;
  std::size_t next_ = 0;
};

}  // namespace

std::vector<Eigen::MatrixXd> variance_path(const SurvivalDataset& ds, int side,
                                           const FitConfig& cfg,
                                           const std::vector<double>& grid) {
  cfg.validate();
  check_grid(grid, ds.horizon());
  const double n = static_cast<double>(ds.size());
  const double scale = n * cfg.h;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cfg.p + 1, cfg.p + 1);
  std::vector<Eigen::MatrixXd> out(grid.size());
  GridSnapshotter snap(grid);
  auto save = [&](std::size_t gi) { out[gi] = scale * acc; };

  EventSweep sweep(ds, cfg.kernel, {{cfg.p, cfg.h}}, cfg.ridge_guard);
  sweep.run([&](const SweepTimePoint& tp) {
    snap.advance(tp.time, save);
    for (std::size_t e = 0; e < tp.events.size(); ++e) {
      if (tp.events[e].side != side) continue;
      const Eigen::VectorXd& w = tp.weight(0, e);
      acc.noalias() += w * w.transpose();
    }
  });
  snap.flush(save);
  return out;
}

double theta_variance(const SurvivalDataset& ds, const FitConfig& cfg, double t, int nu) {
  FitConfig c = cfg;
  c.nu = nu;
  c.validate();
  const std::vector<double> grid{t};
  const Eigen::MatrixXd v0 = variance_path(ds, 0, c, grid)[0];
  const Eigen::MatrixXd v1 = variance_path(ds, 1, c, grid)[0];
  const double n = static_cast<double>(std::max<std::size_t>(ds.size(), 1));
  const double quad = v0(nu, nu) + v1(nu, nu);
  const double fact = factorial(nu);
  return fact * fact * quad / (n * std::pow(c.h, 2 * nu + 1));
}

std::vector<Eigen::MatrixXd> cross_covariation(const SurvivalDataset& ds, int side,
                                               const InferenceConfig& icfg,
                                               const std::vector<double>& grid) {
  icfg.validate();
  check_grid(grid, ds.horizon());
  const FitConfig& cfg = icfg.fit;
  const double n = static_cast<double>(ds.size());
  const double scale = n * icfg.b;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cfg.p + 1, icfg.q + 1);
  std::vector<Eigen::MatrixXd> out(grid.size());
  GridSnapshotter snap(grid);
  auto save = [&](std::size_t gi) { out[gi] = scale * acc; };

  EventSweep sweep(ds, cfg.kernel, {{cfg.p, cfg.h}, {icfg.q, icfg.b}}, cfg.ridge_guard);
  sweep.run([&](const SweepTimePoint& tp) {
    snap.advance(tp.time, save);
    for (std::size_t e = 0; e < tp.events.size(); ++e) {
      if (tp.events[e].side != side) continue;
      const Eigen::VectorXd& wp = tp.weight(0, e);
      const Eigen::VectorXd& wq = tp.weight(1, e);
      acc.noalias() += wp * wq.transpose();
    }
  });
  snap.flush(save);
  return out;
}

namespace {

// Shared single-pass engine behind bias_corrected_theta, robust_variance and
// confidence_band. Accumulates, per side, the main and pilot coefficient
// paths plus the three optional-variation paths entering the robust variance.
struct AnalysisAccumulator {
  // main fit (order p, bandwidth h)
  Eigen::VectorXd coef[2];
  // pilot fit (order q, bandwidth b)
  Eigen::VectorXd pilot_coef[2];
  // e' V e accumulation is done with full matrices; quadratic forms are
  // extracted at snapshot time
  Eigen::MatrixXd vmain[2];
  Eigen::MatrixXd vpilot[2];
  Eigen::MatrixXd vcross[2];
  long main_jumps = 0, main_jumps_ok = 0;
  long pilot_jumps = 0, pilot_jumps_ok = 0;

  AnalysisAccumulator(int p, int q) {
    for (int g = 0; g < 2; ++g) {
      coef[g] = Eigen::VectorXd::Zero(p + 1);
      pilot_coef[g] = Eigen::VectorXd::Zero(q + 1);
      vmain[g] = Eigen::MatrixXd::Zero(p + 1, p + 1);
      vpilot[g] = Eigen::MatrixXd::Zero(q + 1, q + 1);
      vcross[g] = Eigen::MatrixXd::Zero(p + 1, q + 1);
    }
  }
};

struct AnalysisSnapshot {
  double theta0, theta1;           // per-side A-hat^(nu)
  double pilot0, pilot1;           // per-side A-hat^(p+1) at pilot order
  double vq_main[2];               // e' V_{g,p,n}(t,h) e
  double vq_pilot[2];              // e_{q,p+1}' V_{g,q,n}(t,b) e_{q,p+1}
  double vq_cross[2];              // e' C-hat_g(t) e_{q,p+1}
};

}  // namespace

EffectEstimate confidence_band(const SurvivalDataset& ds, const InferenceConfig& icfg,
                               std::vector<double> grid) {
  icfg.validate();
  check_grid(grid, ds.horizon());
  const FitConfig& cfg = icfg.fit;
  const int p = cfg.p;
  const int nu = cfg.nu;
  const bool with_pilot = icfg.mode != CIMode::undersmoothed;
  const int q = with_pilot ? icfg.q : std::min(p + 1, kMaxOrder);
  const double b = with_pilot ? icfg.b : cfg.h;
  const double n = static_cast<double>(std::max<std::size_t>(ds.size(), 1));

  std::vector<SweepFit> fits{{p, cfg.h}};
  if (with_pilot) fits.push_back({q, b});

  AnalysisAccumulator acc(p, q);
  std::vector<AnalysisSnapshot> snaps(grid.size());
  GridSnapshotter snapper(grid);
  const double fact_nu = factorial(nu);
  const double fact_pilot = factorial(p + 1);
  const double hnu = std::pow(cfg.h, nu);
  const double bnu = std::pow(b, p + 1);

  auto save = [&](std::size_t gi) {
    AnalysisSnapshot& s = snaps[gi];
    // A-hat^(nu) = nu! e' H_p(h) [rescaled coef]; entry nu of H is h^{-nu}.
    s.theta0 = fact_nu * acc.coef[0](nu) / hnu;
    s.theta1 = fact_nu * acc.coef[1](nu) / hnu;
    for (int g = 0; g < 2; ++g) s.vq_main[g] = n * cfg.h * acc.vmain[g](nu, nu);
    if (with_pilot) {
      s.pilot0 = fact_pilot * acc.pilot_coef[0](p + 1) / bnu;
      s.pilot1 = fact_pilot * acc.pilot_coef[1](p + 1) / bnu;
      for (int g = 0; g < 2; ++g) {
        s.vq_pilot[g] = n * b * acc.vpilot[g](p + 1, p + 1);
        s.vq_cross[g] = n * b * acc.vcross[g](nu, p + 1);
      }
    } else {
      s.pilot0 = s.pilot1 = 0.0;
      for (int g = 0; g < 2; ++g) s.vq_pilot[g] = s.vq_cross[g] = 0.0;
    }
  };

  EventSweep sweep(ds, cfg.kernel, fits, cfg.ridge_guard);
  sweep.run([&](const SweepTimePoint& tp) {
    snapper.advance(tp.time, save);
    bool main_any = false, pilot_any = false;
    for (std::size_t e = 0; e < tp.events.size(); ++e) {
      const int g = tp.events[e].side;
      if (tp.kval(0, e) > 0.0) {
        main_any = true;
        const Eigen::VectorXd& w = tp.weight(0, e);
        acc.coef[g] += w;
        acc.vmain[g].noalias() += w * w.transpose();
      }
      if (with_pilot && tp.kval(1, e) > 0.0) {
        pilot_any = true;
        const Eigen::VectorXd& wq = tp.weight(1, e);
        acc.pilot_coef[g] += wq;
        acc.vpilot[g].noalias() += wq * wq.transpose();
        if (tp.kval(0, e) > 0.0)
          acc.vcross[g].noalias() += tp.weight(0, e) * wq.transpose();
      }
    }
    if (main_any) {
      ++acc.main_jumps;
      if (tp.flag(0)) ++acc.main_jumps_ok;
    }
    if (with_pilot && pilot_any) {
      ++acc.pilot_jumps;
      if (tp.flag(1)) ++acc.pilot_jumps_ok;
    }
  });
  snapper.flush(save);

  if (with_pilot && acc.pilot_jumps > 0 && acc.pilot_jumps_ok == 0)
    throw NumericError(
        "pilot fit degenerate: design matrix singular at every pilot event time; "
        "increase the pilot bandwidth b");

  // Kernel constant gamma_nu = e' Gamma_p^{-1} vartheta_{p,p+1}.
  const MomentConstants mc = MomentConstants::compute(cfg.kernel, p);
  const double gamma_nu = mc.gamma_inv_vartheta(nu);
  const double bc_scale = std::pow(cfg.h, p + 1 - nu) * fact_nu * gamma_nu / fact_pilot;
  const double rho = icfg.rho();
  const double rho_v = std::pow(rho, 2 * p + 3);
  const double rho_c = std::pow(rho, p + 2);
  const double var_denom = n * std::pow(cfg.h, 2 * nu + 1);
  const double z = icfg.alpha >= 1.0 ? 0.0 : normal_quantile(1.0 - icfg.alpha / 2.0);

  EffectEstimate out;
  out.grid = std::move(grid);
  const std::size_t m = out.grid.size();
  out.theta.resize(m);
  out.theta_bc.resize(m);
  out.theta_treated.resize(m);
  out.theta_control.resize(m);
  out.var_conventional.resize(m);
  out.var_robust.resize(m);
  out.ci_lo.resize(m);
  out.ci_hi.resize(m);
  out.var_side[0].resize(m);
  out.var_side[1].resize(m);

  for (std::size_t i = 0; i < m; ++i) {
    const AnalysisSnapshot& s = snaps[i];
    out.theta_control[i] = s.theta0;
    out.theta_treated[i] = s.theta1;
    out.theta[i] = s.theta1 - s.theta0;
    const double corr1 = bc_scale * s.pilot1;
    const double corr0 = bc_scale * s.pilot0;
    out.theta_bc[i] = with_pilot ? (s.theta1 - corr1) - (s.theta0 - corr0) : out.theta[i];
    out.var_side[0][i] = s.vq_main[0];
    out.var_side[1][i] = s.vq_main[1];

    const double fact2 = fact_nu * fact_nu;
    double conv = 0.0, robust = 0.0;
    for (int g = 0; g < 2; ++g) {
      conv += s.vq_main[g];
      robust += s.vq_main[g] + rho_v * gamma_nu * gamma_nu * s.vq_pilot[g] -
                2.0 * rho_c * gamma_nu * s.vq_cross[g];
    }
    out.var_conventional[i] = fact2 * conv / var_denom;
    out.var_robust[i] = with_pilot ? fact2 * robust / var_denom : out.var_conventional[i];

    double center, var;
    switch (icfg.mode) {
      case CIMode::undersmoothed:
        center = out.theta[i];
        var = out.var_conventional[i];
        break;
      case CIMode::conventional_bc:
        center = out.theta_bc[i];
        var = out.var_conventional[i];
        break;
      case CIMode::robust_bc:
      default:
        center = out.theta_bc[i];
        var = out.var_robust[i];
        break;
    }
    const double hw = z * std::sqrt(std::max(var, 0.0));
    out.ci_lo[i] = center - hw;
    out.ci_hi[i] = center + hw;
  }

  out.j_fraction_main =
      acc.main_jumps == 0 ? 1.0
                          : static_cast<double>(acc.main_jumps_ok) / acc.main_jumps;
  out.j_fraction_pilot =
      acc.pilot_jumps == 0 ? 1.0
                           : static_cast<double>(acc.pilot_jumps_ok) / acc.pilot_jumps;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double u = (ds.records()[i].forcing - ds.cutoff()) / cfg.h;
    if (cfg.kernel.two_sided(u) > 0.0) {
      if (ds.side(i) == 1)
        ++out.n_window_treated;
      else
        ++out.n_window_control;
    }
  }
  out.solve_failures = sweep.solve_failures();
  return out;
}

double bias_corrected_theta(const SurvivalDataset& ds, const InferenceConfig& icfg,
                            double t) {
  InferenceConfig c = icfg;
  if (c.mode == CIMode::undersmoothed) c.mode = CIMode::conventional_bc;
  EffectEstimate e = confidence_band(ds, c, {t});
  return e.theta_bc[0];
}

double robust_variance(const SurvivalDataset& ds, const InferenceConfig& icfg, double t,
                       int nu) {
  InferenceConfig c = icfg;
  c.fit.nu = nu;
  c.mode = CIMode::robust_bc;
  EffectEstimate e = confidence_band(ds, c, {t});
  return e.var_robust[0];
}

}  // namespace rdhaz
