#include "rdhaz/lp_aalen.hpp"

#include <algorithm>
#include <cmath>

#include "rdhaz/errors.hpp"
#include "rdhaz/kernel_constants.hpp"
#include "rdhaz/sweep.hpp"

namespace rdhaz {

void FitConfig::validate() const {
  if (!(h > 0.0)) throw ValidationError("bandwidth h must be positive");
  if (p < 0 || p > kMaxOrder)
    throw ValidationError("polynomial order p must lie in [0, " + std::to_string(kMaxOrder) + "]");
  if (nu < 0 || nu > p) throw ValidationError("derivative order nu must lie in [0, p]");
  if (!(ridge_guard > 1.0)) throw ValidationError("ridge_guard must exceed 1");
}

void StepEstimate::push_jump(double time, Eigen::VectorXd increment, int flag) {
  times_.push_back(time);
  increments_.push_back(std::move(increment));
  flags_.push_back(flag);
}

void StepEstimate::finalize() {
  prefix_.resize(times_.size());
  Eigen::VectorXd run = Eigen::VectorXd::Zero(p_ + 1);
  for (std::size_t i = 0; i < times_.size(); ++i) {
    run += increments_[i];
    prefix_[i] = run;
  }
  finalized_ = true;
}

Eigen::VectorXd StepEstimate::cumulative(double t) const {
  if (!finalized_ || times_.empty() || t < times_.front())
    return Eigen::VectorXd::Zero(p_ + 1);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t idx = static_cast<std::size_t>(it - times_.begin());
  return prefix_[idx - 1];
}

double StepEstimate::j_fraction() const {
  if (flags_.empty()) return 1.0;
  long up = 0;
  for (int f : flags_) up += f;
  return static_cast<double>(up) / static_cast<double>(flags_.size());
}

Eigen::MatrixXd design_matrix(const SurvivalDataset& ds, double t, int side,
                              const FitConfig& cfg) {
  cfg.validate();
  if (t < 0.0 || t > ds.horizon())
    throw ValidationError("design_matrix: t outside [0, horizon]");
  const std::size_t n = ds.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(cfg.p + 1, cfg.p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const SurvivalRecord& r = ds.records()[i];
    if (ds.side(i) != side || r.time < t) continue;
    const double u = (r.forcing - ds.cutoff()) / cfg.h;
    const double k = cfg.kernel.two_sided(u);
    if (k <= 0.0) continue;
    const Eigen::VectorXd b = poly_basis(u, cfg.p);
    g.noalias() += (k / cfg.h) * b * b.transpose();
  }
  return g / static_cast<double>(n == 0 ? 1 : n);
}

namespace {

bool matrix_pd(const Eigen::MatrixXd& m, double ridge_guard) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  if (m.rows() <= 3)
    eig.computeDirect(m, Eigen::EigenvaluesOnly);
  else
    eig.compute(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 && hi > 0.0 && hi / lo <= ridge_guard;
}

}  // namespace

int j_flag(const SurvivalDataset& ds, double t, const FitConfig& cfg) {
  const Eigen::MatrixXd g0 = design_matrix(ds, t, 0, cfg);
  const Eigen::MatrixXd g1 = design_matrix(ds, t, 1, cfg);
  return (matrix_pd(g0, cfg.ridge_guard) && matrix_pd(g1, cfg.ridge_guard)) ? 1 : 0;
}

std::pair<StepEstimate, StepEstimate> fit_both(const SurvivalDataset& ds,
                                               const FitConfig& cfg) {
  cfg.validate();
  StepEstimate path0(cfg.p, cfg.h);
  StepEstimate path1(cfg.p, cfg.h);
  const Eigen::MatrixXd rescale = rescale_matrix(cfg.h, cfg.p);

  EventSweep sweep(ds, cfg.kernel, {{cfg.p, cfg.h}}, cfg.ridge_guard);
  Eigen::VectorXd sum0(cfg.p + 1), sum1(cfg.p + 1);
  sweep.run([&](const SweepTimePoint& tp) {
    bool any0 = false, any1 = false;
    sum0.setZero();
    sum1.setZero();
    for (std::size_t e = 0; e < tp.events.size(); ++e) {
      if (tp.kval(0, e) <= 0.0) continue;
      if (tp.events[e].side == 1) {
        sum1 += tp.weight(0, e);
        any1 = true;
      } else {
        sum0 += tp.weight(0, e);
        any0 = true;
      }
    }
    const int flag = tp.flag(0) ? 1 : 0;
    if (any0) path0.push_jump(tp.time, rescale * sum0, flag);
    if (any1) path1.push_jump(tp.time, rescale * sum1, flag);
  });
  path0.finalize();
  path1.finalize();
  return {std::move(path0), std::move(path1)};
}

StepEstimate fit_path(const SurvivalDataset& ds, int side, const FitConfig& cfg) {
  auto both = fit_both(ds, cfg);
  return side == 1 ? std::move(both.second) : std::move(both.first);
}

double derivative_estimate(const StepEstimate& path, const FitConfig& cfg, double t) {
  if (cfg.nu > path.order()) throw ValidationError("derivative order exceeds path order");
  double fact = 1.0;
  for (int i = 2; i <= cfg.nu; ++i) fact *= i;
  return fact * path.cumulative(t)(cfg.nu);
}

double theta_estimate(const SurvivalDataset& ds, const FitConfig& cfg, double t) {
  auto [path0, path1] = fit_both(ds, cfg);
  return derivative_estimate(path1, cfg, t) - derivative_estimate(path0, cfg, t);
}

}  // namespace rdhaz
