#include "rdhaz/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "rdhaz/errors.hpp"
#include "rdhaz/kernel_constants.hpp"

namespace rdhaz {

EventSweep::EventSweep(const SurvivalDataset& ds, const KernelSpec& kernel,
                       std::vector<SweepFit> fits, double ridge_guard)
    : ds_(ds), ridge_guard_(ridge_guard) {
  if (fits.empty()) throw ValidationError("EventSweep: at least one fit required");
  const std::size_t n = ds.size();
  fits_.resize(fits.size());
  for (std::size_t f = 0; f < fits.size(); ++f) {
    PerFit& pf = fits_[f];
    pf.p = fits[f].p;
    pf.h = fits[f].h;
    if (pf.p < 0 || pf.p > kMaxOrder) throw ValidationError("EventSweep: order out of range");
    if (!(pf.h > 0.0)) throw ValidationError("EventSweep: bandwidth must be positive");
    pf.kval.assign(n, 0.0);
    pf.basis.assign(n, Eigen::VectorXd());
    pf.S[0] = Eigen::MatrixXd::Zero(pf.p + 1, pf.p + 1);
    pf.S[1] = Eigen::MatrixXd::Zero(pf.p + 1, pf.p + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (ds.records()[i].forcing - ds.cutoff()) / pf.h;
      const double k = kernel.two_sided(u);
      if (k <= 0.0) continue;
      pf.kval[i] = k;
      pf.basis[i] = poly_basis(u, pf.p);
      const int g = ds.side(i);
      pf.S[g].noalias() += k * pf.basis[i] * pf.basis[i].transpose();
      ++pf.window_count[g];
    }
  }
  order_.resize(n);
  for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<int>(i);
  std::sort(order_.begin(), order_.end(), [&](int a, int b) {
    const double ta = ds.records()[a].time, tb = ds.records()[b].time;
    if (ta != tb) return ta < tb;
    return a < b;
  });
}

bool EventSweep::positive_definite(const Eigen::MatrixXd& S, long count, int p) const {
  if (count < p + 1) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  if (S.rows() <= 3)
    eig.computeDirect(S, Eigen::EigenvaluesOnly);
  else
    eig.compute(S, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi > 0.0)) return false;
  return hi / lo <= ridge_guard_;
}

void EventSweep::run(const SweepCallback& cb) {
  const std::size_t n = ds_.size();
  const std::size_t nfits = fits_.size();
  SweepTimePoint tp;
  tp.flags_.assign(nfits, 0);

  std::size_t ptr = 0;  // next record (in time order) not yet removed from risk
  std::size_t pos = 0;  // scan over time-ordered records to find event groups
  while (pos < n) {
    // Find the next distinct time carrying at least one event.
    while (pos < n && !ds_.records()[order_[pos]].event) ++pos;
    if (pos == n) break;
    const double t = ds_.records()[order_[pos]].time;

    // Remove subjects with T_i < t from every design sum (left-continuous
    // at-risk convention: subjects with T_i == t remain at risk at t).
    while (ptr < n && ds_.records()[order_[ptr]].time < t) {
      const int i = order_[ptr];
      const int g = ds_.side(i);
      for (PerFit& pf : fits_) {
        if (pf.kval[i] <= 0.0) continue;
        pf.S[g].noalias() -= pf.kval[i] * pf.basis[i] * pf.basis[i].transpose();
        if (--pf.window_count[g] == 0) pf.S[g].setZero();
      }
      ++ptr;
    }

    // Collect tied events at t that fall inside at least one fit window.
    tp.time = t;
    tp.events.clear();
    std::size_t scan = pos;
    while (scan < n) {
      const int i = order_[scan];
      if (ds_.records()[i].time != t) break;
      if (ds_.records()[i].event) {
        bool relevant = false;
        for (const PerFit& pf : fits_)
          if (pf.kval[i] > 0.0) relevant = true;
        if (relevant) tp.events.push_back({i, ds_.side(i)});
      }
      ++scan;
    }
    // Advance pos past this whole time group (events and censorings alike).
    pos = scan;
    if (tp.events.empty()) continue;

    for (std::size_t f = 0; f < nfits; ++f) {
      PerFit& pf = fits_[f];
      pf.pd[0] = positive_definite(pf.S[0], pf.window_count[0], pf.p);
      pf.pd[1] = positive_definite(pf.S[1], pf.window_count[1], pf.p);
      tp.flags_[f] = (pf.pd[0] && pf.pd[1]) ? 1 : 0;
      pf.solver_ready[0] = pf.solver_ready[1] = false;
    }

    tp.kvals_.assign(tp.events.size() * nfits, 0.0);
    tp.weights_.assign(tp.events.size() * nfits, Eigen::VectorXd());
    for (std::size_t e = 0; e < tp.events.size(); ++e) {
      const int i = tp.events[e].record;
      const int g = tp.events[e].side;
      for (std::size_t f = 0; f < nfits; ++f) {
        PerFit& pf = fits_[f];
        Eigen::VectorXd& w = tp.weights_[e * nfits + f];
        w = Eigen::VectorXd::Zero(pf.p + 1);
        const double k = pf.kval[i];
        tp.kvals_[e * nfits + f] = k;
        if (k <= 0.0 || !tp.flags_[f]) continue;
        if (!pf.solver_ready[g]) {
          pf.solver[g].compute(pf.S[g]);
          pf.solver_ready[g] = true;
        }
        if (pf.solver[g].info() != Eigen::Success) {  // zeroed like the J = 0 branch
          ++solve_failures_;
          continue;
        }
        w = pf.solver[g].solve(k * pf.basis[i]);
      }
    }
    cb(tp);
  }
}

}  // namespace rdhaz
