#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rdhaz/dataset.hpp"
#include "rdhaz/kernel.hpp"

namespace rdhaz {

// One local-polynomial design tracked by the event sweep: order p, bandwidth h.
struct SweepFit {
  int p = 1;
  double h = 0.0;
};

// Everything a consumer needs at one distinct event time. Weight vectors are
// w = J * S^{-1} (K(u) r_p(u)) in the rescaled basis u = (Z - z0)/h, where S
// is the unnormalized design sum over the current at-risk window; S equals
// n*h*Gamma_{g,p,n}(t,h), so the 1/n and 1/h factors cancel exactly in the
// estimator increments H_p(h) w.
class SweepTimePoint {
 public:
  double time = 0.0;

  struct Event {
    int record = -1;
    int side = 0;
  };
  std::vector<Event> events;  // tied events at this time, inside at least one window

  int fit_count() const { return static_cast<int>(flags_.size()); }
  bool flag(int fit) const { return flags_[fit] != 0; }
  // Kernel value K((Z_i - z0)/h_fit); zero when outside the fit's window.
  double kval(int fit, int ev) const { return kvals_[idx(fit, ev)]; }
  // Zero vector when out of window or when the fit's J flag is down.
  const Eigen::VectorXd& weight(int fit, int ev) const { return weights_[idx(fit, ev)]; }

 private:
  friend class EventSweep;
  std::size_t idx(int fit, int ev) const {
    return static_cast<std::size_t>(ev) * flags_.size() + fit;
  }
  std::vector<char> flags_;
  std::vector<double> kvals_;
  std::vector<Eigen::VectorXd> weights_;
};

using SweepCallback = std::function<void(const SweepTimePoint&)>;

// Walks the distinct event times of the dataset in increasing order,
// maintaining for every fit and side the design sum
//   S_{g}(t) = sum_{i at risk, in window, X_i = g} K(u_i) r_p(u_i) r_p(u_i)^t
// by subtracting subjects as they leave the risk set (Y_i(t) = 1{T_i >= t},
// so a subject is still at risk at its own event time). At each time the
// positive-definiteness flag J is evaluated per fit across both sides.
class EventSweep {
 public:
  EventSweep(const SurvivalDataset& ds, const KernelSpec& kernel, std::vector<SweepFit> fits,
             double ridge_guard = 1e12);

  void run(const SweepCallback& cb);

  // Count of factorizations that failed despite J = 1; those increments are
  // zeroed like the J = 0 branch.
  long solve_failures() const { return solve_failures_; }

 private:
  struct PerFit {
    int p;
    double h;
    // Per record: kernel value and rescaled basis (empty basis when outside
    // the window).
    std::vector<double> kval;
    std::vector<Eigen::VectorXd> basis;
    Eigen::MatrixXd S[2];
    long window_count[2] = {0, 0};
    bool pd[2] = {false, false};
    Eigen::LDLT<Eigen::MatrixXd> solver[2];
    bool solver_ready[2] = {false, false};
  };

  bool positive_definite(const Eigen::MatrixXd& S, long count, int p) const;

  const SurvivalDataset& ds_;
  double ridge_guard_;
  std::vector<PerFit> fits_;
  std::vector<int> order_;  // record indices sorted by time
  long solve_failures_ = 0;
};

}  // namespace rdhaz
