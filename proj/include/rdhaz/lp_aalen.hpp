#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rdhaz/dataset.hpp"
#include "rdhaz/kernel.hpp"

namespace rdhaz {

struct FitConfig {
  int p = 1;
  int nu = 0;
  double h = 0.0;
  KernelSpec kernel = KernelSpec::uniform();
  // Condition-number ceiling for declaring the design matrix invertible.
  double ridge_guard = 1e12;

  void validate() const;
};

// A coefficient-vector-valued step function: the path of B-hat_{g,p}(t,h).
// Increments already contain the J flag, H_p(h), the design-matrix inverse
// and the 1/n normalization.
class StepEstimate {
 public:
  StepEstimate(int p, double h) : p_(p), h_(h) {}

  void push_jump(double time, Eigen::VectorXd increment, int j_flag);
  void finalize();  // builds prefix sums; call once after the last push_jump

  int order() const { return p_; }
  double bandwidth() const { return h_; }
  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<Eigen::VectorXd>& increments() const { return increments_; }
  const std::vector<int>& j_flags() const { return flags_; }

  // Right-continuous cumulative value at arbitrary t, via binary search.
  Eigen::VectorXd cumulative(double t) const;
  // Fraction of jump times with J = 1; vacuously 1 when there are no jumps.
  double j_fraction() const;

 private:
  int p_;
  double h_;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> increments_;
  std::vector<int> flags_;
  std::vector<Eigen::VectorXd> prefix_;
  bool finalized_ = false;
};

// Gamma_{g,p,n}(t,h): kernel-weighted at-risk design matrix in the rescaled
// basis r_p((Z - z0)/h), normalized by 1/n.
Eigen::MatrixXd design_matrix(const SurvivalDataset& ds, double t, int side,
                              const FitConfig& cfg);

// J_{n,h}(t): 1 iff both sides' design matrices are numerically positive
// definite (smallest eigenvalue > 0, condition number <= ridge_guard).
int j_flag(const SurvivalDataset& ds, double t, const FitConfig& cfg);

// The local-polynomial Aalen path for one side of the cutoff.
StepEstimate fit_path(const SurvivalDataset& ds, int side, const FitConfig& cfg);

// Both sides from a single pass over the event times.
std::pair<StepEstimate, StepEstimate> fit_both(const SurvivalDataset& ds, const FitConfig& cfg);

// A-hat^(nu)_{g,p}(t,h) = nu! e_{p,nu}^t B-hat_{g,p}(t,h).
double derivative_estimate(const StepEstimate& path, const FitConfig& cfg, double t);

// Theta-hat^(nu)_p(t,h): treated minus control derivative estimate.
double theta_estimate(const SurvivalDataset& ds, const FitConfig& cfg, double t);

}  // namespace rdhaz
