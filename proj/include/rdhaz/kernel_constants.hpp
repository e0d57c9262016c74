#pragma once

#include <Eigen/Dense>

#include "rdhaz/kernel.hpp"

namespace rdhaz {

// Polynomial order cap. Design matrices condition like Hilbert matrices, so
// orders beyond 4 are not supported.
inline constexpr int kMaxOrder = 4;

// r_p(x) = (1, x, x^2, ..., x^p)^t.
Eigen::VectorXd poly_basis(double x, int p);

// H_p(h) = diag(1, h^-1, ..., h^-p); satisfies H_p(h) r_p(z) = r_p(z/h).
Eigen::MatrixXd rescale_matrix(double h, int p);

// diag(1, -1, 1, ...): the sign-flip matrix relating left- and right-side
// moment constants; satisfies mirror * r_p(u) = r_p(-u).
Eigen::MatrixXd mirror_matrix(int p);

// Gamma_p = int_0^kappa K(u) r_p(u) r_p(u)^t du.
Eigen::MatrixXd gamma_matrix(const KernelSpec& kernel, int p, double quad_tol = 1e-10);

// vartheta_{p,q} = int_0^kappa K(u) u^q r_p(u) du.
Eigen::VectorXd vartheta_vector(const KernelSpec& kernel, int p, int q,
                                double quad_tol = 1e-10);

// Psi_p = int_0^kappa K(u)^2 r_p(u) r_p(u)^t du.
Eigen::MatrixXd psi_matrix(const KernelSpec& kernel, int p, double quad_tol = 1e-10);

// Psi_{p,q}(rho) = int_0^inf K(u) K(rho u) r_p(u) r_q(rho u)^t du, rho in [0,1].
Eigen::MatrixXd psi_cross_matrix(const KernelSpec& kernel, int p, int q, double rho,
                                 double quad_tol = 1e-10);

// Kernel-only scalar e_{p,nu}^t nu! Gamma_p^{-1} vartheta_{p,p+1} / (p+1)!
// multiplying the integrated (p+1)th derivative in the leading bias.
double bias_constant(const KernelSpec& kernel, int p, int nu, double quad_tol = 1e-10);

// Precomputed constants bundle shared by inference code.
struct MomentConstants {
  int p = 0;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd psi;
  Eigen::VectorXd vartheta_next;      // vartheta_{p,p+1}
  Eigen::VectorXd gamma_inv_vartheta; // Gamma_p^{-1} vartheta_{p,p+1}

  static MomentConstants compute(const KernelSpec& kernel, int p, double quad_tol = 1e-10);
};

}  // namespace rdhaz
