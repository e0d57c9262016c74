#include "rdhaz/kernel_constants.hpp"

#include <cmath>
#include <string>

#include "rdhaz/errors.hpp"
#include "rdhaz/quadrature.hpp"

namespace rdhaz {

namespace {

void check_order(int p) {
  if (p < 0) throw ValidationError("polynomial order must be non-negative");
  if (p > kMaxOrder)
    throw ValidationError("polynomial order capped at " + std::to_string(kMaxOrder));
}

// int_0^1 k(u) u^m du for the built-in families, as exact rationals evaluated
// in double precision. k and k^2 are polynomials, so only Lebesgue moments
// 1/(m+1) enter.
double builtin_moment(KernelFamily family, int m) {
  const double m1 = 1.0 / (m + 1.0);
  switch (family) {
    case KernelFamily::uniform:
      return m1;
    case KernelFamily::triangular:  // (1-u) u^m
      return m1 - 1.0 / (m + 2.0);
    case KernelFamily::epanechnikov:  // 0.75 (1-u^2) u^m
      return 0.75 * (m1 - 1.0 / (m + 3.0));
    case KernelFamily::custom:
      break;
  }
  throw ValidationError("no closed form for custom kernels");
}

double builtin_sq_moment(KernelFamily family, int m) {
  const double m1 = 1.0 / (m + 1.0);
  switch (family) {
    case KernelFamily::uniform:
      return m1;
    case KernelFamily::triangular:  // (1-u)^2 u^m
      return m1 - 2.0 / (m + 2.0) + 1.0 / (m + 3.0);
    case KernelFamily::epanechnikov:  // (3/4)^2 (1-u^2)^2 u^m
      return 0.5625 * (m1 - 2.0 / (m + 3.0) + 1.0 / (m + 5.0));
    case KernelFamily::custom:
      break;
  }
  throw ValidationError("no closed form for custom kernels");
}

// int_0^1 k(u) k(rho u) u^m du; for rho in [0,1] the support constraint
// rho*u <= kappa is automatic.
double builtin_cross_moment(KernelFamily family, int m, double rho) {
  const double m1 = 1.0 / (m + 1.0);
  switch (family) {
    case KernelFamily::uniform:
      return m1;
    case KernelFamily::triangular:  // (1-u)(1-rho u) = 1 - (1+rho)u + rho u^2
      return m1 - (1.0 + rho) / (m + 2.0) + rho / (m + 3.0);
    case KernelFamily::epanechnikov:  // (3/4)^2 (1-u^2)(1-rho^2 u^2)
      return 0.5625 * (m1 - (1.0 + rho * rho) / (m + 3.0) + rho * rho / (m + 5.0));
    case KernelFamily::custom:
      break;
  }
  throw ValidationError("no closed form for custom kernels");
}

bool has_closed_form(const KernelSpec& kernel) {
  return kernel.family != KernelFamily::custom;
}

double quad_moment(const KernelSpec& kernel, int m, double tol) {
  return integrate([&](double u) { return kernel.one_sided(u) * std::pow(u, m); }, 0.0,
                   kernel.kappa, tol);
}

double quad_sq_moment(const KernelSpec& kernel, int m, double tol) {
  return integrate(
      [&](double u) {
        const double k = kernel.one_sided(u);
        return k * k * std::pow(u, m);
      },
      0.0, kernel.kappa, tol);
}

double quad_cross_moment(const KernelSpec& kernel, int m, double rho, double tol) {
  return integrate(
      [&](double u) {
        return kernel.one_sided(u) * kernel.one_sided(rho * u) * std::pow(u, m);
      },
      0.0, kernel.kappa, tol);
}

}  // namespace

Eigen::VectorXd poly_basis(double x, int p) {
  check_order(p);
  Eigen::VectorXd r(p + 1);
  double v = 1.0;
  for (int i = 0; i <= p; ++i) {
    r(i) = v;
    v *= x;
  }
  return r;
}

Eigen::MatrixXd rescale_matrix(double h, int p) {
  check_order(p);
  if (!(h > 0.0)) throw ValidationError("rescale_matrix: bandwidth must be positive");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
  double v = 1.0;
  for (int i = 0; i <= p; ++i) {
    m(i, i) = v;
    v /= h;
  }
  return m;
}

Eigen::MatrixXd mirror_matrix(int p) {
  check_order(p);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int i = 0; i <= p; ++i) m(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
  return m;
}

Eigen::MatrixXd gamma_matrix(const KernelSpec& kernel, int p, double quad_tol) {
  check_order(p);
  Eigen::MatrixXd g(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int j = i; j <= p; ++j) {
      const double v = has_closed_form(kernel) ? builtin_moment(kernel.family, i + j)
                                               : quad_moment(kernel, i + j, quad_tol);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Eigen::VectorXd vartheta_vector(const KernelSpec& kernel, int p, int q, double quad_tol) {
  check_order(p);
  if (q < 0) throw ValidationError("vartheta moment q must be non-negative");
  Eigen::VectorXd v(p + 1);
  for (int i = 0; i <= p; ++i)
    v(i) = has_closed_form(kernel) ? builtin_moment(kernel.family, q + i)
                                   : quad_moment(kernel, q + i, quad_tol);
  return v;
}

Eigen::MatrixXd psi_matrix(const KernelSpec& kernel, int p, double quad_tol) {
  check_order(p);
  Eigen::MatrixXd g(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int j = i; j <= p; ++j) {
      const double v = has_closed_form(kernel) ? builtin_sq_moment(kernel.family, i + j)
                                               : quad_sq_moment(kernel, i + j, quad_tol);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Eigen::MatrixXd psi_cross_matrix(const KernelSpec& kernel, int p, int q, double rho,
                                 double quad_tol) {
  check_order(p);
  check_order(q);
  if (!(rho >= 0.0 && rho <= 1.0))
    throw ValidationError("psi_cross_matrix: rho must lie in [0,1] (requires h <= b)");
  Eigen::MatrixXd m(p + 1, q + 1);
  // Entry (i,j) = rho^j int k(u) k(rho u) u^{i+j} du.
  for (int i = 0; i <= p; ++i) {
    for (int j = 0; j <= q; ++j) {
      const double base = has_closed_form(kernel)
                              ? builtin_cross_moment(kernel.family, i + j, rho)
                              : quad_cross_moment(kernel, i + j, rho, quad_tol);
      m(i, j) = std::pow(rho, j) * base;
    }
  }
  return m;
}

double bias_constant(const KernelSpec& kernel, int p, int nu, double quad_tol) {
  check_order(p);
  if (nu < 0 || nu > p) throw ValidationError("bias_constant requires 0 <= nu <= p");
  const Eigen::MatrixXd gamma = gamma_matrix(kernel, p, quad_tol);
  const Eigen::VectorXd theta = vartheta_vector(kernel, p, p + 1, quad_tol);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gamma);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("bias_constant: Gamma_p is not positive definite");
  const Eigen::VectorXd x = ldlt.solve(theta);
  double fact_nu = 1.0, fact_p1 = 1.0;
  for (int i = 2; i <= nu; ++i) fact_nu *= i;
  for (int i = 2; i <= p + 1; ++i) fact_p1 *= i;
  return fact_nu * x(nu) / fact_p1;
}

MomentConstants MomentConstants::compute(const KernelSpec& kernel, int p, double quad_tol) {
  MomentConstants c;
  c.p = p;
  c.gamma = gamma_matrix(kernel, p, quad_tol);
  c.psi = psi_matrix(kernel, p, quad_tol);
  c.vartheta_next = vartheta_vector(kernel, p, p + 1, quad_tol);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c.gamma);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("MomentConstants: Gamma_p is not positive definite");
  c.gamma_inv_vartheta = ldlt.solve(c.vartheta_next);
  return c;
}

}  // namespace rdhaz
