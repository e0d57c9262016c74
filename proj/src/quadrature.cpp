#include "rdhaz/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "rdhaz/errors.hpp"

namespace rdhaz {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (Kronrod abscissae; odd-index
// entries coincide with the embedded 7-point Gauss rule).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
  double value;
  double error;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double x = half * kXgk[j];
    const double fsum = f(c - x) + f(c + x);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  const double diff = std::abs(kronrod - gauss);
  // QUADPACK-style error inflation keeps the estimate conservative.
  const double err = diff > 0.0 ? std::min(diff, 200.0 * diff * std::sqrt(diff)) : 0.0;
  return {kronrod, std::max(err, diff)};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 int max_depth) {
  if (!(b >= a)) throw ValidationError("integrate: b < a");
  if (a == b) return 0.0;
  double total = 0.0;
  double worst = 0.0;
  std::function<void(double, double, double, int)> rec = [&](double lo, double hi, double tol,
                                                             int depth) {
    const Panel p = gk15(f, lo, hi);
    if (p.error <= tol || depth >= max_depth) {
      total += p.value;
      if (p.error > tol) worst = std::max(worst, p.error);
      return;
    }
    const double mid = 0.5 * (lo + hi);
    rec(lo, mid, 0.5 * tol, depth + 1);
    rec(mid, hi, 0.5 * tol, depth + 1);
  };
  rec(a, b, abs_tol, 0);
  if (worst > 0.0) {
    throw NumericError("quadrature failed to reach requested tolerance", worst);
  }
  return total;
}

}  // namespace rdhaz
