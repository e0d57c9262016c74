#pragma once

#include <functional>

namespace rdhaz {

// Adaptive Gauss-Kronrod (7-15) integration on [a, b] to absolute tolerance
// abs_tol. Throws NumericError carrying the achieved tolerance when the
// subdivision budget is exhausted before the error estimate drops below tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 30);

}  // namespace rdhaz
