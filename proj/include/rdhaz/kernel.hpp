#pragma once

#include <functional>
#include <string>

namespace rdhaz {

enum class KernelFamily { uniform, triangular, epanechnikov, custom };

// One-sided kernel k on [0, kappa] together with its mirrored two-sided
// extension K(u) = k(-u)1{u<0} + k(u)1{u>=0}. Built-in families use kappa = 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::uniform;
  double kappa = 1.0;
  std::function<double(double)> evaluator;  // only consulted for custom kernels

  static KernelSpec uniform();
  static KernelSpec triangular();
  static KernelSpec epanechnikov();
  static KernelSpec custom(double kappa, std::function<double(double)> k);
  // Accepts "uniform", "triangular", "epanechnikov"; throws ValidationError.
  static KernelSpec by_name(const std::string& name);

  // One-sided k(u); zero outside [0, kappa].
  double one_sided(double u) const;
  // Two-sided K(u), even by construction.
  double two_sided(double u) const;
  // K_h(z) = K(z/h)/h.
  double scaled(double z, double h) const;

  std::string name() const;
};

}  // namespace rdhaz
