#include "rdhaz/kernel.hpp"

#include <cmath>
#include <utility>

#include "rdhaz/errors.hpp"

namespace rdhaz {

KernelSpec KernelSpec::uniform() { return KernelSpec{KernelFamily::uniform, 1.0, nullptr}; }

KernelSpec KernelSpec::triangular() { return KernelSpec{KernelFamily::triangular, 1.0, nullptr}; }

KernelSpec KernelSpec::epanechnikov() {
  return KernelSpec{KernelFamily::epanechnikov, 1.0, nullptr};
}

KernelSpec KernelSpec::custom(double kappa, std::function<double(double)> k) {
  if (!(kappa > 0.0)) throw ValidationError("kernel support endpoint kappa must be positive");
  if (!k) throw ValidationError("custom kernel requires an evaluator");
  return KernelSpec{KernelFamily::custom, kappa, std::move(k)};
}

KernelSpec KernelSpec::by_name(const std::string& name) {
  if (name == "uniform") return uniform();
  if (name == "triangular") return triangular();
  if (name == "epanechnikov") return epanechnikov();
  throw ValidationError("unknown kernel '" + name +
                        "' (expected uniform, triangular, or epanechnikov)");
}

double KernelSpec::one_sided(double u) const {
  if (u < 0.0 || u > kappa || std::isnan(u)) return 0.0;
  switch (family) {
    case KernelFamily::uniform:
      return 1.0;
    case KernelFamily::triangular:
      return 1.0 - u;
    case KernelFamily::epanechnikov:
      return 0.75 * (1.0 - u * u);
    case KernelFamily::custom:
      return evaluator(u);
  }
  return 0.0;
}

double KernelSpec::two_sided(double u) const { return one_sided(u < 0.0 ? -u : u); }

double KernelSpec::scaled(double z, double h) const { return two_sided(z / h) / h; }

std::string KernelSpec::name() const {
  switch (family) {
    case KernelFamily::uniform:
      return "uniform";
    case KernelFamily::triangular:
      return "triangular";
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::custom:
      return "custom";
  }
  return "?";
}

}  // namespace rdhaz
