#pragma once

#include <iosfwd>
#include <string>

#include "kenv/types.hpp"

namespace kenv {

enum class KernelFamily {
  SquaredExponential,   ///< k(x,x') = exp(-|x-x'|^2 / lengthscale)
  InverseMultiquadric,  ///< k(x,x') = 1 / sqrt(|x-x'|^2 + shape^2)
};

/// Positive definite kernel description.  `lengthscale` divides the
/// *squared* distance for the squared-exponential family; `shape` is the
/// additive offset of the inverse multiquadric.  Both must be > 0.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double lengthscale = 1.0;
  double shape = 1.0;

  static KernelSpec squared_exponential(double lengthscale);
  static KernelSpec inverse_multiquadric(double shape);

  /// Throws ValidationError on non-positive / non-finite hyperparameters.
  void validate() const;
};

double eval_kernel(const KernelSpec& spec, const Vec& x, const Vec& y);

/// Dense Gram matrix of `sites` (one point per row).  Rejects duplicate
/// sites: any pair closer than 1e-9 * (1 + max |coordinate|) is an error.
Mat gram(const KernelSpec& spec, const Mat& sites);

/// Vector (k(x_i, x))_i for the rows x_i of `sites`.
Vec kernel_vector(const KernelSpec& spec, const Mat& sites, const Vec& x);

/// JSON (de)serialization, e.g. {"family":"squared_exponential","lengthscale":1.0}.
std::string kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const std::string& text);
KernelSpec load_kernel_file(const std::string& path);

}  // namespace kenv
