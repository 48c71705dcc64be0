#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "kenv/kernel.hpp"
#include "kenv/types.hpp"

namespace kenv {

/// Arithmetic used *inside* the factorization.  The public API speaks
/// double either way; Quad re-evaluates kernel entries and runs the
/// Cholesky / triangular solves in binary128 so that Gram matrices whose
/// smallest eigenvalue lies far below double epsilon remain usable.
enum class Precision { Double, Quad };

std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

/// Immutable Cholesky factorization of K(+ ridge^2 I) over the given
/// sites.  All queries are const and safe to call concurrently.
class GramFactorization {
 public:
  /// Factorize the Gram matrix of `sites` under `spec`, optionally with a
  /// ridge added to the diagonal (ridge_sq = delta_tilde^2 for posterior
  /// deviations, N*lambda for ridge regression, 0 for plain K).
  /// Throws ConditioningError (with pivot index) if a pivot is not
  /// strictly positive.
  static std::shared_ptr<const GramFactorization> build(
      const KernelSpec& spec, const Mat& sites, Precision precision = Precision::Double,
      double ridge_sq = 0.0);

  ~GramFactorization();
  GramFactorization(const GramFactorization&) = delete;
  GramFactorization& operator=(const GramFactorization&) = delete;

  int size() const { return n_; }
  int dim() const { return static_cast<int>(sites_.cols()); }
  Precision precision() const { return precision_; }
  double ridge_sq() const { return ridge_sq_; }
  const Mat& sites() const { return sites_; }
  const KernelSpec& kernel() const { return spec_; }

  /// K^{-1} b with one step of iterative refinement (residual computed in
  /// engine precision).
  Vec solve(const Vec& b) const;

  /// Lower Cholesky factor rounded to double (diagnostics / tests).
  Mat l_factor() const;
  /// Gram matrix rounded to double.
  Mat k_matrix() const;

  /// Power function P(x) = sqrt(k(x,x) - k_Xx' K^{-1} k_Xx), clamped at
  /// zero.  Radicands below -1e-6 * k(x,x) raise ConditioningError;
  /// small negative values increment `clamp_warnings`.
  double power_function(const Vec& x) const;

  /// L1 norm of the cardinal weight vector K^{-1} k_Xx.
  double lebesgue_function(const Vec& x) const;

  /// Opaque engine-precision vector, e.g. interpolation weights K^{-1} y
  /// kept in binary128 so later inner products do not lose the
  /// cancellation structure.
  class EVec {
   public:
    EVec();
    ~EVec();
    EVec(EVec&&) noexcept;
    EVec& operator=(EVec&&) noexcept;
    EVec(const EVec&);
    EVec& operator=(const EVec&);
    Vec to_double() const;

   private:
    friend class GramFactorization;
    struct Impl;
    std::unique_ptr<Impl> impl_;
  };

  /// K^{-1} b kept in engine precision.
  EVec solve_keep(const Vec& b) const;
  /// v' k_Xx accumulated in engine precision (x is a query point).
  double dot_kvec(const EVec& v, const Vec& x) const;
  /// v' b accumulated in engine precision.
  double dot(const EVec& v, const Vec& b) const;

  /// Everything the error bounds need at one query point, computed in a
  /// single forward/backward sweep: the power function, the cardinal
  /// weights u = K^{-1} k_Xx (rounded to double; safe, since only |u| and
  /// u-weighted sums of double data consume it), and optionally the
  /// engine-precision inner product v' k_Xx for a kept vector v.
  struct QueryKit {
    double power = 0.0;
    Vec cardinal;
    double vdot = 0.0;
  };
  QueryKit query(const Vec& x, const EVec* v = nullptr) const;

  /// Smallest eigenvalue estimate via inverse power iteration through the
  /// factorization (deterministic start, `iters` steps).
  double min_eig_estimate(int iters = 25) const;
  /// kappa_hat = ||K||_1 / min_eig_estimate().
  double cond_estimate() const;
  /// Largest / smallest Cholesky pivot (engine precision, rounded).
  double pivot_min() const;
  double pivot_max() const;

  /// Count of power-function radicands clamped to zero so far.
  std::int64_t clamp_warnings() const { return clamp_warnings_.load(); }

 private:
  GramFactorization() = default;

  struct Engine;
  std::unique_ptr<Engine> engine_;
  KernelSpec spec_;
  Mat sites_;
  int n_ = 0;
  Precision precision_ = Precision::Double;
  double ridge_sq_ = 0.0;
  mutable std::atomic<std::int64_t> clamp_warnings_{0};
};

using GramPtr = std::shared_ptr<const GramFactorization>;

/// sigma(x) = sqrt(k(x,x) - k_Xx' (K + dt^2 I)^{-1} k_Xx): posterior
/// deviation of the regularized comparison model.  `ridged` must have
/// been built with ridge_sq = dt^2 > 0.
double posterior_deviation(const GramFactorization& ridged, const Vec& x);

}  // namespace kenv
