#pragma once

#include <string>

#include "kenv/dataset.hpp"
#include "kenv/gram.hpp"
#include "kenv/qp.hpp"

namespace kenv {

enum class ModelKind { Interpolant, Krr, Svr };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Kernel expansion s(x) = sum_i weights_i k(x, centers_i) produced by
/// one of the fitters below.  `attained` holds s evaluated at the
/// centers (for the interpolant these are the labels themselves) and
/// `rkhs_norm_sq` the exact squared native-space norm weights' K weights.
struct FittedModel {
  ModelKind kind = ModelKind::Interpolant;
  KernelSpec kernel;
  Mat centers;
  Vec weights;
  Vec attained;
  double rkhs_norm_sq = 0.0;
  double lambda = 0.0;  ///< ridge weight, Krr only
  GramPtr gram;         ///< factorization of K over the centers

  double predict(const Vec& x) const;
  Vec predict(const Mat& queries) const;
};

/// Noise-free interpolant s = k_xX K^{-1} y.  Predictions at the sites
/// reproduce the labels to 1e-7 * (1 + ||y||_inf); worse indicates an
/// ill-conditioned Gram matrix and raises ConditioningError.
FittedModel fit_interpolant(const Dataset& data, const KernelSpec& spec,
                            Precision precision = Precision::Double);

/// Kernel ridge regression with weights (K + N lambda I)^{-1} y.  The
/// ridged system is solved in plain double (it is well conditioned for
/// the lambdas of interest); `gram` still factorizes the un-ridged K at
/// the requested precision because the error bounds need it.
FittedModel fit_krr(const Dataset& data, const KernelSpec& spec, double lambda,
                    Precision precision = Precision::Double);

/// Hard-margin support vector regression: minimum-norm expansion whose
/// site values stay inside the noise band.  Non-convergence of the
/// underlying solver is an error (SolverError).
FittedModel fit_svr(const Dataset& data, const KernelSpec& spec, double tol = 1e-10,
                    Precision precision = Precision::Double);

/// Gamma = safety_factor * sqrt(y' K^{-1} y) from noise-free samples;
/// requires safety_factor >= 1.
double rkhs_norm_estimate(const Vec& noiseless_labels, const GramFactorization& F,
                          double safety_factor);

/// JSON round-trip.  Doubles survive bit-exactly (shortest round-trip
/// formatting).  Loading re-factorizes the Gram matrix.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text,
                            Precision precision = Precision::Double);
void save_model_json(const FittedModel& model, const std::string& path);
FittedModel load_model_json(const std::string& path,
                            Precision precision = Precision::Double);

}  // namespace kenv
