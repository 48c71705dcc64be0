#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kenv/models.hpp"

namespace kenv {

enum class BoundKind { NoiseFree, Krr, Svr, Comparison };

std::string to_string(BoundKind k);
BoundKind bound_kind_from_string(const std::string& s);

/// Everything that is query-independent for one guaranteed error bound:
/// the fitted model, the data it was fitted on, the norm budget gamma,
/// and the cached worst-case quantities (noise QP solution, interpolation
/// weights of the noisy labels, ridged factorization for the comparison
/// bound).  Build once, evaluate at many x.
struct BoundContext {
  BoundKind kind = BoundKind::NoiseFree;
  FittedModel model;  ///< unused for Comparison
  Mat sites;
  Vec labels;
  Vec noise_bound;
  double gamma = 0.0;
  GramPtr F;  ///< plain K over the sites

  // Krr extras
  bool simplified = false;  ///< first term P(x) * gamma instead of the QP-tightened radicand
  std::optional<QPSolution> delta_qp;
  std::optional<GramFactorization::EVec> noisy_weights;  ///< K^{-1} y
  double noisy_norm_sq = 0.0;                            ///< y' K^{-1} y

  // Comparison extras
  double delta_tilde = 0.0;
  GramPtr F_ridged;                                       ///< K + delta_tilde^2 I
  std::optional<GramFactorization::EVec> ridged_weights;  ///< (K + dt^2 I)^{-1} y
  double comparison_radicand = 0.0;                       ///< gamma^2 - y'(K+dt^2 I)^{-1}y + N

  /// Nominal prediction at x (the model's, or the regularized comparison
  /// model's for BoundKind::Comparison).
  double nominal(const Vec& x) const;
};

/// gamma >= ||f|| must hold for every bound below; radicands in
/// [-1e-8 * gamma^2, 0) are clamped to zero, anything lower raises
/// AssumptionError ("norm budget violated").

/// Interpolant of noise-free data: |f(x) - s(x)| <= P(x) sqrt(gamma^2 - ||s||^2).
BoundContext make_noise_free_context(const FittedModel& interpolant, double gamma);

/// Kernel ridge regression under bounded noise.  Computes the worst-case
/// norm correction once via solve_delta unless `simplified`; a capped QP
/// is rejected for bound evaluation, so the context falls back to the
/// (always valid) simplified first term and records that in
/// `delta_qp->termination`.
BoundContext make_krr_context(const FittedModel& krr, const Dataset& data, double gamma,
                              bool simplified = false, double tol_qp = -1.0);

/// Minimum-norm interpolation (SVR) under bounded noise.
BoundContext make_svr_context(const FittedModel& svr, const Dataset& data, double gamma);

/// Regularized comparison bound with uniform noise level delta_tilde:
///   |f(x) - s(x)| <= sigma(x) sqrt(gamma^2 - y'(K+dt^2 I)^{-1} y + N).
BoundContext make_comparison_context(const Dataset& data, const KernelSpec& spec,
                                     double gamma, double delta_tilde,
                                     Precision precision = Precision::Double);

/// One evaluation: half-width e(x) plus its additive pieces
/// (power term, noise-weighted Lebesgue term, residual term).
struct BoundValue {
  double half_width = 0.0;
  double term_power = 0.0;
  double term_lebesgue = 0.0;
  double term_residual = 0.0;
};

BoundValue bound_at(const BoundContext& ctx, const Vec& x);

/// Guaranteed envelope over a query set: f(x) in [lower, upper] for every
/// ground truth consistent with the data, the noise bounds and gamma.
struct ErrorEnvelope {
  BoundKind kind = BoundKind::NoiseFree;
  Mat queries;
  Vec nominal;
  Vec half_width;
  Vec lower;
  Vec upper;
  Vec term_power, term_lebesgue, term_residual;

  int size() const { return static_cast<int>(queries.rows()); }
  double mean_half_width() const;
  double max_half_width() const;
  double mean_thickness() const { return 2.0 * mean_half_width(); }
};

/// Evaluates the bound on every row of `queries` (worker pool; results
/// are written by index, so output is deterministic).
ErrorEnvelope envelope(const BoundContext& ctx, const Mat& queries);

/// Pointwise intersection of envelopes over the *same* query grid.
/// Points where the intersection is empty are reported, never clipped.
struct EnvelopeIntersection {
  Mat queries;
  Vec lower, upper;
  std::vector<int> empty_at;  ///< indices with lower > upper
};
EnvelopeIntersection intersect_envelopes(const std::vector<const ErrorEnvelope*>& envs);

/// CSV columns: x1..xm,nominal,half_width,lower,upper,term_power,
/// term_lebesgue,term_residual.  Shortest round-trip formatting,
/// byte-identical across runs.
void write_envelope_csv(const ErrorEnvelope& env, const std::string& path);

/// Summary JSON (means, maxima, gamma, cached QP diagnostics).
std::string envelope_summary_json(const BoundContext& ctx, const ErrorEnvelope& env);

}  // namespace kenv
