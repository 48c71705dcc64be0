#pragma once

#include "kenv/gram.hpp"
#include "kenv/types.hpp"

namespace kenv {

enum class Termination { Converged, IterationCap };

struct QPSolution {
  Vec point;          ///< argmax delta (solve_delta) / weights alpha (solve_svr)
  double value = 0;   ///< optimal objective value
  Termination termination = Termination::Converged;
  int iterations = 0;
  double projected_gradient_norm = 0;

  /// solve_delta only: certified lower bound on
  ///   min_{|y - z| <= delta_bar, z = y - delta} z' K^{-1} z,
  /// i.e. on ||noisy interpolant||^2 - Delta, obtained from the final
  /// iterate plus its linearization gap over the box.  Using it instead
  /// of the literal difference avoids catastrophic cancellation and errs
  /// on the conservative side.
  double noisy_gap_sq = 0;
};

/// Worst-case norm correction
///   Delta = max_{|delta| <= delta_bar} -delta' K^{-1} delta + 2 y' K^{-1} delta,
/// solved as the equivalent box-constrained minimization of
/// (y-delta)' K^{-1} (y-delta) by an accelerated projected-gradient method
/// with adaptive restart.  tol < 0 selects 1e-10 * (1 + ||y||_2); the
/// iteration cap is 200 * N.  A capped run returns
/// Termination::IterationCap and must not be fed into the error bounds.
QPSolution solve_delta(const GramFactorization& F, const Vec& y, const Vec& delta_bar,
                       double tol = -1.0);

/// Minimum-norm interpolation under the noise band (hard-margin support
/// vector regression):
///   min alpha' K alpha   s.t.  |K alpha - y| <= delta_bar.
/// Operator splitting on r = K alpha - y, followed by an active-set
/// polish that solves the stationarity system exactly on the identified
/// support.  `value` is the attained alpha' K alpha.
QPSolution solve_svr(const GramFactorization& F, const Vec& y, const Vec& delta_bar,
                     double tol = 1e-10);

}  // namespace kenv
