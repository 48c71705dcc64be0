#include "kenv/qp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kenv {
namespace {

void check_inputs(const GramFactorization& F, const Vec& y, const Vec& delta_bar,
                  bool strictly_positive) {
  if (y.size() != F.size() || delta_bar.size() != F.size())
    throw ValidationError("qp: vector lengths do not match the factorization");
  for (Eigen::Index i = 0; i < delta_bar.size(); ++i) {
    if (!std::isfinite(delta_bar(i)) || delta_bar(i) < 0.0)
      throw ValidationError("qp: noise bounds must be finite and non-negative");
    if (strictly_positive && delta_bar(i) == 0.0)
      throw ValidationError("qp: noise bounds must be strictly positive here");
  }
  if (!y.allFinite()) throw ValidationError("qp: labels must be finite");
}

// Largest eigenvalue of K^{-1} by 50 power-iteration steps through the
// factorization, padded 5% so 1/L stays a safe step size.
double inverse_top_eig(const GramFactorization& F) {
  const int n = F.size();
  std::mt19937_64 rng(0x2545f4914f6cdd1dULL);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = ((rng() >> 11) * 0x1.0p-53) - 0.5;
  v /= v.norm();
  double nu = 1.0;
  for (int it = 0; it < 50; ++it) {
    Vec w = F.solve(v);
    const double nw = w.norm();
    if (!(nw > 0.0) || !std::isfinite(nw)) break;
    nu = nw;
    v = w / nw;
  }
  return nu;
}

}  // namespace

QPSolution solve_delta(const GramFactorization& F, const Vec& y, const Vec& delta_bar,
                       double tol) {
  check_inputs(F, y, delta_bar, false);
  const int n = F.size();
  if (tol < 0.0) tol = 1e-10 * (1.0 + y.norm());

  QPSolution sol;
  sol.point = Vec::Zero(n);

  const double s2 = y.dot(F.solve(y));  // ||noisy interpolant||^2
  if (delta_bar.maxCoeff() == 0.0) {    // degenerate box
    sol.value = 0.0;
    sol.noisy_gap_sq = std::max(0.0, s2);
    return sol;
  }

  // Minimize h(delta) = delta'K^{-1}delta - 2 y'K^{-1}delta over the box
  // |delta| <= delta_bar via accelerated projected gradient with gradient
  // restart; Delta = -h at the best feasible iterate.
  const double L = 2.0 * inverse_top_eig(F) * 1.05;
  const Vec lo = -delta_bar, hi = delta_bar;
  auto clamp = [&](const Vec& d) { return d.cwiseMax(lo).cwiseMin(hi); };

  Vec delta = Vec::Zero(n), mom = delta;
  double theta = 1.0;
  double best_gap = s2;  // h(0) + s2 = (0-y)'K^{-1}(0-y)
  Vec best = delta;
  const int cap = 200 * n;
  int it = 0;
  double pg = std::numeric_limits<double>::infinity();
  for (; it < cap; ++it) {
    const Vec g_mom = 2.0 * F.solve(mom - y);
    Vec next = clamp(mom - g_mom / L);

    // objective and true gradient at the new point (one extra solve)
    const Vec w = F.solve(next - y);
    const double gap = (next - y).dot(w);  // h(next) + s2, cancellation-free
    if (gap < best_gap) {
      best_gap = gap;
      best = next;
    }
    pg = L * (next - clamp(next - (2.0 / L) * w)).norm();
    const bool restart = g_mom.dot(next - delta) > 0.0;
    if (pg < tol) {
      delta = next;
      ++it;
      break;
    }
    if (restart) {
      theta = 1.0;
      mom = next;
    } else {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      mom = next + ((theta - 1.0) / theta_next) * (next - delta);
      mom = clamp(mom);
      theta = theta_next;
    }
    delta = next;
  }

  sol.point = best;
  sol.noisy_gap_sq = std::max(0.0, best_gap);
  sol.value = std::max(0.0, s2 - best_gap);
  sol.iterations = it;
  sol.projected_gradient_norm = pg;
  sol.termination = (pg < tol) ? Termination::Converged : Termination::IterationCap;
  return sol;
}

namespace {

// Stationarity + complementarity residual of the hard-margin SVR KKT
// system at (alpha, r = K alpha - y).  Multipliers are reconstructed from
// the active set; for an exact solution the residual vanishes.
double svr_kkt_residual(const Mat& K, const Vec& y, const Vec& delta_bar, const Vec& alpha) {
  const Vec r = K * alpha - y;
  const Eigen::Index n = y.size();
  Vec v = 2.0 * alpha;  // 2 alpha + (mu+ - mu-) once multipliers absorb alpha
  double compl_res = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double margin = 1e-7 * (1.0 + delta_bar(i));
    const bool upper = r(i) >= delta_bar(i) - margin;
    const bool lower = r(i) <= -delta_bar(i) + margin;
    if (upper && alpha(i) <= 0.0) {
      v(i) = 0.0;  // mu+ = -2 alpha >= 0
      compl_res = std::max(compl_res, std::abs(2.0 * alpha(i) * (r(i) - delta_bar(i))));
    } else if (lower && alpha(i) >= 0.0) {
      v(i) = 0.0;  // mu- = 2 alpha >= 0
      compl_res = std::max(compl_res, std::abs(2.0 * alpha(i) * (r(i) + delta_bar(i))));
    }
  }
  const double stat_res = (K * v).cwiseAbs().maxCoeff();
  return std::max(stat_res, compl_res);
}

}  // namespace

QPSolution solve_svr(const GramFactorization& F, const Vec& y, const Vec& delta_bar,
                     double tol) {
  check_inputs(F, y, delta_bar, true);
  const int n = F.size();
  if (tol <= 0.0) tol = 1e-10;
  const Mat K = F.k_matrix();

  QPSolution sol;
  if ((y.cwiseAbs().array() <= delta_bar.array()).all()) {
    // the zero function already stays inside every margin
    sol.point = Vec::Zero(n);
    sol.value = 0.0;
    return sol;
  }

  // Operator splitting on the residual r = K alpha - y:
  //   alpha-step  (K + (2/rho) I) alpha = y + r - u
  //   r-step      clamp(K alpha - y + u, +-delta_bar)
  //   u-step      u += K alpha - y - r
  double rho = K.trace() / n;
  Eigen::LLT<Mat> step;
  auto refactor = [&]() {
    Mat A = K;
    A.diagonal().array() += 2.0 / rho;
    step.compute(A);
  };
  refactor();

  Vec r = (-y).cwiseMax(-delta_bar).cwiseMin(delta_bar);  // r for alpha = 0
  Vec u = Vec::Zero(n);
  Vec alpha = Vec::Zero(n);
  const double scale = 1.0 + y.norm();
  const int cap = 500 * n;
  int it = 0;
  bool converged = false;
  for (; it < cap; ++it) {
    alpha = step.solve(y + r - u);
    const Vec ka = K * alpha;
    const Vec r_new = (ka - y + u).cwiseMax(-delta_bar).cwiseMin(delta_bar);
    const double dual = rho * (K * (r_new - r)).norm();
    r = r_new;
    u += ka - y - r;
    const double primal = (ka - y - r).norm();
    if (primal < tol * scale && dual < tol * scale) {
      converged = true;
      ++it;
      break;
    }
    if (it % 10 == 9) {  // residual balancing
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
        refactor();
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
        refactor();
      }
    }
  }

  // Active-set polish: equality-solve on the identified margins, then
  // verify primal feasibility and multiplier signs.  Coordinates whose
  // multiplier sign comes out wrong are dropped and the system re-solved.
  Vec cand = alpha;
  {
    Vec rr = K * alpha - y;
    std::vector<int> active;
    std::vector<double> sign;
    for (int i = 0; i < n; ++i) {
      if (delta_bar(i) - std::abs(rr(i)) <= 1e-8 * (1.0 + delta_bar(i))) {
        active.push_back(i);
        sign.push_back(rr(i) >= 0.0 ? 1.0 : -1.0);
      }
    }
    for (int round = 0; round < 40 && !active.empty(); ++round) {
      const int na = static_cast<int>(active.size());
      Mat Kaa(na, na);
      Vec rhs(na);
      for (int a = 0; a < na; ++a) {
        for (int b = 0; b < na; ++b) Kaa(a, b) = K(active[a], active[b]);
        rhs(a) = y(active[a]) + sign[a] * delta_bar(active[a]);
      }
      Eigen::LLT<Mat> llt(Kaa);
      if (llt.info() != Eigen::Success) break;
      const Vec aa = llt.solve(rhs);
      // multiplier sign: upper margin needs alpha <= 0, lower needs >= 0
      int worst = -1;
      double worst_v = 1e-12;
      for (int a = 0; a < na; ++a) {
        const double viol = sign[a] * aa(a);
        if (viol > worst_v) {
          worst_v = viol;
          worst = a;
        }
      }
      if (worst >= 0) {
        active.erase(active.begin() + worst);
        sign.erase(sign.begin() + worst);
        continue;
      }
      Vec full = Vec::Zero(n);
      for (int a = 0; a < na; ++a) full(active[a]) = aa(a);
      cand = full;
      break;
    }
    if (active.empty()) cand = Vec::Zero(n);
  }

  // Accept the polished point only if it is feasible and not worse.
  const double feas_tol = std::max(tol, 1e-12) * (1.0 + y.cwiseAbs().maxCoeff());
  auto feasible = [&](const Vec& a) {
    const Vec rr = K * a - y;
    return ((rr.cwiseAbs() - delta_bar).array() <= feas_tol).all();
  };
  const double obj_admm = alpha.dot(K * alpha);
  if (feasible(cand)) {
    const double obj_cand = cand.dot(K * cand);
    if (obj_cand <= obj_admm + 1e-9 * (1.0 + obj_admm) || !feasible(alpha)) alpha = cand;
  }

  sol.point = alpha;
  sol.value = alpha.dot(K * alpha);
  sol.iterations = it;
  sol.projected_gradient_norm = svr_kkt_residual(K, y, delta_bar, alpha);
  const bool ok = feasible(alpha) && sol.projected_gradient_norm < std::sqrt(tol) * scale;
  sol.termination = (converged || ok) ? Termination::Converged : Termination::IterationCap;
  return sol;
}

}  // namespace kenv
