#include "kenv/gram.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <variant>
#include <vector>

#if defined(__SIZEOF_FLOAT128__)
#include <quadmath.h>
#endif

namespace kenv {
namespace {

#if defined(__SIZEOF_FLOAT128__)
using quad = __float128;
inline quad s_exp(quad x) { return expq(x); }
inline quad s_sqrt(quad x) { return sqrtq(x); }
#else
// Fallback for toolchains without binary128: extended precision is the
// widest native type.  Quality degrades, behaviour does not change.
using quad = long double;
inline quad s_exp(quad x) { return std::exp(x); }
inline quad s_sqrt(quad x) { return std::sqrt(x); }
#endif
inline double s_exp(double x) { return std::exp(x); }
inline double s_sqrt(double x) { return std::sqrt(x); }

// Dense symmetric positive definite solver over scalar S.  Row-major full
// storage; sizes here are small enough (N <= a few thousand) that the
// simple triple loop is fine and keeps the scalar type generic.
template <class S>
struct EngineT {
  using value_type = S;
  int n = 0, m = 0;
  KernelFamily family = KernelFamily::SquaredExponential;
  S par = S(1);          // lengthscale or shape, in S
  S ridge = S(0);        // added to the diagonal of K
  std::vector<S> xs;     // n*m site coordinates
  std::vector<S> K;      // n*n Gram (+ridge on diagonal)
  std::vector<S> L;      // n*n lower Cholesky factor
  S piv_min = S(0), piv_max = S(0);

  S kentry(const S* a, const S* b) const {
    S d2 = S(0);
    for (int k = 0; k < m; ++k) {
      const S d = a[k] - b[k];
      d2 += d * d;
    }
    if (family == KernelFamily::SquaredExponential) return s_exp(-d2 / par);
    return S(1) / s_sqrt(d2 + par * par);
  }

  void assemble(const KernelSpec& spec, const Mat& sites, double ridge_sq) {
    n = static_cast<int>(sites.rows());
    m = static_cast<int>(sites.cols());
    family = spec.family;
    par = S(spec.family == KernelFamily::SquaredExponential ? spec.lengthscale : spec.shape);
    ridge = S(ridge_sq);
    xs.resize(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < m; ++k) xs[static_cast<size_t>(i) * m + k] = S(sites(i, k));
    K.assign(static_cast<size_t>(n) * n, S(0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        S v = kentry(&xs[static_cast<size_t>(i) * m], &xs[static_cast<size_t>(j) * m]);
        if (i == j) v += ridge;
        K[static_cast<size_t>(i) * n + j] = v;
        K[static_cast<size_t>(j) * n + i] = v;
      }
    }
  }

  // Returns -1 on success, else the index of the first non-positive pivot.
  int factorize() {
    L.assign(static_cast<size_t>(n) * n, S(0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        S s = K[static_cast<size_t>(i) * n + j];
        const S* li = &L[static_cast<size_t>(i) * n];
        const S* lj = &L[static_cast<size_t>(j) * n];
        for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
        if (i == j) {
          if (!(s > S(0))) return i;
          if (i == 0) { piv_min = s; piv_max = s; }
          else { if (s < piv_min) piv_min = s; if (s > piv_max) piv_max = s; }
          L[static_cast<size_t>(i) * n + i] = s_sqrt(s);
        } else {
          L[static_cast<size_t>(i) * n + j] = s / lj[j];
        }
      }
    }
    return -1;
  }

  void fwd(std::vector<S>& b) const {  // L x = b
    for (int i = 0; i < n; ++i) {
      S s = b[i];
      const S* li = &L[static_cast<size_t>(i) * n];
      for (int k = 0; k < i; ++k) s -= li[k] * b[k];
      b[i] = s / li[i];
    }
  }

  void bwd(std::vector<S>& b) const {  // L' x = b
    for (int i = n - 1; i >= 0; --i) {
      S s = b[i];
      for (int k = i + 1; k < n; ++k) s -= L[static_cast<size_t>(k) * n + i] * b[k];
      b[i] = s / L[static_cast<size_t>(i) * n + i];
    }
  }

  void matvec(const std::vector<S>& x, std::vector<S>& out) const {
    out.assign(n, S(0));
    for (int i = 0; i < n; ++i) {
      S s = S(0);
      const S* ki = &K[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) s += ki[j] * x[j];
      out[i] = s;
    }
  }

  // One refinement pass: the residual is formed in S, so the engine
  // precision (not the caller's doubles) limits the final accuracy.
  std::vector<S> solve_refined(const std::vector<S>& b) const {
    std::vector<S> x = b;
    fwd(x);
    bwd(x);
    std::vector<S> kx;
    matvec(x, kx);
    std::vector<S> r(n);
    for (int i = 0; i < n; ++i) r[i] = b[i] - kx[i];
    fwd(r);
    bwd(r);
    for (int i = 0; i < n; ++i) x[i] += r[i];
    return x;
  }

  void kvec(const Vec& x, std::vector<S>& out) const {
    std::vector<S> q(m);
    for (int k = 0; k < m; ++k) q[k] = S(x(k));
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i] = kentry(&xs[static_cast<size_t>(i) * m], q.data());
  }

  S kself() const { return family == KernelFamily::SquaredExponential ? S(1) : S(1) / par; }
};

using EngineVar = std::variant<EngineT<double>, EngineT<quad>>;
using EVecVar = std::variant<std::vector<double>, std::vector<quad>>;

template <class S>
std::vector<S> to_scalar(const Vec& b) {
  std::vector<S> out(static_cast<size_t>(b.size()));
  for (Eigen::Index i = 0; i < b.size(); ++i) out[static_cast<size_t>(i)] = S(b(i));
  return out;
}

template <class S>
Vec to_vec(const std::vector<S>& b) {
  Vec out(static_cast<Eigen::Index>(b.size()));
  for (size_t i = 0; i < b.size(); ++i) out(static_cast<Eigen::Index>(i)) = static_cast<double>(b[i]);
  return out;
}

}  // namespace

std::string to_string(Precision p) {
  return p == Precision::Double ? "double" : "quad";
}

Precision precision_from_string(const std::string& s) {
  if (s == "double") return Precision::Double;
  if (s == "quad") return Precision::Quad;
  throw InputError("unknown precision \"" + s + "\" (expected double|quad)");
}

struct GramFactorization::Engine {
  EngineVar var;
};

struct GramFactorization::EVec::Impl {
  EVecVar var;
};

GramFactorization::EVec::EVec() : impl_(new Impl) {}
GramFactorization::EVec::~EVec() = default;
GramFactorization::EVec::EVec(EVec&&) noexcept = default;
GramFactorization::EVec& GramFactorization::EVec::operator=(EVec&&) noexcept = default;
GramFactorization::EVec::EVec(const EVec& o) : impl_(new Impl(*o.impl_)) {}
GramFactorization::EVec& GramFactorization::EVec::operator=(const EVec& o) {
  impl_.reset(new Impl(*o.impl_));
  return *this;
}

Vec GramFactorization::EVec::to_double() const {
  return std::visit([](const auto& v) { return to_vec(v); }, impl_->var);
}

GramFactorization::~GramFactorization() = default;

std::shared_ptr<const GramFactorization> GramFactorization::build(const KernelSpec& spec,
                                                                  const Mat& sites,
                                                                  Precision precision,
                                                                  double ridge_sq) {
  spec.validate();
  if (sites.rows() == 0) throw ValidationError("factorize: empty site set");
  if (!(ridge_sq >= 0.0) || !std::isfinite(ridge_sq))
    throw ValidationError("factorize: ridge must be finite and non-negative");
  if (!sites.allFinite()) throw ValidationError("factorize: non-finite site coordinate");

  const int n = static_cast<int>(sites.rows());
  const double scale = 1.0 + sites.cwiseAbs().maxCoeff();
  const double dup_tol = 1e-9 * scale;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if ((sites.row(i) - sites.row(j)).norm() < dup_tol) {
        std::ostringstream msg;
        msg << "factorize: sites " << j << " and " << i << " coincide within " << dup_tol;
        throw ValidationError(msg.str());
      }

  auto F = std::shared_ptr<GramFactorization>(new GramFactorization());
  F->spec_ = spec;
  F->sites_ = sites;
  F->n_ = n;
  F->precision_ = precision;
  F->ridge_sq_ = ridge_sq;
  F->engine_.reset(new Engine);

  int bad = -1;
  if (precision == Precision::Double) {
    F->engine_->var.emplace<EngineT<double>>();
    auto& e = std::get<EngineT<double>>(F->engine_->var);
    e.assemble(spec, sites, ridge_sq);
    bad = e.factorize();
  } else {
    F->engine_->var.emplace<EngineT<quad>>();
    auto& e = std::get<EngineT<quad>>(F->engine_->var);
    e.assemble(spec, sites, ridge_sq);
    bad = e.factorize();
  }
  if (bad >= 0) {
    std::ostringstream msg;
    msg << "factorize: Gram matrix numerically singular at pivot " << bad << " (n=" << n
        << ", precision=" << to_string(precision)
        << "); thin the dataset (larger minimum separation) or use higher precision";
    throw ConditioningError(msg.str(), bad);
  }
  return F;
}

Vec GramFactorization::solve(const Vec& b) const {
  if (b.size() != n_) throw ValidationError("solve: right-hand side has wrong length");
  return std::visit(
      [&](const auto& e) {
        using S = typename std::decay_t<decltype(e)>::value_type;
        return to_vec(e.solve_refined(to_scalar<S>(b)));
      },
      engine_->var);
}

Mat GramFactorization::l_factor() const {
  Mat L = Mat::Zero(n_, n_);
  std::visit(
      [&](const auto& e) {
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j <= i; ++j)
            L(i, j) = static_cast<double>(e.L[static_cast<size_t>(i) * n_ + j]);
      },
      engine_->var);
  return L;
}

Mat GramFactorization::k_matrix() const {
  Mat K(n_, n_);
  std::visit(
      [&](const auto& e) {
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j)
            K(i, j) = static_cast<double>(e.K[static_cast<size_t>(i) * n_ + j]);
      },
      engine_->var);
  return K;
}

GramFactorization::QueryKit GramFactorization::query(const Vec& x, const EVec* v) const {
  if (x.size() != dim()) throw ValidationError("query point has wrong dimension");
  QueryKit kit;
  std::visit(
      [&](const auto& e) {
        using S = typename std::decay_t<decltype(e)>::value_type;
        std::vector<S> w;
        e.kvec(x, w);
        if (v != nullptr) {
          const auto& vv = std::get<std::vector<S>>(v->impl_->var);
          S acc = S(0);
          for (int i = 0; i < n_; ++i) acc += vv[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
          kit.vdot = static_cast<double>(acc);
        }
        e.fwd(w);
        S p2 = e.kself();
        for (int i = 0; i < n_; ++i) p2 -= w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
        const double p2d = static_cast<double>(p2);
        const double kxx = static_cast<double>(e.kself());
        if (p2d < -1e-6 * kxx) {
          std::ostringstream msg;
          msg << "power function radicand " << p2d << " at k(x,x)=" << kxx
              << ": factorization too ill-conditioned for this query";
          throw ConditioningError(msg.str());
        }
        if (p2d < 0.0) clamp_warnings_.fetch_add(1);
        kit.power = std::sqrt(std::max(0.0, p2d));
        e.bwd(w);
        kit.cardinal = to_vec(w);
      },
      engine_->var);
  return kit;
}

double GramFactorization::power_function(const Vec& x) const { return query(x).power; }

double GramFactorization::lebesgue_function(const Vec& x) const {
  return query(x).cardinal.cwiseAbs().sum();
}

GramFactorization::EVec GramFactorization::solve_keep(const Vec& b) const {
  if (b.size() != n_) throw ValidationError("solve_keep: right-hand side has wrong length");
  EVec out;
  std::visit(
      [&](const auto& e) {
        using S = typename std::decay_t<decltype(e)>::value_type;
        out.impl_->var = e.solve_refined(to_scalar<S>(b));
      },
      engine_->var);
  return out;
}

double GramFactorization::dot_kvec(const EVec& v, const Vec& x) const {
  if (x.size() != dim()) throw ValidationError("query point has wrong dimension");
  return std::visit(
      [&](const auto& e) {
        using S = typename std::decay_t<decltype(e)>::value_type;
        const auto& vv = std::get<std::vector<S>>(v.impl_->var);
        std::vector<S> kx;
        e.kvec(x, kx);
        S acc = S(0);
        for (int i = 0; i < n_; ++i) acc += vv[static_cast<size_t>(i)] * kx[static_cast<size_t>(i)];
        return static_cast<double>(acc);
      },
      engine_->var);
}

double GramFactorization::dot(const EVec& v, const Vec& b) const {
  if (b.size() != n_) throw ValidationError("dot: vector has wrong length");
  return std::visit(
      [&](const auto& e) {
        using S = typename std::decay_t<decltype(e)>::value_type;
        const auto& vv = std::get<std::vector<S>>(v.impl_->var);
        S acc = S(0);
        for (int i = 0; i < n_; ++i) acc += vv[static_cast<size_t>(i)] * S(b(i));
        return static_cast<double>(acc);
      },
      engine_->var);
}

double GramFactorization::min_eig_estimate(int iters) const {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  Vec v(n_);
  for (int i = 0; i < n_; ++i) v(i) = ((rng() >> 11) * 0x1.0p-53) - 0.5;
  v /= v.norm();
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec w = solve(v);
    const double nw = w.norm();
    if (!(nw > 0.0) || !std::isfinite(nw)) break;
    lam = 1.0 / nw;
    v = w / nw;
  }
  return lam;
}

double GramFactorization::cond_estimate() const {
  const double lam = min_eig_estimate();
  if (!(lam > 0.0)) return std::numeric_limits<double>::infinity();
  double norm1 = 0.0;
  std::visit(
      [&](const auto& e) {
        for (int j = 0; j < n_; ++j) {
          double s = 0.0;
          for (int i = 0; i < n_; ++i)
            s += std::abs(static_cast<double>(e.K[static_cast<size_t>(i) * n_ + j]));
          norm1 = std::max(norm1, s);
        }
      },
      engine_->var);
  return norm1 / lam;
}

double GramFactorization::pivot_min() const {
  return std::visit([](const auto& e) { return static_cast<double>(e.piv_min); }, engine_->var);
}

double GramFactorization::pivot_max() const {
  return std::visit([](const auto& e) { return static_cast<double>(e.piv_max); }, engine_->var);
}

double posterior_deviation(const GramFactorization& ridged, const Vec& x) {
  if (!(ridged.ridge_sq() > 0.0))
    throw ValidationError("posterior_deviation needs a factorization with positive ridge");
  return ridged.power_function(x);
}

}  // namespace kenv
