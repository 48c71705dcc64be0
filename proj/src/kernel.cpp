#include "kenv/kernel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kenv {

KernelSpec KernelSpec::squared_exponential(double lengthscale) {
  KernelSpec s;
  s.family = KernelFamily::SquaredExponential;
  s.lengthscale = lengthscale;
  s.validate();
  return s;
}

KernelSpec KernelSpec::inverse_multiquadric(double shape) {
  KernelSpec s;
  s.family = KernelFamily::InverseMultiquadric;
  s.shape = shape;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::SquaredExponential:
      if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw ValidationError("kernel lengthscale must be positive and finite");
      break;
    case KernelFamily::InverseMultiquadric:
      if (!(shape > 0.0) || !std::isfinite(shape))
        throw ValidationError("kernel shape must be positive and finite");
      break;
  }
}

namespace {

double sqdist(const Vec& x, const Vec& y) {
  if (x.size() != y.size())
    throw ValidationError("kernel arguments have mismatched dimensions");
  return (x - y).squaredNorm();
}

}  // namespace

double eval_kernel(const KernelSpec& spec, const Vec& x, const Vec& y) {
  spec.validate();
  const double d2 = sqdist(x, y);
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-d2 / spec.lengthscale);
    case KernelFamily::InverseMultiquadric:
      return 1.0 / std::sqrt(d2 + spec.shape * spec.shape);
  }
  throw ValidationError("unknown kernel family");
}

Mat gram(const KernelSpec& spec, const Mat& sites) {
  spec.validate();
  const int n = static_cast<int>(sites.rows());
  if (n == 0) throw ValidationError("gram: empty site set");

  const double scale = 1.0 + sites.cwiseAbs().maxCoeff();
  const double dup_tol = 1e-9 * scale;
  Mat K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double d = (sites.row(i) - sites.row(j)).norm();
      if (i != j && d < dup_tol) {
        std::ostringstream msg;
        msg << "gram: sites " << j << " and " << i << " coincide (distance " << d
            << " < tolerance " << dup_tol << ")";
        throw ValidationError(msg.str());
      }
      const double v = eval_kernel(spec, sites.row(i).transpose(), sites.row(j).transpose());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Vec kernel_vector(const KernelSpec& spec, const Mat& sites, const Vec& x) {
  spec.validate();
  const int n = static_cast<int>(sites.rows());
  Vec k(n);
  for (int i = 0; i < n; ++i)
    k(i) = eval_kernel(spec, sites.row(i).transpose(), x);
  return k;
}

std::string kernel_to_json(const KernelSpec& spec) {
  nlohmann::json j;
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      j["family"] = "squared_exponential";
      j["lengthscale"] = spec.lengthscale;
      break;
    case KernelFamily::InverseMultiquadric:
      j["family"] = "inverse_multiquadric";
      j["shape"] = spec.shape;
      break;
  }
  return j.dump();
}

KernelSpec kernel_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("kernel JSON parse failure: ") + e.what());
  }
  if (!j.contains("family") || !j["family"].is_string())
    throw InputError("kernel JSON needs a string \"family\" field");
  const std::string fam = j["family"].get<std::string>();
  KernelSpec s;
  if (fam == "squared_exponential") {
    s.family = KernelFamily::SquaredExponential;
    if (!j.contains("lengthscale") || !j["lengthscale"].is_number())
      throw InputError("squared_exponential kernel needs a numeric \"lengthscale\"");
    s.lengthscale = j["lengthscale"].get<double>();
  } else if (fam == "inverse_multiquadric") {
    s.family = KernelFamily::InverseMultiquadric;
    if (!j.contains("shape") || !j["shape"].is_number())
      throw InputError("inverse_multiquadric kernel needs a numeric \"shape\"");
    s.shape = j["shape"].get<double>();
  } else {
    throw InputError("unknown kernel family \"" + fam + "\"");
  }
  s.validate();
  return s;
}

KernelSpec load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open kernel file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return kernel_from_json(buf.str());
}

}  // namespace kenv
