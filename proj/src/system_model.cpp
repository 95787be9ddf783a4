#include "hypwr/system_model.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hypwr {

using nlohmann::json;

HyperbolicSystem::HyperbolicSystem(std::vector<Mat> coeffs, Mat boundary) {
  if (coeffs.empty()) throw ParseError("system_model", "ctor", "no coefficient matrices");
  d_ = static_cast<int>(coeffs.size());
  n_ = static_cast<int>(coeffs[0].rows());
  for (const auto& m : coeffs)
    if (m.rows() != n_ || m.cols() != n_)
      throw ParseError("system_model", "ctor", "coefficient matrices must all be n x n");
  if (boundary.cols() != n_)
    throw ParseError("system_model", "ctor", "boundary matrix must have n columns");
  p_ = static_cast<int>(boundary.rows());
  kind_ = CoeffKind::Constant;
  coeff_const_ = std::move(coeffs);
  boundary_const_ = std::move(boundary);
}

HyperbolicSystem::HyperbolicSystem(int n, int d,
                                   std::vector<std::vector<ScalarExpr>> coeff_exprs,
                                   std::vector<ScalarExpr> boundary_exprs, int p)
    : n_(n), d_(d), p_(p),
      coeff_exprs_(std::move(coeff_exprs)),
      boundary_exprs_(std::move(boundary_exprs)) {
  if (static_cast<int>(coeff_exprs_.size()) != d_)
    throw ParseError("system_model", "ctor", "expected d coefficient matrices");
  for (const auto& e : coeff_exprs_)
    if (static_cast<int>(e.size()) != n_ * n_)
      throw ParseError("system_model", "ctor", "coefficient entries must be n*n");
  if (static_cast<int>(boundary_exprs_.size()) != p_ * n_)
    throw ParseError("system_model", "ctor", "boundary entries must be p*n");
  finalize();
}

void HyperbolicSystem::finalize() {
  bool all_const = true;
  for (const auto& m : coeff_exprs_)
    for (const auto& e : m) all_const = all_const && e.is_constant();
  for (const auto& e : boundary_exprs_) all_const = all_const && e.is_constant();

  kind_ = all_const ? CoeffKind::Constant : CoeffKind::Variable;

  Vec y0 = Vec::Zero(std::max(1, d_ - 1));
  if (all_const) {
    coeff_const_.resize(d_);
    for (int j = 0; j < d_; ++j) {
      coeff_const_[j].resize(n_, n_);
      for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c)
          coeff_const_[j](r, c) = coeff_exprs_[j][r * n_ + c].eval(0, y0, 0);
    }
    Mat b(p_, n_);
    for (int r = 0; r < p_; ++r)
      for (int c = 0; c < n_; ++c) b(r, c) = boundary_exprs_[r * n_ + c].eval(0, y0, 0);
    boundary_const_ = b;
  } else {
    // The boundary matrix may still be constant even when A_j vary.
    bool b_const = true;
    for (const auto& e : boundary_exprs_) b_const = b_const && e.is_constant();
    if (b_const) {
      Mat b(p_, n_);
      for (int r = 0; r < p_; ++r)
        for (int c = 0; c < n_; ++c) b(r, c) = boundary_exprs_[r * n_ + c].eval(0, y0, 0);
      boundary_const_ = b;
    }
  }
}

void HyperbolicSystem::clamp_to_freeze_box(Real& t, Vec& y, Real& xd) const {
  if (freeze_lo_.size() == 0) return;
  t = std::clamp(t, freeze_lo_[0], freeze_hi_[0]);
  for (int k = 0; k < y.size(); ++k)
    y[k] = std::clamp(y[k], freeze_lo_[1 + k], freeze_hi_[1 + k]);
  xd = std::clamp(xd, freeze_lo_[d_], freeze_hi_[d_]);
}

Mat HyperbolicSystem::coeff(int j, Real t, const Vec& y, Real xd) const {
  if (!coeff_const_.empty() && kind_ == CoeffKind::Constant) return coeff_const_[j];
  Vec yc = y;
  clamp_to_freeze_box(t, yc, xd);
  Mat m(n_, n_);
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c) m(r, c) = coeff_exprs_[j][r * n_ + c].eval(t, yc, xd);
  return m;
}

Mat HyperbolicSystem::boundary(Real t, const Vec& y) const {
  if (boundary_const_) return *boundary_const_;
  Vec yc = y;
  Real xd = 0.0;
  clamp_to_freeze_box(t, yc, xd);
  Mat b(p_, n_);
  for (int r = 0; r < p_; ++r)
    for (int c = 0; c < n_; ++c) b(r, c) = boundary_exprs_[r * n_ + c].eval(t, yc, 0.0);
  return b;
}

namespace {

ScalarExpr entry_to_expr(const json& v, const std::map<std::string, Real>& params) {
  if (v.is_number()) return ScalarExpr::constant(v.get<Real>());
  if (v.is_string()) return ScalarExpr::parse(v.get<std::string>(), params);
  throw ParseError("system_model", "from_json", "matrix entries must be numbers or strings");
}

}  // namespace

HyperbolicSystem HyperbolicSystem::from_json_text(
    const std::string& text, const std::map<std::string, Real>& param_overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("system_model", "from_json",
                     std::string("invalid JSON at byte ") + std::to_string(e.byte) +
                         ": " + e.what());
  }

  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key))
      throw ParseError("system_model", "from_json", std::string("missing key '") + key + "'");
    return doc.at(key);
  };

  int n = require("n").get<int>();
  int d = require("d").get<int>();
  int p = require("p").get<int>();
  if (n < 1 || d < 2 || p < 0 || p > n)
    throw ParseError("system_model", "from_json", "inconsistent n/d/p");

  std::map<std::string, Real> params;
  if (doc.contains("params"))
    for (auto& [k, v] : doc.at("params").items()) params[k] = v.get<Real>();
  for (auto& [k, v] : param_overrides) params[k] = v;

  const json& mats = require("matrices");
  if (!mats.is_array() || static_cast<int>(mats.size()) != d)
    throw ParseError("system_model", "from_json", "'matrices' must hold d arrays");

  std::vector<std::vector<ScalarExpr>> coeffs(d);
  for (int j = 0; j < d; ++j) {
    const json& m = mats.at(j);
    if (!m.is_array() || static_cast<int>(m.size()) != n)
      throw ParseError("system_model", "from_json", "each matrix must be n rows");
    for (int r = 0; r < n; ++r) {
      const json& row = m.at(r);
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw ParseError("system_model", "from_json", "matrix rows must have n entries");
      for (int c = 0; c < n; ++c) coeffs[j].push_back(entry_to_expr(row.at(c), params));
    }
  }

  const json& bd = require("boundary");
  if (!bd.is_array() || static_cast<int>(bd.size()) != p)
    throw ParseError("system_model", "from_json", "'boundary' must hold p rows");
  std::vector<ScalarExpr> bexprs;
  for (int r = 0; r < p; ++r) {
    const json& row = bd.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ParseError("system_model", "from_json", "boundary rows must have n entries");
    for (int c = 0; c < n; ++c) bexprs.push_back(entry_to_expr(row.at(c), params));
  }

  HyperbolicSystem sys(n, d, std::move(coeffs), std::move(bexprs), p);
  sys.params_ = params;
  if (doc.contains("freeze_box")) {
    auto box = doc["freeze_box"].get<std::vector<Real>>();
    if (static_cast<int>(box.size()) != 2 * (d + 1))
      throw ParseError("system_model", "from_json",
                       "'freeze_box' must hold 2(d+1) bounds");
    Vec lo(d + 1), hi(d + 1);
    for (int i = 0; i <= d; ++i) {
      lo[i] = box[i];
      hi[i] = box[d + 1 + i];
    }
    sys.set_freeze_box(lo, hi);
  }
  return sys;
}

void HyperbolicSystem::set_freeze_box(Vec lo, Vec hi) {
  if (lo.size() != d_ + 1 || hi.size() != d_ + 1)
    throw ParseError("system_model", "set_freeze_box", "box must have d+1 bounds");
  freeze_lo_ = std::move(lo);
  freeze_hi_ = std::move(hi);
}

HyperbolicSystem HyperbolicSystem::from_json_file(
    const std::filesystem::path& path, const std::map<std::string, Real>& param_overrides) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("system_model", "from_json", "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), param_overrides);
}

CMat reduced_symbol(const HyperbolicSystem& sys, const BasePoint& X, const Tols& tol) {
  if (X.freq.is_zero())
    throw Error("system_model", "reduced_symbol", "zero frequency");
  const int n = sys.n();
  const int d = sys.d();
  Mat ad = sys.coeff(d - 1, X);
  if (rcond(ad.cast<Complex>()) < tol.rcond_min)
    throw SingularBoundaryMatrix("system_model", "reduced_symbol",
                                 "A_d numerically singular (characteristic boundary)");
  CMat num = X.freq.rho() * CMat::Identity(n, n);
  for (int j = 0; j + 1 < d; ++j)
    num += Complex(X.freq.eta[j], 0.0) * sys.coeff(j, X).cast<Complex>();
  return ad.cast<Complex>().partialPivLu().solve(num);
}

Complex characteristic_polynomial(const HyperbolicSystem& sys, const BasePoint& X,
                                  Real xi_d, const Tols& tol) {
  CMat a = reduced_symbol(sys, X, tol);
  return (Complex(xi_d, 0.0) * CMat::Identity(sys.n(), sys.n()) + a).determinant();
}

namespace {

// Directions on S^{d-1} for the hyperbolicity scan; deterministic layouts.
std::vector<Vec> direction_grid(int dim, int count) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (dim == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
    return dirs;
  }
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      Real phi = 2.0 * M_PI * k / count;
      Vec v(2);
      v << std::cos(phi), std::sin(phi);
      dirs.push_back(v);
    }
    return dirs;
  }
  // Fibonacci lattice on S^2, then padded coordinates for dim > 3.
  const Real golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (int k = 0; k < count; ++k) {
    Real z = 1.0 - 2.0 * (k + 0.5) / count;
    Real r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Real phi = 2.0 * M_PI * k / golden;
    Vec v = Vec::Zero(dim);
    v[0] = r * std::cos(phi);
    v[1] = r * std::sin(phi);
    v[2] = z;
    dirs.push_back(v);
  }
  return dirs;
}

struct ClusterInfo {
  std::vector<int> sizes;  // sorted
  bool semisimple = true;
  bool real = true;
};

ClusterInfo analyze_direction(const Mat& a_dir, Real scale, const Tols& tol) {
  ClusterInfo out;
  Eigen::ComplexEigenSolver<CMat> es(a_dir.cast<Complex>());
  CVec mu = es.eigenvalues();
  const int n = static_cast<int>(mu.size());
  Real ctol = std::max(tol.cluster_rel * scale, tol.cluster_floor_rel * scale);

  for (int i = 0; i < n; ++i)
    if (std::abs(mu[i].imag()) > std::max(tol.realness_rel * scale, ctol)) out.real = false;

  // Greedy transitive clustering on sorted real parts.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (mu[i].real() != mu[j].real()) return mu[i].real() < mu[j].real();
    return mu[i].imag() < mu[j].imag();
  });
  std::vector<std::vector<int>> clusters;
  for (int idx : order) {
    if (!clusters.empty() && std::abs(mu[idx] - mu[clusters.back().back()]) <= ctol)
      clusters.back().push_back(idx);
    else
      clusters.push_back({idx});
  }
  for (const auto& cl : clusters) {
    out.sizes.push_back(static_cast<int>(cl.size()));
    if (cl.size() > 1) {
      Complex center = 0.0;
      for (int idx : cl) center += mu[idx];
      center /= static_cast<Real>(cl.size());
      CMat shifted = a_dir.cast<Complex>() - center * CMat::Identity(n, n);
      int rank = numeric_rank(shifted, 10.0 * ctol);
      int geometric = n - rank;
      if (geometric < static_cast<int>(cl.size())) out.semisimple = false;
    }
  }
  std::sort(out.sizes.begin(), out.sizes.end());
  return out;
}

}  // namespace

AssumptionReport check_assumptions(const HyperbolicSystem& sys,
                                   const std::vector<BasePoint>& sample_points,
                                   int direction_grid_count, const Tols& tol) {
  if (sample_points.empty())
    throw Error("system_model", "check_assumptions", "empty sample set");

  AssumptionReport report;
  auto dirs = direction_grid(sys.d(), direction_grid_count);

  for (const auto& X : sample_points) {
    AssumptionReport::PointChecks pc;
    Mat ad = sys.coeff(sys.d() - 1, X);
    pc.ad_rcond = rcond(ad.cast<Complex>());
    pc.ad_invertible = pc.ad_rcond >= tol.rcond_min;

    Mat b = sys.boundary(X);
    Eigen::JacobiSVD<Mat> bsvd(b);
    Real bscale = bsvd.singularValues().size() ? bsvd.singularValues().maxCoeff() : 0.0;
    pc.boundary_full_rank =
        bscale > 0.0 &&
        (bsvd.singularValues().array() > 1e-10 * bscale).count() == sys.p();

    if (pc.ad_invertible) {
      Eigen::EigenSolver<Mat> aes(ad);
      int npos = 0;
      for (int i = 0; i < sys.n(); ++i)
        if (aes.eigenvalues()[i].real() > 0) ++npos;
      pc.p_matches_positive_eigenvalues = (npos == sys.p());
    }

    pc.spectrum_real = true;
    pc.semisimple = true;
    pc.multiplicities_constant = true;
    std::vector<int> pattern;
    bool first = true;
    for (const auto& xi : dirs) {
      Mat a_dir = Mat::Zero(sys.n(), sys.n());
      for (int j = 0; j < sys.d(); ++j) a_dir += xi[j] * sys.coeff(j, X);
      Real scale = std::max(1.0, a_dir.norm());
      ClusterInfo info = analyze_direction(a_dir, scale, tol);
      pc.spectrum_real = pc.spectrum_real && info.real;
      pc.semisimple = pc.semisimple && info.semisimple;
      if (first) {
        pattern = info.sizes;
        first = false;
      } else if (info.sizes != pattern) {
        pc.multiplicities_constant = false;
      }
    }
    pc.multiplicity_pattern = pattern;
    report.points.push_back(std::move(pc));
  }
  return report;
}

}  // namespace hypwr
