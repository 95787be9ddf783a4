#include "hypwr/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hypwr {

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Elliptic: return "elliptic";
    case PointClass::Hyperbolic: return "hyperbolic";
    case PointClass::Mixed: return "mixed";
    case PointClass::Glancing: return "glancing";
  }
  return "?";
}

CMat SpectralData::cluster_projector(int k) const {
  const int n = static_cast<int>(eigenvectors.rows());
  CMat vinv = eigenvectors.partialPivLu().inverse();
  CMat proj = CMat::Zero(n, n);
  for (int idx : clusters[k]) proj += eigenvectors.col(idx) * vinv.row(idx);
  return proj;
}

SpectralData eigendecompose(const CMat& a, Real scale, const Tols& tol) {
  const int n = static_cast<int>(a.rows());
  if (!a.allFinite())
    throw Error("spectral", "eigendecompose", "non-finite symbol entries");
  if (scale <= 0.0) scale = std::max(1.0, a.norm());

  Eigen::ComplexEigenSolver<CMat> es(a);
  CVec mu = es.eigenvalues();
  CMat v = es.eigenvectors();

  // Deterministic ordering: by real part, then imaginary part.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (mu[i].real() != mu[j].real()) return mu[i].real() < mu[j].real();
    return mu[i].imag() < mu[j].imag();
  });

  SpectralData out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.eigenvalues[k] = mu[order[k]];
    out.eigenvectors.col(k) = v.col(order[k]);
  }

  // Phase fixing: first component above threshold made real positive.
  for (int k = 0; k < n; ++k) {
    CVec col = out.eigenvectors.col(k);
    col /= col.norm();
    Real big = col.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(col[i]) > 1e-12 * big) {
        Complex ph = col[i] / std::abs(col[i]);
        col /= ph;
        break;
      }
    }
    out.eigenvectors.col(k) = col;
  }

  Real ctol = std::max(tol.cluster_rel * scale, tol.cluster_floor_rel * scale);
  std::vector<int> cluster_of(n, -1);
  for (int k = 0; k < n; ++k) {
    if (!out.clusters.empty() &&
        std::abs(out.eigenvalues[k] - out.eigenvalues[out.clusters.back().back()]) <= ctol) {
      out.clusters.back().push_back(k);
    } else {
      out.clusters.push_back({k});
    }
  }
  for (auto& cl : out.clusters) {
    Complex mean = 0.0;
    for (int idx : cl) mean += out.eigenvalues[idx];
    mean /= static_cast<Real>(cl.size());
    out.cluster_values.push_back(mean);
    if (cl.size() > 1) {
      CMat shifted = a - mean * CMat::Identity(n, n);
      int rank = numeric_rank(shifted, 10.0 * ctol);
      if (n - rank < static_cast<int>(cl.size())) out.jordan_flag = true;
    }
  }

  out.eigvec_rcond = rcond(out.eigenvectors);
  return out;
}

namespace {

// π₋ by resolvent quadrature over a circle enclosing exactly the Im<0 part of
// the spectrum; used when the eigenvector matrix is ill conditioned.
CMat contour_stable_projector(const CMat& a, const CVec& mu) {
  const int n = static_cast<int>(a.rows());
  std::vector<Complex> stable, unstable;
  for (int i = 0; i < n; ++i)
    (mu[i].imag() < 0 ? stable : unstable).push_back(mu[i]);
  if (stable.empty()) return CMat::Zero(n, n);

  Complex center = 0.0;
  for (auto m : stable) center += m;
  center /= static_cast<Real>(stable.size());
  Real r_in = 0.0;
  for (auto m : stable) r_in = std::max(r_in, std::abs(m - center));
  Real r_out = std::numeric_limits<Real>::infinity();
  for (auto m : unstable) r_out = std::min(r_out, std::abs(m - center));
  Real radius = std::isfinite(r_out) ? 0.5 * (r_in + r_out) : (r_in + 1.0);

  const int nq = 128;
  CMat acc = CMat::Zero(n, n);
  for (int k = 0; k < nq; ++k) {
    Real th = 2.0 * M_PI * (k + 0.5) / nq;
    Complex z = center + radius * Complex(std::cos(th), std::sin(th));
    CMat res = (z * CMat::Identity(n, n) - a).partialPivLu().inverse();
    acc += res * (radius * Complex(-std::sin(th), std::cos(th)));
  }
  acc *= Complex(0.0, -1.0) * (2.0 * M_PI / nq) / (2.0 * M_PI);
  return acc;
}

}  // namespace

StableBundle stable_subspace_direct(const CMat& a, Real scale, const Tols& tol) {
  SpectralData sd = eigendecompose(a, scale, tol);
  const int n = static_cast<int>(a.rows());
  Real gap = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < n; ++i) gap = std::min(gap, std::abs(sd.eigenvalues[i].imag()));
  if (gap < tol.gap_min_rel * scale)
    throw NoSpectralGap("spectral", "stable_subspace",
                        "spectrum touches the real axis; use the γ-ladder limit");

  StableBundle out;
  CMat vinv = sd.eigenvectors.partialPivLu().inverse();
  out.projector = CMat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    if (sd.eigenvalues[k].imag() < 0)
      out.projector += sd.eigenvectors.col(k) * vinv.row(k);
  if (sd.eigvec_rcond < 1.0 / tol.eigvec_cond_max) {
    CMat contour = contour_stable_projector(a, sd.eigenvalues);
    // Keep the contour version only when it is a cleaner idempotent.
    Real r_eig = (out.projector * out.projector - out.projector).norm();
    Real r_ctr = (contour * contour - contour).norm();
    if (r_ctr < r_eig) out.projector = contour;
  }
  for (int k = 0; k < n; ++k)
    if (sd.eigenvalues[k].imag() < 0) ++out.dim;
  out.basis = out.dim > 0 ? range_basis(out.projector, out.dim) : CMat::Zero(n, 0);
  return out;
}

StableBundle stable_subspace(const HyperbolicSystem& sys, const BasePoint& X,
                             const Tols& tol) {
  Real lam = X.freq.lambda();
  CMat a = reduced_symbol(sys, X, tol);
  SpectralData sd = eigendecompose(a, lam, tol);
  Real gap = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < sys.n(); ++i)
    gap = std::min(gap, std::abs(sd.eigenvalues[i].imag()));
  if (gap > 1e-6 * lam) return stable_subspace_direct(a, lam, tol);

  // Limit mode: evaluate π₋ at γ_k = 2^{-k} λ and Richardson-extrapolate
  // (ratio 2, first-order base assumption, two elimination levels).
  std::vector<CMat> pis;
  for (int k = 6; k <= 14; ++k) {
    BasePoint Xk = X;
    Xk.freq.gamma = X.freq.gamma + std::ldexp(lam, -k);
    CMat ak = reduced_symbol(sys, Xk, tol);
    pis.push_back(stable_subspace_direct(ak, lam, tol).projector);
  }
  std::reverse(pis.begin(), pis.end());  // smallest γ first
  std::vector<CMat> r1, r2;
  for (std::size_t i = 0; i + 1 < pis.size(); ++i)
    r1.push_back(2.0 * pis[i] - pis[i + 1]);
  for (std::size_t i = 0; i + 1 < r1.size(); ++i)
    r2.push_back((4.0 * r1[i] - r1[i + 1]) / 3.0);

  StableBundle out;
  out.projector = r2.front();
  out.extension_error = (r2[0] - r2[1]).norm();
  Eigen::JacobiSVD<CMat> svd(out.projector, Eigen::ComputeThinU);
  out.dim = (svd.singularValues().array() > 0.5).count();
  out.basis = svd.matrixU().leftCols(out.dim);
  return out;
}

PointClass classify_point(const HyperbolicSystem& sys, const BasePoint& X,
                          const Tols& tol) {
  if (X.freq.gamma != 0.0)
    throw Error("spectral", "classify_point", "classification requires γ = 0");
  Real lam = X.freq.lambda();
  CMat a = reduced_symbol(sys, X, tol);
  SpectralData sd = eigendecompose(a, lam, tol);

  Real real_cut = std::max(tol.realness_rel * lam, tol.cluster_floor_rel * lam);
  bool any_real = false, all_real = true, glancing = false;
  for (std::size_t k = 0; k < sd.clusters.size(); ++k) {
    bool is_real = std::abs(sd.cluster_values[k].imag()) <= real_cut;
    any_real = any_real || is_real;
    all_real = all_real && is_real;
    if (is_real && sd.clusters[k].size() > 1) {
      CMat shifted = a - Complex(sd.cluster_values[k].real(), 0.0) *
                             CMat::Identity(sys.n(), sys.n());
      Real ctol = std::max(tol.cluster_rel * lam, tol.cluster_floor_rel * lam);
      int rank = numeric_rank(shifted, 10.0 * ctol);
      int geometric = sys.n() - rank;
      if (geometric < static_cast<int>(sd.clusters[k].size())) glancing = true;
    }
  }
  if (glancing) return PointClass::Glancing;
  if (all_real) return PointClass::Hyperbolic;
  if (!any_real) return PointClass::Elliptic;
  return PointClass::Mixed;
}

KappaResult kappa_signs(const HyperbolicSystem& sys, const BasePoint& X,
                        const Tols& tol) {
  if (classify_point(sys, X, tol) != PointClass::Hyperbolic)
    throw Error("spectral", "kappa_signs", "point is not hyperbolic");
  Real lam = X.freq.lambda();
  Real h = tol.dtau_step_rel * lam;

  CMat a0 = reduced_symbol(sys, X, tol);
  SpectralData base = eigendecompose(a0, lam, tol);

  // Continue each branch to γ = ±h by nearest-value matching. The symbol
  // formula extends analytically to γ < 0, which keeps the difference central.
  auto continued = [&](Real g) {
    BasePoint Xg = X;
    Xg.freq.gamma = g;
    CMat ag = reduced_symbol(sys, Xg, tol);
    SpectralData sg = eigendecompose(ag, lam, tol);
    CVec matched(sys.n());
    std::vector<bool> used(sys.n(), false);
    for (int j = 0; j < sys.n(); ++j) {
      int best = -1;
      Real dist = std::numeric_limits<Real>::infinity();
      for (int i = 0; i < sys.n(); ++i) {
        if (used[i]) continue;
        Real dij = std::abs(sg.eigenvalues[i] - base.eigenvalues[j]);
        if (dij < dist) { dist = dij; best = i; }
      }
      used[best] = true;
      matched[j] = sg.eigenvalues[best];
    }
    return matched;
  };

  CVec plus = continued(h);
  CVec minus = continued(-h);

  KappaResult out;
  for (int j = 0; j < sys.n(); ++j) {
    Complex dgamma = (plus[j] - minus[j]) / (2.0 * h);
    Complex kap = -kI * dgamma;
    out.max_imag_residual = std::max(out.max_imag_residual, std::abs(kap.imag()));
    if (std::abs(kap.real()) < tol.kappa_min)
      throw ZeroKappa("spectral", "kappa_signs",
                      "|κ| below threshold; glancing-like degeneracy");
    out.kappa.push_back(kap.real());
  }
  return out;
}

bool real_type_check(const CMat& basis, const Tols& tol) {
  const int p = static_cast<int>(basis.cols());
  if (p == 0) return true;
  Mat stacked(basis.rows(), 2 * p);
  stacked << basis.real(), basis.imag();
  Eigen::JacobiSVD<Mat> svd(stacked);
  Real smax = svd.singularValues().maxCoeff();
  int rank = (svd.singularValues().array() > 1e-8 * smax).count();
  (void)tol;
  return rank == p;
}

CMat realify_basis(const CMat& basis, const Tols& tol) {
  if (!real_type_check(basis, tol))
    throw Error("spectral", "realify_basis", "space is not of real type");
  const int p = static_cast<int>(basis.cols());
  Mat stacked(basis.rows(), 2 * p);
  stacked << basis.real(), basis.imag();
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(p).cast<Complex>();
}

}  // namespace hypwr
