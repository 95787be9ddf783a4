#include "hypwr/symmetrizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hypwr {

namespace {

// Columns of the eigendecomposition split into stable/unstable sets; at γ = 0
// hyperbolic points the split follows the limit-mode stable projector.
void stable_unstable_split(const HyperbolicSystem& sys, const BasePoint& X,
                           const SpectralData& sd, std::vector<int>& stable,
                           std::vector<int>& unstable, const Tols& tol) {
  Real lam = X.freq.lambda();
  Real gap = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < sys.n(); ++i)
    gap = std::min(gap, std::abs(sd.eigenvalues[i].imag()));
  if (gap > 1e-6 * lam) {
    for (int i = 0; i < sys.n(); ++i)
      (sd.eigenvalues[i].imag() < 0 ? stable : unstable).push_back(i);
    return;
  }
  StableBundle sb = stable_subspace(sys, X, tol);
  for (int i = 0; i < sys.n(); ++i) {
    CVec col = sd.eigenvectors.col(i);
    Real dist = (sb.projector * col - col).norm();
    (dist < 0.5 ? stable : unstable).push_back(i);
  }
}

}  // namespace

SymmetrizerSymbols build_symmetrizer(const HyperbolicSystem& sys, const Frequency& zeta,
                                     Real rho, std::optional<Real> nu_hint,
                                     const Tols& tol) {
  const int n = sys.n();
  const int p = sys.p();
  BasePoint X = BasePoint::boundary(zeta, sys.d());

  CMat a = reduced_symbol(sys, X, tol);
  SpectralData sd = eigendecompose(a, zeta.lambda(), tol);
  if (sd.jordan_flag)
    throw Error("symmetrizer", "build_symmetrizer",
                "defective symbol; glancing points are excluded");

  std::vector<int> stable, unstable;
  stable_unstable_split(sys, X, sd, stable, unstable, tol);
  if (static_cast<int>(stable.size()) != p)
    throw Error("symmetrizer", "build_symmetrizer",
                "stable dimension != p at this frequency");

  CMat stable_cols(n, p);
  for (int j = 0; j < p; ++j) stable_cols.col(j) = sd.eigenvectors.col(stable[j]);

  SymmetrizerSymbols sym;
  sym.p = p;
  sym.zeta = zeta;
  sym.rho = rho;

  try {
    sym.lop = factor_boundary_matrix(sys, X, stable_cols, nu_hint, tol);
  } catch (const OmegaRootNotFound&) {
    // No critical set reachable in the bracket: the filter degenerates to the
    // identity and q to the inverse of b⁻ (uniform-condition systems).
    CMat bminus = sys.boundary(X).cast<Complex>() * stable_cols;
    sym.lop.basis_used = stable_cols;
    sym.lop.pivot.resize(p);
    for (int j = 0; j < p; ++j) sym.lop.pivot[j] = j;
    sym.lop.delta_value = bminus.determinant();
    sym.lop.dcoeffs = CVec::Zero(std::max(0, p - 1));
    sym.lop.c_matrix = CMat::Identity(p, p);
    sym.lop.p_matrix = bminus;
    sym.lop.delta_tilde = 1.0;
    sym.lop.omega = 0.0;
    sym.lop.nu = 0.0;
    sym.lop.critical_direction = stable_cols.col(0);
    sym.lop.p_rcond = rcond(bminus);
    sym.lop.trivial_filter = true;
  }

  sym.delta_tilde = sym.lop.delta_tilde;

  // e₀: factorization's pivoted stable columns first, then the unstable ones.
  sym.basis.resize(n, n);
  sym.basis.leftCols(p) = sym.lop.basis_used;
  for (std::size_t j = 0; j < unstable.size(); ++j)
    sym.basis.col(p + j) = sd.eigenvectors.col(unstable[j]);
  if (rcond(sym.basis) < 1e-12)
    throw Error("symmetrizer", "build_symmetrizer", "eigenvector basis is singular");

  sym.a_dot = sym.basis.partialPivLu().solve(a * sym.basis);

  sym.delta = CMat::Identity(n, n);
  sym.delta.topLeftCorner(p, p) *= sym.delta_tilde;

  sym.r = Mat::Identity(n, n);
  sym.r.topLeftCorner(p, p) *= -1.0;
  sym.r.bottomRightCorner(n - p, n - p) *= rho;

  sym.sigma = sym.delta.adjoint() * sym.r.cast<Complex>() * sym.delta;

  CMat middle = CMat::Identity(p, p);
  for (int i = 1; i < p; ++i) middle(i, i) = sym.delta_tilde;
  sym.q = sym.lop.c_matrix * middle * sym.lop.p_matrix.partialPivLu().inverse();

  sym.b_plus = sys.boundary(X).cast<Complex>() * sym.basis.rightCols(n - p);
  sym.m.resize(p, n);
  sym.m.leftCols(p) = CMat::Identity(p, p);
  sym.m.rightCols(n - p) = sym.q * sym.b_plus;
  return sym;
}

Real choose_rho(const HyperbolicSystem& sys, const std::vector<Frequency>& sample,
                std::optional<Real> nu_hint, const Tols& tol) {
  Real c_sup = 0.0;
  for (const auto& zeta : sample) {
    // ρ only rescales the unstable block; the convexity constant C does not
    // depend on it, so a placeholder value is fine here.
    SymmetrizerSymbols sym = build_symmetrizer(sys, zeta, 1.0, nu_hint, tol);
    const int n = static_cast<int>(sym.delta.rows());
    CMat block(sym.p, n);
    block.leftCols(sym.p) = CMat::Identity(sym.p, sym.p);
    block.rightCols(n - sym.p) = -sym.q * sym.b_plus;
    Eigen::JacobiSVD<CMat> svd(block);
    Real norm2 = svd.singularValues().maxCoeff();
    c_sup = std::max(c_sup, norm2 * norm2);
  }
  return 2.0 * c_sup + 1.0;
}

ConditionReport verify_symmetrizer_conditions(const std::vector<SymmetrizerSymbols>& syms,
                                              int trials, std::uint64_t seed,
                                              const Tols& tol) {
  (void)tol;
  ConditionReport rep;
  if (syms.empty()) return rep;
  rep.n_trials = trials;
  rep.hermitian = true;
  rep.min_dissipativity_ratio = std::numeric_limits<Real>::infinity();
  rep.min_boundary_slack = std::numeric_limits<Real>::infinity();
  for (const auto& s : syms) {
    rep.bound_constant = std::max(rep.bound_constant, s.r.cwiseAbs().maxCoeff());
    rep.gamma_range.push_back(s.zeta.gamma);
  }
  std::sort(rep.gamma_range.begin(), rep.gamma_range.end());
  rep.gamma_range.erase(std::unique(rep.gamma_range.begin(), rep.gamma_range.end()),
                        rep.gamma_range.end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  auto random_unit = [&](int n) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v[i] = Complex(gauss(rng), gauss(rng));
    return CVec(v / v.norm());
  };

  for (const auto& s : syms) {
    const int n = static_cast<int>(s.sigma.rows());
    Real herm = (s.sigma - s.sigma.adjoint()).norm();
    rep.hermitian_residual = std::max(rep.hermitian_residual,
                                      herm / std::max(1e-300, s.sigma.norm()));
    rep.hermitian = rep.hermitian && herm <= 1e-12 * std::max(1.0, s.sigma.norm());

    CMat qb = s.q_bdot();
    Real beta = s.rho - 1.0;

    for (int t = 0; t < trials; ++t) {
      CVec v1 = random_unit(n);
      CVec v2 = random_unit(n);

      Complex form = (v2.adjoint() * s.sigma * v1)(0, 0);
      Real lhs2 = std::abs(form);
      Real rhs2 = rep.bound_constant * (s.delta * v1).norm() * (s.delta * v2).norm();
      rep.bound_max_violation = std::max(rep.bound_max_violation, lhs2 - rhs2);

      // Dissipativity: Im <σ ȧ v, v> against γ |δ v|².
      Real diss = ((v1.adjoint() * s.sigma * (s.a_dot * v1))(0, 0)).imag();
      Real dv2 = (s.delta * v1).squaredNorm();
      Real denom = s.zeta.gamma * dv2;
      if (denom > 1e-30) {
        Real ratio = diss / denom;
        if (ratio < rep.min_dissipativity_ratio) {
          rep.min_dissipativity_ratio = ratio;
          rep.argmin_dissipativity = v1;
        }
      }

      // Boundary coercivity slack with α = 1, β = ρ - 1.
      Real quad = ((v1.adjoint() * s.sigma * v1)(0, 0)).real();
      Real slack = quad - dv2 + beta * (qb * v1).squaredNorm();
      if (slack < rep.min_boundary_slack) {
        rep.min_boundary_slack = slack;
        rep.argmin_boundary = v1;
      }
    }
  }
  return rep;
}

CMat krylov_space(const CMat& a, const CVec& ell, const Tols& tol) {
  const int n = static_cast<int>(a.rows());
  Real enorm = ell.norm();
  if (enorm == 0.0)
    throw Error("symmetrizer", "krylov_space", "zero starting vector");
  Real ascale = std::max(1.0, a.norm());

  CMat q(n, 0);
  CVec w = ell / enorm;
  for (int k = 0; k < n; ++k) {
    // Orthogonalize twice for stability.
    for (int pass = 0; pass < 2; ++pass)
      if (q.cols() > 0) w -= q * (q.adjoint() * w);
    Real wn = w.norm();
    if (wn <= tol.krylov_trunc * ascale) break;
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = w / wn;
    w = a * q.col(q.cols() - 1);
  }
  return q;
}

KrylovDegeneracyReport check_krylov_degeneracy(const SymmetrizerSymbols& sym,
                                               const Tols& tol) {
  // Work in e₀ coordinates where σ and ȧ live.
  CVec ell_coords = sym.basis.partialPivLu().solve(sym.lop.critical_direction);
  CMat k = krylov_space(sym.a_dot, ell_coords, tol);

  KrylovDegeneracyReport rep;
  rep.krylov_dim = static_cast<int>(k.cols());
  CMat compressed = k.adjoint() * sym.sigma * k;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (compressed + compressed.adjoint()));
  rep.max_quadratic_form = es.eigenvalues().cwiseAbs().maxCoeff();
  rep.within_tolerance = rep.max_quadratic_form <= tol.krylov_residual;
  return rep;
}

BoundaryProjectorFactor build_boundary_projector_factor(const CMat& b, const Tols& tol) {
  (void)tol;
  const int p = static_cast<int>(b.rows());
  const int n = static_cast<int>(b.cols());
  Eigen::JacobiSVD<CMat> svd(b, Eigen::ComputeFullV);
  Real smax = svd.singularValues().maxCoeff();
  if ((svd.singularValues().array() > 1e-12 * std::max(smax, 1e-300)).count() < p)
    throw RankDeficient("symmetrizer", "build_boundary_projector_factor",
                        "boundary matrix is rank deficient");

  BoundaryProjectorFactor out;
  out.x = svd.matrixV().rightCols(n - p).adjoint();

  CMat stacked(n, n);
  stacked.topRows(p) = b;
  stacked.bottomRows(n - p) = out.x;
  CMat inv = stacked.partialPivLu().inverse();
  out.y = inv.leftCols(p);
  out.d = inv.rightCols(n - p);
  out.by_identity_residual = (b * out.y - CMat::Identity(p, p)).norm();
  return out;
}

}  // namespace hypwr
