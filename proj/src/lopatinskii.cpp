#include "hypwr/lopatinskii.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hypwr {

namespace {

CMat boundary_c(const HyperbolicSystem& sys, const BasePoint& X) {
  return sys.boundary(X).cast<Complex>();
}

// Real orthogonal Procrustes for realified frames (keeps determinant signs
// continuous along scans).
CMat align_real(const CMat& q, const CMat& ref) {
  Mat qr = q.real(), rr = ref.real();
  Eigen::JacobiSVD<Mat> svd(qr.transpose() * rr, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat u = svd.matrixU() * svd.matrixV().transpose();
  return (qr * u).cast<Complex>();
}

struct DeltaEval {
  Complex delta;
  CMat basis;
  PointClass cls;
};

// Stable basis + determinant at a γ = 0 point, realified on hyperbolic points
// and aligned against a reference frame when one is supplied.
DeltaEval eval_delta_gamma0(const HyperbolicSystem& sys, const BasePoint& X,
                            const CMat* ref, const Tols& tol) {
  DeltaEval out;
  out.cls = classify_point(sys, X, tol);
  if (out.cls == PointClass::Glancing) {
    out.delta = Complex(std::numeric_limits<Real>::quiet_NaN(), 0.0);
    return out;
  }
  StableBundle sb = stable_subspace(sys, X, tol);
  CMat basis = sb.basis;
  if (out.cls == PointClass::Hyperbolic && real_type_check(basis, tol))
    basis = realify_basis(basis, tol);
  if (ref) {
    if (out.cls == PointClass::Hyperbolic && basis.imag().norm() < 1e-12 &&
        ref->imag().norm() < 1e-12)
      basis = align_real(basis, *ref);
    else
      basis = procrustes_align(basis, *ref);
  }
  out.basis = basis;
  out.delta = lopatinskii_determinant(sys, X, basis);
  return out;
}

BasePoint with_tau(const BasePoint& X, Real tau) {
  BasePoint Y = X;
  Y.freq.tau = tau;
  return Y;
}

// Secant iteration with bracket fallback on g(τ) = Δ(τ) along fixed (t,y,η),
// γ = 0. The basis is chained against `ref0` so the scalar stays continuous.
std::optional<CriticalRoot> refine_root(const HyperbolicSystem& sys,
                                        const BasePoint& X0, Real ta, Real tb,
                                        Complex ga, Complex gb, const CMat& ref0,
                                        const Tols& tol) {
  const bool real_mode = std::abs(ga.imag()) + std::abs(gb.imag()) <
                         1e-6 * (std::abs(ga) + std::abs(gb) + 1e-30);
  Real lo = std::min(ta, tb), hi = std::max(ta, tb);
  Real t0 = ta, t1 = tb;
  Complex g0 = ga, g1 = gb;
  CMat ref = ref0;

  auto eval = [&](Real tau) -> Complex {
    DeltaEval de = eval_delta_gamma0(sys, with_tau(X0, tau), &ref, tol);
    if (de.cls == PointClass::Glancing) return Complex(1e9, 0);
    ref = de.basis;
    return de.delta;
  };

  for (int it = 0; it < 80; ++it) {
    if (std::abs(g1) < tol.root_residual) break;
    Complex denom = g1 - g0;
    Real step;
    if (std::abs(denom) < 1e-300) {
      step = 0.5 * (lo + hi) - t1;
    } else {
      Complex s = g1 * (t1 - t0) / denom;
      step = -s.real();
    }
    Real tn = t1 + step;
    if (real_mode) {
      // Maintain a sign-change bracket when we have one.
      if (g0.real() * g1.real() < 0) {
        Real bl = std::min(t0, t1), bh = std::max(t0, t1);
        if (tn <= bl || tn >= bh) tn = 0.5 * (bl + bh);
      } else if (tn < lo - 0.5 * (hi - lo) || tn > hi + 0.5 * (hi - lo)) {
        return std::nullopt;
      }
    } else if (tn < lo - (hi - lo) || tn > hi + (hi - lo)) {
      return std::nullopt;
    }
    Complex gn = eval(tn);
    if (real_mode && g0.real() * g1.real() < 0) {
      // Keep the endpoint that preserves the sign change.
      if (gn.real() * g1.real() < 0) { t0 = t1; g0 = g1; }
      t1 = tn;
      g1 = gn;
    } else {
      t0 = t1; g0 = g1;
      t1 = tn; g1 = gn;
    }
    if (std::abs(t1 - t0) < 1e-15 * std::max(1.0, std::abs(t1))) break;
  }
  if (std::abs(g1) >= tol.root_residual) return std::nullopt;

  CriticalRoot root;
  root.point = with_tau(X0, t1);
  root.zeta = root.point.freq;
  root.residual = std::abs(g1);
  root.cls = classify_point(sys, root.point, tol);

  Real h = tol.dtau_step_rel * std::max(1.0, root.zeta.lambda());
  DeltaEval ctr = eval_delta_gamma0(sys, root.point, &ref, tol);
  DeltaEval plus = eval_delta_gamma0(sys, with_tau(X0, t1 + h), &ctr.basis, tol);
  DeltaEval minus = eval_delta_gamma0(sys, with_tau(X0, t1 - h), &ctr.basis, tol);
  root.dtau_delta = (plus.delta - minus.delta) / (2.0 * h);
  return root;
}

}  // namespace

std::vector<CMat> continuous_stable_basis(const HyperbolicSystem& sys,
                                          const std::vector<BasePoint>& grid,
                                          const Tols& tol) {
  std::vector<CMat> out;
  out.reserve(grid.size());
  const CMat* prev = nullptr;
  for (const auto& X : grid) {
    if (X.freq.gamma == 0.0 && classify_point(sys, X, tol) == PointClass::Glancing)
      throw GlancingOnPath("lopatinskii", "continuous_stable_basis",
                           "grid path crosses a glancing point");
    StableBundle sb = stable_subspace(sys, X, tol);
    CMat basis = sb.basis;
    if (prev) {
      // Project the previous frame through π₋, then minimal-rotation align.
      CMat target = sb.projector * (*prev);
      Eigen::JacobiSVD<CMat> svd(basis.adjoint() * target,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
      basis = basis * (svd.matrixU() * svd.matrixV().adjoint());
    }
    out.push_back(basis);
    prev = &out.back();
  }
  return out;
}

Complex lopatinskii_determinant(const HyperbolicSystem& sys, const BasePoint& X,
                                const CMat& basis) {
  if (basis.cols() != sys.p())
    throw Error("lopatinskii", "lopatinskii_determinant", "basis must have p columns");
  CMat bm = boundary_c(sys, X) * basis;
  return bm.determinant();
}

std::vector<BasePoint> circle_grid(int count, Real gamma, Real t, Real y) {
  std::vector<BasePoint> grid;
  grid.reserve(count);
  for (int k = 0; k < count; ++k) {
    Real phi = 2.0 * M_PI * k / count;
    Vec eta(1);
    eta << std::sin(phi);
    Frequency f(std::cos(phi), eta, gamma);
    Vec yv(1);
    yv << y;
    grid.emplace_back(t, yv, 0.0, f);
  }
  return grid;
}

std::vector<CriticalRoot> find_critical_set(const HyperbolicSystem& sys,
                                            const std::vector<BasePoint>& sphere_grid,
                                            const Tols& tol) {
  std::vector<CriticalRoot> roots;
  if (sphere_grid.size() < 2) return roots;

  std::vector<DeltaEval> evals;
  evals.reserve(sphere_grid.size());
  const CMat* chain = nullptr;
  for (const auto& X : sphere_grid) {
    DeltaEval de = eval_delta_gamma0(sys, X, chain, tol);
    evals.push_back(de);
    chain = (de.cls == PointClass::Glancing) ? nullptr : &evals.back().basis;
  }

  Real median_abs;
  {
    std::vector<Real> mags;
    for (const auto& e : evals)
      if (e.cls != PointClass::Glancing) mags.push_back(std::abs(e.delta));
    if (mags.empty()) return roots;
    std::sort(mags.begin(), mags.end());
    median_abs = mags[mags.size() / 2];
  }

  auto near_duplicate = [&](const CriticalRoot& r) {
    for (const auto& q : roots) {
      Real d = std::abs(r.zeta.tau - q.zeta.tau) + (r.zeta.eta - q.zeta.eta).norm();
      if (d < 1e-6 * std::max(1.0, r.zeta.lambda())) return true;
    }
    return false;
  };

  for (std::size_t k = 0; k + 1 < evals.size(); ++k) {
    const DeltaEval& a = evals[k];
    const DeltaEval& b = evals[k + 1];
    if (a.cls == PointClass::Glancing || b.cls == PointClass::Glancing) continue;

    bool both_hyp = a.cls == PointClass::Hyperbolic && b.cls == PointClass::Hyperbolic;
    bool sign_change = both_hyp && a.delta.real() * b.delta.real() < 0;
    bool dip = std::min(std::abs(a.delta), std::abs(b.delta)) < 0.05 * median_abs;
    if (!sign_change && !dip) continue;

    // Refine in τ at fixed η taken from the endpoint with smaller |Δ|.
    const BasePoint& anchor =
        std::abs(a.delta) <= std::abs(b.delta) ? sphere_grid[k] : sphere_grid[k + 1];
    Real ta = sphere_grid[k].freq.tau, tb = sphere_grid[k + 1].freq.tau;
    if (std::abs(tb - ta) < 1e-14) continue;

    DeltaEval ea = eval_delta_gamma0(sys, with_tau(anchor, ta), nullptr, tol);
    if (ea.cls == PointClass::Glancing) continue;
    DeltaEval eb = eval_delta_gamma0(sys, with_tau(anchor, tb), &ea.basis, tol);
    if (eb.cls == PointClass::Glancing) continue;

    auto root = refine_root(sys, anchor, ta, tb, ea.delta, eb.delta, ea.basis, tol);
    if (root && !near_duplicate(*root)) roots.push_back(*root);
  }
  return roots;
}

WRReport check_wr_membership(const HyperbolicSystem& sys, int sphere_resolution,
                             const std::vector<Real>& gamma_ladder, const Tols& tol) {
  WRReport report;
  std::vector<Real> ladder = gamma_ladder;
  if (ladder.empty()) ladder = {1e-2, 3e-2, 1e-1, 3e-1, 1.0, 3.0, 10.0};

  // (a) weak condition: |Δ| on the γ > 0 grid stays above threshold.
  Real min_abs = std::numeric_limits<Real>::infinity();
  for (Real g : ladder) {
    for (const auto& X : circle_grid(sphere_resolution, g)) {
      StableBundle sb = stable_subspace(sys, X, tol);
      Complex delta = lopatinskii_determinant(sys, X, sb.basis);
      min_abs = std::min(min_abs, std::abs(delta));
    }
  }
  report.min_abs_delta_gamma_pos = min_abs;
  report.weak_lopatinskii = min_abs > tol.weak_lc_min;

  // (b)+(c) critical set at γ = 0.
  report.roots = find_critical_set(sys, circle_grid(sphere_resolution, 0.0), tol);
  bool all_hyp = !report.roots.empty();
  bool all_dtau = !report.roots.empty();
  for (const auto& r : report.roots) {
    all_hyp = all_hyp && (r.cls == PointClass::Hyperbolic);
    all_dtau = all_dtau && (std::abs(r.dtau_delta) > tol.dtau_min);
  }
  report.critical_set_hyperbolic = all_hyp;
  report.first_order_vanishing = all_dtau;
  report.wr = report.weak_lopatinskii && all_hyp && all_dtau;
  report.uniform_lopatinskii = report.weak_lopatinskii && report.roots.empty();
  return report;
}

std::optional<Real> find_nu(const HyperbolicSystem& sys, Real t, const Vec& y,
                            const Vec& eta, Real tau_ref, const Tols& tol) {
  Real lam_ref = std::sqrt(tau_ref * tau_ref + eta.squaredNorm());
  if (lam_ref == 0.0) lam_ref = 1.0;
  Real lo = -tol.omega_bracket_mult * lam_ref;
  Real hi = tol.omega_bracket_mult * lam_ref;
  const int cells = tol.omega_bracket_cells;

  BasePoint X0(t, y, 0.0, Frequency(tau_ref, eta, 0.0));

  std::vector<DeltaEval> evals(cells + 1);
  const CMat* chain = nullptr;
  std::vector<Real> taus(cells + 1);
  for (int k = 0; k <= cells; ++k) {
    taus[k] = lo + (hi - lo) * k / cells;
    Frequency f(taus[k], eta, 0.0);
    if (f.lambda() < 1e-12) {
      evals[k].cls = PointClass::Glancing;  // ζ = 0 excluded; treat as a gap
      chain = nullptr;
      continue;
    }
    evals[k] = eval_delta_gamma0(sys, with_tau(X0, taus[k]), chain, tol);
    chain = (evals[k].cls == PointClass::Glancing) ? nullptr : &evals[k].basis;
  }

  std::optional<Real> best;
  for (int k = 0; k < cells; ++k) {
    const DeltaEval& a = evals[k];
    const DeltaEval& b = evals[k + 1];
    if (a.cls == PointClass::Glancing || b.cls == PointClass::Glancing) continue;
    bool both_hyp = a.cls == PointClass::Hyperbolic && b.cls == PointClass::Hyperbolic;
    bool sign_change = both_hyp && a.delta.real() * b.delta.real() < 0;
    bool dip = std::min(std::abs(a.delta), std::abs(b.delta)) < 1e-3;
    if (!sign_change && !dip) continue;
    auto root = refine_root(sys, X0, taus[k], taus[k + 1], a.delta, b.delta,
                            a.basis, tol);
    if (!root) continue;
    if (!best || std::abs(root->zeta.tau - tau_ref) < std::abs(*best - tau_ref))
      best = root->zeta.tau;
  }
  return best;
}

namespace {

// k(X) and Δ̃(X) for a fixed pivot order, basis chained to `ref`.
struct KDelta {
  CVec k;
  Complex delta_tilde;
};

KDelta eval_k_delta(const HyperbolicSystem& sys, const BasePoint& X, Real nu,
                    const std::vector<int>& pivot, const CMat& ref, const Tols& tol) {
  StableBundle sb = stable_subspace(sys, X, tol);
  CMat basis = procrustes_align(sb.basis, ref);
  const int p = sys.p();
  CMat piv(basis.rows(), p);
  for (int j = 0; j < p; ++j) piv.col(j) = basis.col(pivot[j]);
  CMat bminus = boundary_c(sys, X) * piv;

  KDelta out;
  if (p == 1) {
    out.k = bminus.col(0);
  } else {
    CMat h = bminus.block(1, 1, p - 1, p - 1);
    CVec b1p = bminus.col(0).tail(p - 1);
    CVec d = h.fullPivLu().solve(b1p);
    out.k = bminus.col(0);
    for (int i = 1; i < p; ++i) out.k -= d[i - 1] * bminus.col(i);
    out.k.tail(p - 1).setZero();
  }
  Real omega = X.freq.tau - nu;
  out.delta_tilde = Complex(X.freq.gamma, omega) / X.freq.lambda();
  return out;
}

}  // namespace

LopatinskiiData factor_boundary_matrix(const HyperbolicSystem& sys, const BasePoint& X,
                                       const std::optional<CMat>& basis_opt,
                                       std::optional<Real> nu_hint, const Tols& tol) {
  const int p = sys.p();
  CMat basis;
  if (basis_opt) {
    basis = *basis_opt;
  } else {
    basis = stable_subspace(sys, X, tol).basis;
  }
  if (basis.cols() != p)
    throw Error("lopatinskii", "factor_boundary_matrix", "basis must have p columns");

  CMat b = boundary_c(sys, X);
  CMat bminus0 = b * basis;

  {
    Eigen::JacobiSVD<CMat> svd(bminus0);
    Real smax = svd.singularValues().maxCoeff();
    if (p >= 2 && svd.singularValues()[p - 2] < 1e-10 * std::max(smax, 1e-30))
      throw RankDeficient("lopatinskii", "factor_boundary_matrix",
                          "rank b⁻ < p-1; first-order degeneracy hypothesis violated");
  }

  // Greedy pivot: the critical column goes first, maximizing |det h| of the
  // delete-row-1/column-1 block.
  std::vector<int> pivot(p);
  for (int j = 0; j < p; ++j) pivot[j] = j;
  if (p >= 2) {
    Real best = -1.0;
    int best_c = 0;
    for (int c = 0; c < p; ++c) {
      CMat h(p - 1, p - 1);
      int cc = 0;
      for (int j = 0; j < p; ++j) {
        if (j == c) continue;
        h.col(cc++) = bminus0.col(j).tail(p - 1);
      }
      Real det = std::abs(h.determinant());
      if (det > best) { best = det; best_c = c; }
    }
    pivot.clear();
    pivot.push_back(best_c);
    for (int j = 0; j < p; ++j)
      if (j != best_c) pivot.push_back(j);
  }

  CMat piv_basis(basis.rows(), p);
  for (int j = 0; j < p; ++j) piv_basis.col(j) = basis.col(pivot[j]);
  CMat bminus = b * piv_basis;

  LopatinskiiData out;
  out.pivot = pivot;
  out.basis_used = piv_basis;
  out.delta_value = bminus.determinant();

  // d-coefficients and c(X).
  CVec d = CVec::Zero(std::max(0, p - 1));
  if (p >= 2) {
    CMat h = bminus.block(1, 1, p - 1, p - 1);
    d = h.fullPivLu().solve(bminus.col(0).tail(p - 1));
  }
  out.dcoeffs = d;
  out.c_matrix = CMat::Identity(p, p);
  for (int i = 1; i < p; ++i) out.c_matrix(i, 0) = -d[i - 1];

  // ν by root-finding Δ in τ on the γ = 0 slice.
  Real nu;
  if (nu_hint) {
    nu = *nu_hint;
  } else {
    auto found = find_nu(sys, X.t, X.y, X.freq.eta, X.freq.tau, tol);
    if (!found)
      throw OmegaRootNotFound("lopatinskii", "factor_boundary_matrix",
                              "no Δ zero in the τ search bracket");
    nu = *found;
  }
  out.nu = nu;
  out.omega = X.freq.tau - nu;
  out.delta_tilde = Complex(X.freq.gamma, out.omega) / X.freq.lambda();

  CVec k = bminus.col(0);
  for (int i = 1; i < p; ++i) k -= d[i - 1] * bminus.col(i);
  if (p >= 2) k.tail(p - 1).setZero();

  out.p_matrix.resize(p, p);
  if (std::abs(out.delta_tilde) > tol.delta_tilde_division) {
    out.p_matrix.col(0) = k / out.delta_tilde;
  } else {
    // Limit form: difference quotient in τ through the root.
    Real h = 1e-4 * std::max(1.0, X.freq.lambda());
    BasePoint Xp = with_tau(X, X.freq.tau + h);
    BasePoint Xm = with_tau(X, X.freq.tau - h);
    KDelta kp = eval_k_delta(sys, Xp, nu, pivot, piv_basis, tol);
    KDelta km = eval_k_delta(sys, Xm, nu, pivot, piv_basis, tol);
    out.p_matrix.col(0) = (kp.k - km.k) / (kp.delta_tilde - km.delta_tilde);
  }
  for (int i = 1; i < p; ++i) out.p_matrix.col(i) = bminus.col(i);
  out.p_rcond = rcond(out.p_matrix);

  CMat middle = CMat::Identity(p, p);
  middle(0, 0) = out.delta_tilde;
  CMat cinv = out.c_matrix.partialPivLu().inverse();
  out.factorization_residual = (bminus - out.p_matrix * middle * cinv).norm();

  out.critical_direction = piv_basis.col(0);
  for (int i = 1; i < p; ++i) out.critical_direction -= d[i - 1] * piv_basis.col(i);
  return out;
}

}  // namespace hypwr
