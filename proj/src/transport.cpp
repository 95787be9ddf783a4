#include "hypwr/transport.hpp"

#include "hypwr/symmetrizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hypwr {

bool Chart::contains(const FlowState& s) const {
  if (box_lo.size() > 0) {
    const int d = static_cast<int>(s.y.size()) + 1;
    Vec pos(d + 1);
    pos[0] = s.t;
    pos.segment(1, d - 1) = s.y;
    pos[d] = s.x_d;
    for (int i = 0; i <= d; ++i)
      if (pos[i] < box_lo[i] - 1e-12 || pos[i] > box_hi[i] + 1e-12) return false;
  }
  if (cap_center.size() > 0) {
    Vec dir(cap_center.size());
    dir[0] = s.tau;
    dir.segment(1, s.eta.size()) = s.eta;
    dir[dir.size() - 1] = s.gamma;
    dir /= s.lambda();
    if ((dir - cap_center).norm() > cap_radius + 1e-12) return false;
  }
  return true;
}

Chart Chart::unbounded(int d) {
  Chart c;
  c.box_lo = Vec::Constant(d + 1, -std::numeric_limits<Real>::infinity());
  c.box_hi = Vec::Constant(d + 1, std::numeric_limits<Real>::infinity());
  return c;
}

namespace {

// Tracked eigenvalue branch along a trajectory. The Hamiltonian field uses the
// Rayleigh-quotient derivative with left/right eigenvectors of the tracked
// (simple) eigenvalue; covariable partials of the symbol are exact, space-time
// partials use central differences of the coefficients.
struct BranchTracker {
  Complex mu;

  // dz/dx_d for z = (t, y, τ, η)
  Vec field(const HyperbolicSystem& sys, const FlowState& s, const Tols& tol) {
    const int d = sys.d();
    BasePoint X = s.to_point();
    CMat a = reduced_symbol(sys, X, tol);
    SpectralData sd = eigendecompose(a, s.lambda(), tol);

    int idx = -1, second = -1;
    Real best = std::numeric_limits<Real>::infinity(), next = best;
    for (int i = 0; i < sys.n(); ++i) {
      Real dist = std::abs(sd.eigenvalues[i] - mu);
      if (dist < best) { next = best; second = idx; best = dist; idx = i; }
      else if (dist < next) { next = dist; second = i; }
    }
    (void)second;
    // The Rayleigh-quotient derivative degenerates like 1/gap, so the guard
    // fires well before the eigenvalues actually meet.
    if (sys.n() > 1 && next < tol.flow_collision_rel * s.lambda())
      throw BranchCollision("transport", "hamiltonian_flow",
                            "tracked eigenvalue approaches another branch");
    mu = sd.eigenvalues[idx];

    CMat vinv = sd.eigenvectors.partialPivLu().inverse();
    CVec r = sd.eigenvectors.col(idx);
    Eigen::RowVectorXcd l = vinv.row(idx);  // l a = μ l, l r = 1

    Mat ad = sys.coeff(d - 1, X);
    Eigen::PartialPivLU<CMat> ad_lu(ad.cast<Complex>());

    auto rayleigh = [&](const CMat& da) { return (l * da * r)(0, 0); };

    // Exact covariable partials: ∂a/∂τ = A_d⁻¹, ∂a/∂η_k = A_d⁻¹ A_k.
    Complex dmu_dtau = rayleigh(ad_lu.solve(CMat::Identity(sys.n(), sys.n())));
    CVec dmu_deta(d - 1);
    for (int k = 0; k + 1 < d; ++k)
      dmu_deta[k] = rayleigh(ad_lu.solve(sys.coeff(k, X).cast<Complex>()));

    // Space-time partials vanish for constant coefficients.
    Complex dmu_dt = 0.0;
    CVec dmu_dy = CVec::Zero(d - 1);
    if (sys.coeff_kind() == CoeffKind::Variable) {
      auto symbol_at = [&](Real t, const Vec& y) {
        BasePoint Xs = X;
        Xs.t = t;
        Xs.y = y;
        return reduced_symbol(sys, Xs, tol);
      };
      Real ht = tol.fd_step_rel * std::max(1.0, std::abs(s.t));
      dmu_dt = rayleigh((symbol_at(s.t + ht, s.y) - symbol_at(s.t - ht, s.y)) /
                        (2.0 * ht));
      for (int k = 0; k + 1 < d; ++k) {
        Real hy = tol.fd_step_rel * std::max(1.0, std::abs(s.y[k]));
        Vec yp = s.y, ym = s.y;
        yp[k] += hy;
        ym[k] -= hy;
        dmu_dy[k] = rayleigh((symbol_at(s.t, yp) - symbol_at(s.t, ym)) / (2.0 * hy));
      }
    }

    Vec f(2 * d);
    f[0] = dmu_dtau.real();                       // dt/dx_d
    for (int k = 0; k + 1 < d; ++k) f[1 + k] = dmu_deta[k].real();   // dy_k
    f[d] = -dmu_dt.real();                        // dτ/dx_d
    for (int k = 0; k + 1 < d; ++k) f[d + 1 + k] = -dmu_dy[k].real();  // dη_k
    return f;
  }
};

FlowState apply_delta(const FlowState& s, const Vec& dz, Real dx) {
  const int d = static_cast<int>(s.y.size()) + 1;
  FlowState out = s;
  out.t += dz[0];
  out.y += dz.segment(1, d - 1);
  out.tau += dz[d];
  out.eta += dz.segment(d + 1, d - 1);
  out.x_d += dx;
  return out;
}

Trajectory integrate(const HyperbolicSystem& sys, int branch, const FlowState& start,
                     Real x_d_target, int n_steps, const std::optional<Chart>& chart,
                     const Tols& tol) {
  Trajectory traj;
  traj.states.push_back(start);
  Real dx = (x_d_target - start.x_d) / n_steps;
  traj.step = std::abs(dx);
  if (n_steps == 0 || dx == 0.0) return traj;

  BranchTracker tracker;
  {
    BasePoint X0 = start.to_point();
    CMat a0 = reduced_symbol(sys, X0, tol);
    SpectralData sd0 = eigendecompose(a0, start.lambda(), tol);
    if (branch < 0 || branch >= sys.n())
      throw Error("transport", "hamiltonian_flow", "branch index out of range");
    tracker.mu = sd0.eigenvalues[branch];
  }

  FlowState s = start;
  for (int step = 0; step < n_steps; ++step) {
    Complex mu_base = tracker.mu;
    Vec k1 = tracker.field(sys, s, tol);
    tracker.mu = mu_base;
    Vec k2 = tracker.field(sys, apply_delta(s, 0.5 * dx * k1, 0.5 * dx), tol);
    tracker.mu = mu_base;
    Vec k3 = tracker.field(sys, apply_delta(s, 0.5 * dx * k2, 0.5 * dx), tol);
    tracker.mu = mu_base;
    Vec k4 = tracker.field(sys, apply_delta(s, dx * k3, dx), tol);
    tracker.mu = mu_base;
    s = apply_delta(s, (dx / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), dx);
    // Re-anchor the tracked eigenvalue at the accepted state.
    (void)tracker.field(sys, s, tol);
    if (chart && !chart->contains(s))
      throw ChartExit("transport", "hamiltonian_flow",
                      "trajectory left the declared chart");
    traj.states.push_back(s);
  }
  return traj;
}

Real state_distance(const FlowState& a, const FlowState& b) {
  return std::abs(a.t - b.t) + (a.y - b.y).norm() + std::abs(a.tau - b.tau) +
         (a.eta - b.eta).norm();
}

}  // namespace

Trajectory hamiltonian_flow(const HyperbolicSystem& sys, int branch,
                            const FlowState& start, Real x_d_target, Real step,
                            const std::optional<Chart>& chart, const Tols& tol) {
  if (step <= 0.0)
    throw Error("transport", "hamiltonian_flow", "step must be positive");
  Real span = std::abs(x_d_target - start.x_d);
  int n = std::max(1, static_cast<int>(std::ceil(span / step - 1e-12)));
  if (span == 0.0) {
    Trajectory tr;
    tr.states.push_back(start);
    return tr;
  }
  Trajectory coarse = integrate(sys, branch, start, x_d_target, n, chart, tol);
  Trajectory fine = integrate(sys, branch, start, x_d_target, 2 * n, chart, tol);
  fine.error_estimate = state_distance(coarse.back(), fine.back()) / 15.0;
  return fine;
}

Trajectory hamiltonian_flow_auto(const HyperbolicSystem& sys, int branch,
                                 const FlowState& start, Real x_d_target,
                                 const std::optional<Chart>& chart, const Tols& tol) {
  Real span = std::abs(x_d_target - start.x_d);
  if (span == 0.0) {
    Trajectory tr;
    tr.states.push_back(start);
    return tr;
  }
  int n = 16;
  Trajectory prev = integrate(sys, branch, start, x_d_target, n, chart, tol);
  for (int iter = 0; iter < 10; ++iter) {
    Trajectory next = integrate(sys, branch, start, x_d_target, 2 * n, chart, tol);
    Real err = state_distance(prev.back(), next.back()) / 15.0;
    next.error_estimate = err;
    if (err < tol.flow_tol * (1.0 + span)) return next;
    prev = next;
    n *= 2;
  }
  return prev;
}

Complex delta_tilde_at(const HyperbolicSystem& sys, const BasePoint& X,
                       const Tols& tol) {
  auto nu = find_nu(sys, X.t, X.y, X.freq.eta, X.freq.tau, tol);
  if (!nu)
    throw OmegaRootNotFound("transport", "delta_tilde_at",
                            "no Δ zero in the τ search bracket");
  Real omega = X.freq.tau - *nu;
  return Complex(X.freq.gamma, omega) / X.freq.lambda();
}

Complex transport_delta(const HyperbolicSystem& sys, int branch, const BasePoint& X,
                        const std::optional<Chart>& chart, const Tols& tol) {
  if (X.x_d == 0.0) return delta_tilde_at(sys, X, tol);
  Trajectory back = hamiltonian_flow_auto(sys, branch, FlowState::from_point(X), 0.0,
                                          chart, tol);
  return delta_tilde_at(sys, back.back().to_point(), tol);
}

RefinedBasis refined_basis(const HyperbolicSystem& sys, const BasePoint& X,
                           const LopatinskiiData& lop, const Tols& tol) {
  const int n = sys.n();
  CMat a = reduced_symbol(sys, X, tol);
  Real lam = X.freq.lambda();
  SpectralData sd = eigendecompose(a, lam, tol);
  if (sd.jordan_flag)
    throw Error("transport", "refined_basis", "defective symbol");

  CMat kl = krylov_space(a, lop.critical_direction, tol);
  const int s = static_cast<int>(kl.cols());

  // Decompose K_ℓ across eigenspaces; each nonzero piece replaces columns.
  struct Piece { int cluster; CMat w; };
  std::vector<Piece> pieces;
  RefinedBasis out;
  for (std::size_t k = 0; k < sd.clusters.size(); ++k) {
    CMat proj = sd.cluster_projector(static_cast<int>(k)) * kl;
    Eigen::JacobiSVD<CMat> svd(proj, Eigen::ComputeThinU);
    int nk = (svd.singularValues().array() > 1e-10).count();
    out.kl_cluster_dims.push_back(nk);
    if (nk > 0) pieces.push_back({static_cast<int>(k), svd.matrixU().leftCols(nk)});
  }
  int total = 0;
  for (const auto& pc : pieces) total += static_cast<int>(pc.w.cols());
  if (total != s)
    throw Error("transport", "refined_basis",
                "Krylov decomposition dimensions do not add up");

  // Assemble: K_ℓ pieces first, then remaining stable eigenvectors, then the
  // unstable ones. Components of stability follow the limit-mode projector.
  StableBundle sb = stable_subspace(sys, X, tol);
  auto is_stable_col = [&](int col) {
    CVec v = sd.eigenvectors.col(col);
    return (sb.projector * v - v).norm() < 0.5;
  };

  CMat basis(n, n);
  CVec vals(n);
  int pos = 0;
  for (const auto& pc : pieces) {
    for (int j = 0; j < pc.w.cols(); ++j) {
      basis.col(pos) = pc.w.col(j);
      vals[pos] = sd.cluster_values[pc.cluster];
      ++pos;
    }
  }

  // Within each cluster keep the eigenvector directions most orthogonal to the
  // inserted K_ℓ piece.
  for (std::size_t k = 0; k < sd.clusters.size(); ++k) {
    const auto& cl = sd.clusters[k];
    int nk = out.kl_cluster_dims[k];
    int keep = static_cast<int>(cl.size()) - nk;
    if (keep <= 0) continue;
    CMat w(n, 0);
    for (const auto& pc : pieces)
      if (pc.cluster == static_cast<int>(k)) w = pc.w;
    std::vector<std::pair<Real, int>> score;
    for (int idx : cl) {
      CVec v = sd.eigenvectors.col(idx);
      CVec res = v;
      if (w.cols() > 0) res -= w * (w.adjoint() * v);
      score.push_back({res.norm(), idx});
    }
    std::sort(score.begin(), score.end(),
              [](const auto& a_, const auto& b_) { return a_.first > b_.first; });
    // Stable columns go in the front section, unstable in the back.
    for (int j = 0; j < keep; ++j) {
      int idx = score[j].second;
      CVec v = sd.eigenvectors.col(idx);
      if (w.cols() > 0) {
        v -= w * (w.adjoint() * v);
        v /= v.norm();
      }
      if (is_stable_col(idx)) {
        basis.col(pos) = v;
        vals[pos] = sd.eigenvalues[idx];
        ++pos;
      }
    }
  }
  out.stable_dim = pos;
  for (std::size_t k = 0; k < sd.clusters.size(); ++k) {
    const auto& cl = sd.clusters[k];
    int nk = out.kl_cluster_dims[k];
    int keep = static_cast<int>(cl.size()) - nk;
    if (keep <= 0) continue;
    CMat w(n, 0);
    for (const auto& pc : pieces)
      if (pc.cluster == static_cast<int>(k)) w = pc.w;
    std::vector<std::pair<Real, int>> score;
    for (int idx : cl) {
      CVec v = sd.eigenvectors.col(idx);
      CVec res = v;
      if (w.cols() > 0) res -= w * (w.adjoint() * v);
      score.push_back({res.norm(), idx});
    }
    std::sort(score.begin(), score.end(),
              [](const auto& a_, const auto& b_) { return a_.first > b_.first; });
    for (int j = 0; j < keep; ++j) {
      int idx = score[j].second;
      if (is_stable_col(idx)) continue;
      CVec v = sd.eigenvectors.col(idx);
      if (w.cols() > 0) {
        v -= w * (w.adjoint() * v);
        v /= v.norm();
      }
      basis.col(pos) = v;
      vals[pos] = sd.eigenvalues[idx];
      ++pos;
    }
  }
  if (pos != n)
    throw BasisSwapFailed("transport", "refined_basis",
                          "column replacement left an incomplete basis");
  if (rcond(basis) < 1e-10)
    throw BasisSwapFailed("transport", "refined_basis",
                          "replacement basis is numerically singular");

  out.basis = basis;
  out.eigenvalues = vals;
  out.s = s;
  return out;
}

DeltaField::DeltaField(const HyperbolicSystem& sys, Chart chart, int s, const Tols& tol)
    : sys_(&sys), chart_(std::move(chart)), s_(s), tol_(tol) {}

DeltaFieldValue DeltaField::eval(const BasePoint& X) const {
  // Factorization (with ν search) anchored at the backward-flow boundary
  // point of branch 0; the refined basis is computed pointwise.
  BasePoint Xb = X;
  if (X.x_d != 0.0)
    Xb = hamiltonian_flow_auto(*sys_, 0, FlowState::from_point(X), 0.0, chart_, tol_)
             .back()
             .to_point();
  auto nu = find_nu(*sys_, Xb.t, Xb.y, Xb.freq.eta, Xb.freq.tau, tol_);
  if (!nu)
    throw OmegaRootNotFound("transport", "build_delta_field",
                            "no Δ zero reachable from this point");
  LopatinskiiData lop = factor_boundary_matrix(*sys_, Xb, std::nullopt, nu, tol_);
  RefinedBasis rb = refined_basis(*sys_, X, lop, tol_);
  if (rb.s > s_)
    throw Error("transport", "build_delta_field",
                "encountered s larger than the chart-wide maximum");

  DeltaFieldValue out;
  out.basis = rb.basis;
  out.s = s_;
  const int n = sys_->n();
  out.diag = CVec::Ones(n);
  for (int j = 0; j < s_; ++j) {
    // Track the branch that owns refined column j.
    CMat a = reduced_symbol(*sys_, X, tol_);
    SpectralData sd = eigendecompose(a, X.freq.lambda(), tol_);
    int branch = 0;
    Real best = std::numeric_limits<Real>::infinity();
    for (int i = 0; i < n; ++i) {
      Real dd = std::abs(sd.eigenvalues[i] - rb.eigenvalues[j]);
      if (dd < best) { best = dd; branch = i; }
    }
    out.diag[j] = transport_delta(*sys_, branch, X, chart_, tol_);
  }
  return out;
}

BoundaryRelationResult boundary_relation_check(const HyperbolicSystem& sys,
                                               const BasePoint& X,
                                               bool use_identity_q, const Tols& tol) {
  if (X.x_d != 0.0)
    throw Error("transport", "boundary_relation_check", "x_d must be 0");
  const int n = sys.n();
  const int p = sys.p();

  auto nu = find_nu(sys, X.t, X.y, X.freq.eta, X.freq.tau, tol);
  if (!nu)
    throw OmegaRootNotFound("transport", "boundary_relation_check",
                            "no Δ zero in the τ search bracket");
  LopatinskiiData lop = factor_boundary_matrix(sys, X, std::nullopt, nu, tol);
  RefinedBasis rb = refined_basis(sys, X, lop, tol);
  const int s = rb.s;
  Complex dt = lop.delta_tilde;

  BoundaryRelationResult out;
  out.b_dot = sys.boundary(X).cast<Complex>() * rb.basis;
  out.delta = CMat::Identity(n, n);
  for (int j = 0; j < s; ++j) out.delta(j, j) = dt;

  if (use_identity_q) {
    out.q = CMat::Identity(p, p);
    out.m = out.b_dot * out.delta.partialPivLu().inverse();
    out.residual = (out.q * out.b_dot - out.m * out.delta).norm();
    return out;
  }

  // Factorization in the refined stable basis; the critical column leads.
  CMat bminus = out.b_dot.leftCols(p);
  CVec d = CVec::Zero(std::max(0, p - 1));
  if (p >= 2) {
    CMat h = bminus.block(1, 1, p - 1, p - 1);
    d = h.fullPivLu().solve(bminus.col(0).tail(p - 1));
  }
  CMat c = CMat::Identity(p, p);
  for (int i = 1; i < p; ++i) c(i, 0) = -d[i - 1];

  CVec k = bminus.col(0);
  for (int i = 1; i < p; ++i) k -= d[i - 1] * bminus.col(i);
  if (p >= 2) k.tail(p - 1).setZero();

  CMat pmat(p, p);
  if (std::abs(dt) > tol.delta_tilde_division) {
    pmat.col(0) = k / dt;
  } else {
    // Limit form along τ through the root, mirroring the factorization path.
    Real h = 1e-4 * std::max(1.0, X.freq.lambda());
    auto eval_k = [&](Real tau_shift) {
      BasePoint Xs = X;
      Xs.freq.tau += tau_shift;
      LopatinskiiData ls = factor_boundary_matrix(sys, Xs, std::nullopt, nu, tol);
      RefinedBasis rs = refined_basis(sys, Xs, ls, tol);
      CMat basis_aligned(n, p);
      for (int j = 0; j < p; ++j) basis_aligned.col(j) = rs.basis.col(j);
      // Align refined columns to the center's by phase.
      for (int j = 0; j < p; ++j) {
        Complex ip = (rb.basis.col(j).adjoint() * basis_aligned.col(j))(0, 0);
        if (std::abs(ip) > 1e-12) basis_aligned.col(j) *= ip / std::abs(ip);
      }
      CMat bm = sys.boundary(Xs).cast<Complex>() * basis_aligned;
      CVec dd = CVec::Zero(std::max(0, p - 1));
      if (p >= 2)
        dd = bm.block(1, 1, p - 1, p - 1).fullPivLu().solve(bm.col(0).tail(p - 1));
      CVec kk = bm.col(0);
      for (int i = 1; i < p; ++i) kk -= dd[i - 1] * bm.col(i);
      if (p >= 2) kk.tail(p - 1).setZero();
      Complex dts = Complex(Xs.freq.gamma, Xs.freq.tau - *nu) / Xs.freq.lambda();
      return std::make_pair(kk, dts);
    };
    auto [kp, dtp] = eval_k(h);
    auto [km, dtm] = eval_k(-h);
    pmat.col(0) = (kp - km) / (dtp - dtm);
  }
  for (int i = 1; i < p; ++i) pmat.col(i) = bminus.col(i);

  CMat cs = c.topLeftCorner(s, s);
  CMat upsilon1 = CMat::Identity(s, s);
  for (int i = 1; i < s; ++i) upsilon1(i, i) = dt;
  CMat qblock = CMat::Identity(p, p);
  qblock.topLeftCorner(s, s) = cs * upsilon1;
  out.q = qblock * pmat.partialPivLu().inverse();

  out.m.resize(p, n);
  out.m.leftCols(p) = CMat::Identity(p, p);
  out.m.rightCols(n - p) = out.q * out.b_dot.rightCols(n - p);
  out.residual = (out.q * out.b_dot - out.m * out.delta).norm();
  return out;
}

namespace {

// Eigenvector field aligned against a center decomposition: columns matched by
// eigenvalue proximity, phases fixed by inner product with the center column.
CMat aligned_eigvecs(const HyperbolicSystem& sys, const BasePoint& X,
                     const CMat& ref_basis, const CVec& ref_vals, const Tols& tol,
                     CVec* vals_out = nullptr) {
  CMat a = reduced_symbol(sys, X, tol);
  SpectralData sd = eigendecompose(a, X.freq.lambda(), tol);
  const int n = sys.n();
  CMat out(n, n);
  CVec vals(n);
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    int best = -1;
    Real dist = std::numeric_limits<Real>::infinity();
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      Real dd = std::abs(sd.eigenvalues[i] - ref_vals[j]);
      if (dd < dist) { dist = dd; best = i; }
    }
    used[best] = true;
    CVec v = sd.eigenvectors.col(best);
    Complex ip = (ref_basis.col(j).adjoint() * v)(0, 0);
    if (std::abs(ip) > 1e-12) v *= std::conj(ip) / std::abs(ip);
    // Match the reference column scale so differences are meaningful.
    out.col(j) = v;
    vals[j] = sd.eigenvalues[best];
  }
  if (vals_out) *vals_out = vals;
  return out;
}

}  // namespace

BlockDiagCorrection block_diag_correction(const HyperbolicSystem& sys,
                                          const BasePoint& X,
                                          const SymbolProvider& a0, Real fd_step,
                                          const Tols& tol) {
  const int n = sys.n();
  const int d = sys.d();
  Real lam = X.freq.lambda();

  CMat a = reduced_symbol(sys, X, tol);
  SpectralData sd = eigendecompose(a, lam, tol);
  for (std::size_t i = 0; i + 1 < sd.cluster_values.size(); ++i)
    for (std::size_t k = i + 1; k < sd.cluster_values.size(); ++k)
      if (std::abs(sd.cluster_values[i] - sd.cluster_values[k]) <
          tol.branch_gap_rel * lam)
        throw ClusterTooClose("transport", "block_diag_correction",
                              "eigenvalue clusters are not separated");

  CMat e0 = sd.eigenvectors;
  CVec vals = sd.eigenvalues;
  CMat e0_inv = e0.partialPivLu().inverse();

  auto basis_at = [&](const BasePoint& Xs) {
    return aligned_eigvecs(sys, Xs, e0, vals, tol);
  };
  auto adot_at = [&](const BasePoint& Xs) {
    CVec v;
    aligned_eigvecs(sys, Xs, e0, vals, tol, &v);
    return CMat(v.asDiagonal());
  };

  auto shift = [&](int coord, Real h) {
    // coord: 0 = t, 1..d-1 = y_k, d = x_d, d+1 = τ, d+2.. = η_k
    BasePoint Xs = X;
    if (coord == 0) Xs.t += h;
    else if (coord < d) Xs.y[coord - 1] += h;
    else if (coord == d) Xs.x_d += h;
    else if (coord == d + 1) Xs.freq.tau += h;
    else Xs.freq.eta[coord - d - 2] += h;
    return Xs;
  };

  auto central_basis = [&](int coord) {
    return CMat((basis_at(shift(coord, fd_step)) - basis_at(shift(coord, -fd_step))) /
                (2.0 * fd_step));
  };
  auto central_adot = [&](int coord) {
    return CMat((adot_at(shift(coord, fd_step)) - adot_at(shift(coord, -fd_step))) /
                (2.0 * fd_step));
  };

  CMat de0_dxd = central_basis(d);
  CMat dd_e0 = -kI * de0_dxd;  // D_d = -i ∂_d

  // Poisson-bracket style correction over (x_0, η_0) = (t, τ) and (y_k, η_k).
  CMat bracket = CMat::Zero(n, n);
  for (int k = 0; k < d; ++k) {
    int x_coord = (k == 0) ? 0 : k;          // t, y_1..y_{d-1}
    int eta_coord = (k == 0) ? d + 1 : d + 1 + k;  // τ, η_1..η_{d-1}
    CMat de0_deta = central_basis(eta_coord);
    CMat dadot_dx = central_adot(x_coord);
    CMat dadot_deta = central_adot(eta_coord);
    CMat de0_dx = central_basis(x_coord);
    bracket += de0_deta * dadot_dx - dadot_deta * de0_dx;
  }

  CMat a0_dot = e0_inv * a0(X) * e0;
  CMat g = a0_dot + dd_e0 * e0_inv + (1.0 / kI) * bracket * e0_inv;

  // Commutator solve: F_ij = G_ij / (μ_i - μ_j) off the diagonal blocks.
  BlockDiagCorrection out;
  out.source = g;
  CMat f = CMat::Zero(n, n);
  out.a0_corrected = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      bool same_block = std::abs(vals[i] - vals[j]) <
                        std::max(tol.cluster_rel, tol.cluster_floor_rel) * lam * 10;
      if (same_block)
        out.a0_corrected(i, j) = g(i, j);
      else
        f(i, j) = g(i, j) / (vals[i] - vals[j]);
    }
  }
  out.e_minus1 = f * e0;

  CMat adot_diag = vals.asDiagonal();
  CMat resid = g - (adot_diag * f - f * adot_diag);
  Real off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool same_block = std::abs(vals[i] - vals[j]) <
                        std::max(tol.cluster_rel, tol.cluster_floor_rel) * lam * 10;
      if (!same_block) off += std::norm(resid(i, j));
    }
  out.residual = std::sqrt(off);
  return out;
}

FlowGrowthReport flow_growth_and_sandwich(const HyperbolicSystem& sys, int branch,
                                          const Chart& chart, int n_samples,
                                          Real gamma0, std::uint64_t seed,
                                          const Tols& tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> uni(0.0, 1.0);
  const int d = sys.d();

  FlowGrowthReport rep;
  rep.min_sandwich_slack = std::numeric_limits<Real>::infinity();
  rep.delta_upper = 0.0;

  struct SampleEval { Real inv_lambda; Real abs_delta; };
  std::vector<SampleEval> evals;

  int made = 0, attempts = 0;
  while (made < n_samples && attempts < 20 * n_samples) {
    ++attempts;
    FlowState s;
    s.t = chart.box_lo[0] + (chart.box_hi[0] - chart.box_lo[0]) * uni(rng);
    s.y = Vec(d - 1);
    for (int k = 0; k + 1 < d; ++k)
      s.y[k] = chart.box_lo[1 + k] + (chart.box_hi[1 + k] - chart.box_lo[1 + k]) * uni(rng);
    s.x_d = chart.box_lo[d] + (chart.box_hi[d] - chart.box_lo[d]) * uni(rng);

    // Frequency direction inside the cap, scaled so γ >= γ₀ (γ = γ₀ is the
    // binding case of the sandwich).
    Vec dir = chart.cap_center;
    for (int i = 0; i < dir.size(); ++i)
      dir[i] += chart.cap_radius * 0.7 * (2.0 * uni(rng) - 1.0) / std::sqrt((Real)dir.size());
    dir /= dir.norm();
    if (dir[dir.size() - 1] <= 1e-3) continue;  // direction must carry γ > 0
    Real gscale = (made % 2 == 0) ? 1.0 : (1.0 + 3.0 * uni(rng));
    Real scale = gamma0 * gscale / dir[dir.size() - 1];
    s.tau = scale * dir[0];
    s.eta = scale * dir.segment(1, d - 1);
    s.gamma = scale * dir[dir.size() - 1];
    if (!chart.contains(s)) continue;

    try {
      Trajectory back = hamiltonian_flow_auto(sys, branch, s, 0.0, std::nullopt, tol);
      FlowState sb = back.back();
      Real ratio = sb.lambda() / s.lambda();
      rep.growth_constant = std::max(rep.growth_constant, ratio);
      Complex dval = delta_tilde_at(sys, sb.to_point(), tol);
      evals.push_back({1.0 / s.lambda(), std::abs(dval)});
      rep.delta_upper = std::max(rep.delta_upper, std::abs(dval));
      ++made;
    } catch (const Error&) {
      continue;
    }
  }
  rep.samples = made;

  rep.sandwich_holds = made > 0;
  for (const auto& e : evals) {
    Real slack = (rep.growth_constant / gamma0) * e.abs_delta - e.inv_lambda;
    rep.min_sandwich_slack = std::min(rep.min_sandwich_slack, slack);
    rep.sandwich_holds = rep.sandwich_holds && slack >= -1e-12;
  }
  return rep;
}

RealPrincipalTypeReport real_principal_type_check(
    const HyperbolicSystem& sys, int branch, const std::vector<CriticalRoot>& roots,
    const std::vector<Real>& xd_samples, Real gamma_slice,
    const std::optional<Chart>& chart, const Tols& tol) {
  RealPrincipalTypeReport rep;
  rep.min_dtau = std::numeric_limits<Real>::infinity();
  rep.min_elliptic_abs = std::numeric_limits<Real>::infinity();
  if (roots.empty()) return rep;

  for (const auto& root : roots) {
    for (Real xd : xd_samples) {
      FlowState start = FlowState::from_point(root.point);
      Trajectory fwd = hamiltonian_flow_auto(sys, branch, start, xd, chart, tol);
      BasePoint Xstar = fwd.back().to_point();

      Complex dj = transport_delta(sys, branch, Xstar, chart, tol);
      rep.max_char_value = std::max(rep.max_char_value, std::abs(dj));
      // -i δ_j real at γ = 0 <=> Re δ_j = 0.
      rep.max_imag_residual = std::max(rep.max_imag_residual, std::abs(dj.real()));

      Real h = 1e-5 * std::max(1.0, Xstar.freq.lambda());
      BasePoint Xp = Xstar, Xm = Xstar;
      Xp.freq.tau += h;
      Xm.freq.tau -= h;
      Complex dp = transport_delta(sys, branch, Xp, chart, tol);
      Complex dm = transport_delta(sys, branch, Xm, chart, tol);
      rep.min_dtau = std::min(rep.min_dtau, std::abs((dp - dm) / (2.0 * h)));

      // Elliptic γ > 0 slice at the same point.
      BasePoint Xg = Xstar;
      Xg.freq.gamma = gamma_slice;
      Complex dg = transport_delta(sys, branch, Xg, chart, tol);
      rep.min_elliptic_abs = std::min(rep.min_elliptic_abs, std::abs(dg));
    }
  }
  rep.passed = rep.max_char_value < 1e-8 && rep.max_imag_residual < 1e-8 &&
               rep.min_dtau > tol.dtau_min && rep.min_elliptic_abs > 0.0;
  return rep;
}

}  // namespace hypwr
