#include "hypwr/estimator.hpp"

#include "hypwr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hypwr {

namespace {

struct Propagators {
  CMat v;         // eigenvectors
  CMat v_inv;
  CVec mu;
  std::vector<int> stable, unstable;
  CMat pi_minus, pi_plus;
  CMat v_minus;   // stable columns

  CMat exp_minus(Real s) const {  // e^{-i a s} π₋  (decays for s > 0)
    CVec ph(mu.size());
    for (int i = 0; i < mu.size(); ++i) ph[i] = 0.0;
    for (int i : stable) ph[i] = std::exp(-kI * mu[i] * Complex(s, 0));
    return v * ph.asDiagonal() * v_inv;
  }
  CMat exp_plus(Real s) const {  // e^{+i a s} π₊  (decays for s > 0)
    CVec ph(mu.size());
    for (int i = 0; i < mu.size(); ++i) ph[i] = 0.0;
    for (int i : unstable) ph[i] = std::exp(kI * mu[i] * Complex(s, 0));
    return v * ph.asDiagonal() * v_inv;
  }
};

Propagators make_propagators(const CMat& a, Real scale, const Tols& tol) {
  SpectralData sd = eigendecompose(a, scale, tol);
  Propagators p;
  p.v = sd.eigenvectors;
  p.v_inv = p.v.partialPivLu().inverse();
  p.mu = sd.eigenvalues;
  const int n = static_cast<int>(a.rows());
  for (int i = 0; i < n; ++i)
    (p.mu[i].imag() < 0 ? p.stable : p.unstable).push_back(i);
  p.pi_minus = CMat::Zero(n, n);
  for (int i : p.stable) p.pi_minus += p.v.col(i) * p.v_inv.row(i);
  p.pi_plus = CMat::Identity(n, n) - p.pi_minus;
  p.v_minus.resize(n, static_cast<int>(p.stable.size()));
  for (std::size_t j = 0; j < p.stable.size(); ++j)
    p.v_minus.col(j) = p.v.col(p.stable[j]);
  return p;
}

}  // namespace

FrequencyBVP FrequencyBVP::make(const HyperbolicSystem& sys, const Frequency& zeta,
                                ProfileFn f, CVec g, const Tols& tol) {
  FrequencyBVP bvp;
  bvp.zeta = zeta;
  BasePoint X = BasePoint::boundary(zeta, sys.d());
  bvp.a = reduced_symbol(sys, X, tol);
  bvp.b = sys.boundary(X).cast<Complex>();
  bvp.f_hat = std::move(f);
  bvp.g_hat = std::move(g);

  SpectralData sd = eigendecompose(bvp.a, zeta.lambda(), tol);
  Real min_im_stable = std::numeric_limits<Real>::infinity();
  Real max_abs = 0.0;
  for (int i = 0; i < sys.n(); ++i) {
    if (sd.eigenvalues[i].imag() < 0)
      min_im_stable = std::min(min_im_stable, -sd.eigenvalues[i].imag());
    max_abs = std::max(max_abs, std::abs(sd.eigenvalues[i]));
  }
  if (!std::isfinite(min_im_stable) || min_im_stable <= 0.0)
    throw NoGap("estimator", "make_bvp", "no decaying modes; γ = 0 is unsupported");

  bvp.x_max = tol.xmax_efolds / min_im_stable;
  Real oscillation = std::max(1.0, max_abs);
  int n_osc = static_cast<int>(std::ceil(8.0 * bvp.x_max * oscillation));
  bvp.n_points = std::min(tol.grid_n_max, std::max(tol.grid_n_default, n_osc));
  return bvp;
}

BVPSolution solve_frequency_bvp(const FrequencyBVP& bvp, const Tols& tol) {
  const int n = static_cast<int>(bvp.a.rows());
  const int N = bvp.n_points;
  const Real h = bvp.x_max / N;
  if (bvp.zeta.gamma <= 0.0)
    throw NoGap("estimator", "solve_frequency_bvp", "γ must be positive");

  Propagators prop = make_propagators(bvp.a, bvp.zeta.lambda(), tol);
  if (static_cast<int>(prop.stable.size()) != static_cast<int>(bvp.b.rows()))
    throw Error("estimator", "solve_frequency_bvp", "stable dimension != p");

  CMat eh_m = prop.exp_minus(h), eh2_m = prop.exp_minus(0.5 * h);
  CMat eh_p = prop.exp_plus(h), eh2_p = prop.exp_plus(0.5 * h);

  // f̂ samples at nodes and midpoints.
  CMat fn(n, N + 1), fm(n, N);
  for (int k = 0; k <= N; ++k) fn.col(k) = bvp.f_hat(k * h);
  for (int k = 0; k < N; ++k) fm.col(k) = bvp.f_hat((k + 0.5) * h);

  // Duhamel with stable/unstable splitting: stable part integrated forward
  // from 0, unstable part backward from X_max; Simpson per step. Endpoint
  // terms carry the bare projectors (s = 0 propagator).
  CMat up(n, N + 1);
  CVec s_acc = CVec::Zero(n);
  up.col(0) = s_acc;
  for (int k = 0; k < N; ++k) {
    CVec local = (h / 6.0) * (eh_m * fn.col(k) + 4.0 * (eh2_m * fm.col(k)) +
                              prop.pi_minus * fn.col(k + 1));
    s_acc = eh_m * s_acc + kI * local;
    up.col(k + 1) = s_acc;
  }
  CVec u_acc = CVec::Zero(n);
  for (int k = N - 1; k >= 0; --k) {
    CVec local = (h / 6.0) * (prop.pi_plus * fn.col(k) + 4.0 * (eh2_p * fm.col(k)) +
                              eh_p * fn.col(k + 1));
    u_acc = eh_p * u_acc - kI * local;
    up.col(k) += u_acc;
  }

  // Homogeneous stable correction fixing the boundary condition.
  CMat bv = bvp.b * prop.v_minus;
  Eigen::JacobiSVD<CMat> svd(bv, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Scale against ‖b‖ (the stable frame is orthonormal): a uniformly tiny
  // block is just as singular as a rank-deficient one.
  if (svd.singularValues().minCoeff() <= 1e-12 * std::max(bvp.b.norm(), 1e-300))
    throw CriticalFrequency("estimator", "solve_frequency_bvp",
                            "boundary solve singular (critical frequency)");
  CVec rhs = bvp.g_hat - bvp.b * up.col(0);
  CVec c = svd.solve(rhs);

  BVPSolution sol;
  sol.grid_h = h;
  sol.u = up;
  const int p = static_cast<int>(prop.stable.size());
  for (int k = 0; k <= N; ++k) {
    CVec hom = CVec::Zero(n);
    for (int j = 0; j < p; ++j)
      hom += prop.v_minus.col(j) *
             (c[j] * std::exp(-kI * prop.mu[prop.stable[j]] * Complex(k * h, 0)));
    sol.u.col(k) += hom;
  }
  sol.u0 = sol.u.col(0);
  sol.boundary_residual = (bvp.b * sol.u0 - bvp.g_hat).norm();

  Real min_im = std::numeric_limits<Real>::infinity();
  for (int i : prop.stable) min_im = std::min(min_im, -prop.mu[i].imag());
  sol.truncation_bound = std::exp(-min_im * bvp.x_max);

  // Strong-form residual via a 5-point 4th-order first-derivative stencil.
  Real umax = sol.u.cwiseAbs().maxCoeff();
  Real resid = 0.0;
  for (int k = 2; k + 2 <= N; ++k) {
    CVec du = (sol.u.col(k - 2) - 8.0 * sol.u.col(k - 1) + 8.0 * sol.u.col(k + 1) -
               sol.u.col(k + 2)) /
              (12.0 * h);
    CVec rhs_ode = -kI * (bvp.a * sol.u.col(k)) + kI * fn.col(k);
    resid = std::max(resid, (du - rhs_ode).norm());
  }
  sol.ode_residual = resid / std::max(1.0, umax * std::max(1.0, bvp.zeta.lambda()));
  return sol;
}

std::pair<Real, Real> weighted_norms(const CMat& u, Real grid_h, const Frequency& zeta,
                                     Real s) {
  const int N = static_cast<int>(u.cols()) - 1;
  Real w = std::pow(zeta.lambda() * zeta.lambda(), s);
  Real interior = 0.0;
  for (int k = 0; k <= N; ++k) {
    Real coeff = (k == 0 || k == N) ? 0.5 : 1.0;
    interior += coeff * u.col(k).squaredNorm();
  }
  interior *= grid_h * w;
  Real trace = w * u.col(0).squaredNorm();
  return {interior, trace};
}

namespace {

Real grid_inner_lhs(const CMat& ua, const CMat& ub, Real h, Real gamma) {
  // γ <a,b>_interior + <a(0), b(0)> (real part)
  const int N = static_cast<int>(ua.cols()) - 1;
  Complex acc = 0.0;
  for (int k = 0; k <= N; ++k) {
    Real coeff = (k == 0 || k == N) ? 0.5 : 1.0;
    acc += coeff * (ub.col(k).adjoint() * ua.col(k))(0, 0);
  }
  acc *= h * gamma;
  acc += (ub.col(0).adjoint() * ua.col(0))(0, 0);
  return acc.real();
}

struct SharpEngine {
  FrequencyBVP bvp_template;
  SymmetrizerSymbols sym;
  CMat delta_op;    // e₀ δ e₀⁻¹

  // Data pairs are separable, f̂_i(x) = amp_i · φ_i(x) with Gaussian bumps, so
  // rhs cross-Grams reduce to amplitude inner products times scalar overlaps.
  struct Solved {
    CMat u;
    CMat du;                   // δû
    CVec u0;
    CVec amp;                  // zero for pure boundary data
    Real center = 0.0, width = 1.0;
    CVec g;
  };

  std::vector<Solved> solved;
  Mat bump_overlap;            // S_ij = ∫ φ_i φ_j dx (trapezoid)
  Real gamma = 0.0;
  Real grid_h = 0.0;

  Real lhs(const Solved& a, const Solved& b, bool filter) const {
    const CMat& ua = filter ? a.du : a.u;
    const CMat& ub = filter ? b.du : b.u;
    return grid_inner_lhs(ua, ub, grid_h, gamma);
  }
  Complex lhs_cross(int i, int j, bool filter) const {
    const CMat& ua = filter ? solved[i].du : solved[i].u;
    const CMat& ub = filter ? solved[j].du : solved[j].u;
    const int N = static_cast<int>(ua.cols()) - 1;
    Complex acc = 0.0;
    for (int k = 0; k <= N; ++k) {
      Real coeff = (k == 0 || k == N) ? 0.5 : 1.0;
      acc += coeff * (ub.col(k).adjoint() * ua.col(k))(0, 0);
    }
    acc *= grid_h * gamma;
    acc += (ub.col(0).adjoint() * ua.col(0))(0, 0);
    return acc;
  }
  Complex rhs_cross(int i, int j, bool filter) const {
    CVec ai = solved[i].amp, aj = solved[j].amp;
    CVec gi = solved[i].g, gj = solved[j].g;
    if (filter) {
      ai = delta_op * ai;
      aj = delta_op * aj;
      gi = sym.q * gi;
      gj = sym.q * gj;
    }
    Complex f_term = (aj.adjoint() * ai)(0, 0) * bump_overlap(i, j);
    Complex g_term = (gj.adjoint() * gi)(0, 0);
    return f_term / gamma + g_term;
  }
  Real rhs(int i, bool filter) const { return rhs_cross(i, i, filter).real(); }
};

CVec random_unit_cvec(int n, std::mt19937_64& rng) {
  std::normal_distribution<Real> gauss(0.0, 1.0);
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(gauss(rng), gauss(rng));
  return v / v.norm();
}

ProfileFn bump_profile(const CVec& amplitude, Real center, Real width) {
  return [=](Real x) -> CVec {
    Real arg = (x - center) / width;
    return amplitude * std::exp(-arg * arg);
  };
}

// Shared machinery: solve a family of data pairs at ζ and report the maximal
// ratio over their span for both the filtered and plain norms.
SharpEngine run_engine(const HyperbolicSystem& sys, const Frequency& zeta, int n_data,
                       std::uint64_t seed, std::optional<Real> nu_hint,
                       const Tols& tol) {
  SharpEngine eng;
  eng.sym = build_symmetrizer(sys, zeta, 3.0, nu_hint, tol);
  eng.delta_op = eng.sym.basis * eng.sym.delta * eng.sym.basis.partialPivLu().inverse();
  eng.gamma = zeta.gamma;

  std::mt19937_64 rng(seed);
  const int n = sys.n();
  const int p = sys.p();

  FrequencyBVP probe = FrequencyBVP::make(sys, zeta, [n](Real) { return CVec::Zero(n); },
                                          CVec::Zero(p), tol);
  eng.bvp_template = probe;
  eng.grid_h = probe.x_max / probe.n_points;

  // Adversarial boundary datum: smallest-singular-direction of b V₋.
  CVec g_adv;
  {
    CMat a = probe.a;
    Propagators prop = make_propagators(a, zeta.lambda(), tol);
    CMat bv = probe.b * prop.v_minus;
    Eigen::JacobiSVD<CMat> svd(bv, Eigen::ComputeFullU | Eigen::ComputeFullV);
    g_adv = svd.matrixU().col(p - 1);  // left vector of σ_min
  }

  auto solve_pair = [&](const CVec& amp, Real center, Real width, const CVec& g) {
    FrequencyBVP bvp = probe;
    bvp.f_hat = amp.isZero(0.0) ? ProfileFn([n](Real) { return CVec::Zero(n); })
                                : bump_profile(amp, center, width);
    bvp.g_hat = g;
    BVPSolution sol = solve_frequency_bvp(bvp, tol);
    SharpEngine::Solved s;
    s.u = sol.u;
    s.u0 = sol.u0;
    s.du = eng.delta_op * sol.u;
    s.amp = amp;
    s.center = center;
    s.width = width;
    s.g = g;
    return s;
  };

  // n_data random pairs; the first slot is the adversarial boundary datum.
  eng.solved.push_back(solve_pair(CVec::Zero(n), 0.0, 1.0, g_adv));
  Real support = 0.9 * probe.x_max;
  for (int j = 1; j < n_data; ++j) {
    CVec amp = random_unit_cvec(n, rng);
    Real center = support * (0.1 + 0.6 * std::uniform_real_distribution<Real>(0, 1)(rng));
    Real width = support * (0.02 + 0.08 * std::uniform_real_distribution<Real>(0, 1)(rng));
    CVec g = random_unit_cvec(p, rng);
    eng.solved.push_back(solve_pair(amp, center, width, g));
  }

  // Scalar bump overlaps on the grid.
  const int m = static_cast<int>(eng.solved.size());
  const int N = probe.n_points;
  Mat phis(N + 1, m);
  for (int j = 0; j < m; ++j) {
    const auto& s = eng.solved[j];
    for (int k = 0; k <= N; ++k) {
      if (s.amp.isZero(0.0)) {
        phis(k, j) = 0.0;
      } else {
        Real arg = (k * eng.grid_h - s.center) / s.width;
        phis(k, j) = std::exp(-arg * arg);
      }
    }
  }
  Vec w = Vec::Ones(N + 1);
  w[0] = w[N] = 0.5;
  eng.bump_overlap = eng.grid_h * (phis.transpose() * w.asDiagonal() * phis);
  return eng;
}

Real engine_sharp(const SharpEngine& eng, bool filter) {
  const int m = static_cast<int>(eng.solved.size());
  Real best = 0.0;
  for (int i = 0; i < m; ++i) {
    Real r = eng.rhs(i, filter);
    if (r > 1e-300)
      best = std::max(best, eng.lhs(eng.solved[i], eng.solved[i], filter) / r);
  }
  // Sharpen over the span of the data pairs: generalized eigenproblem on the
  // lhs/rhs Grams (both exact thanks to the separable profiles).
  CMat l(m, m), r(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      l(i, j) = eng.lhs_cross(j, i, filter);
      r(i, j) = eng.rhs_cross(j, i, filter);
    }
  CMat lh = 0.5 * (l + l.adjoint());
  CMat rh = 0.5 * (r + r.adjoint());
  Eigen::LLT<CMat> llt(rh);
  if (llt.info() == Eigen::Success) {
    Eigen::GeneralizedSelfAdjointEigenSolver<CMat> ges(lh, rh);
    if (ges.info() == Eigen::Success)
      best = std::max(best, ges.eigenvalues().maxCoeff());
  }
  return best;
}

}  // namespace

EstimateReport sharp_constants(const HyperbolicSystem& sys, const Frequency& zeta,
                               int n_data, std::uint64_t seed,
                               std::optional<Real> nu_hint, const Tols& tol) {
  SharpEngine eng = run_engine(sys, zeta, n_data, seed, nu_hint, tol);
  EstimateReport rep;
  rep.zeta = zeta;
  rep.abs_delta_tilde = std::abs(eng.sym.delta_tilde);
  rep.sharp_filtered = engine_sharp(eng, true);
  rep.sharp_unfiltered = engine_sharp(eng, false);
  // Representative single-pair quantities (the adversarial one).
  const auto& s0 = eng.solved.front();
  rep.lhs = eng.lhs(s0, s0, true);
  rep.rhs_filtered = eng.rhs(0, true);
  rep.rhs_unfiltered = eng.rhs(0, false);
  return rep;
}

Real sharp_constant(const HyperbolicSystem& sys, const Frequency& zeta, bool filter,
                    int n_data, std::uint64_t seed, std::optional<Real> nu_hint,
                    const Tols& tol) {
  EstimateReport rep = sharp_constants(sys, zeta, n_data, seed, nu_hint, tol);
  return filter ? rep.sharp_filtered : rep.sharp_unfiltered;
}

std::vector<GammaSweepRow> gamma_scaling_sweep(const HyperbolicSystem& sys,
                                               const Frequency& zeta_base,
                                               const std::vector<Real>& gamma_ladder,
                                               std::uint64_t seed,
                                               std::optional<Real> nu_hint,
                                               const Tols& tol) {
  std::vector<GammaSweepRow> rows;
  std::mt19937_64 rng(seed);
  const int n = sys.n();
  const int p = sys.p();
  CVec amp = random_unit_cvec(n, rng);
  CVec g = random_unit_cvec(p, rng);

  // Fixed data profile sized off the smallest γ (the longest domain).
  Frequency z0 = zeta_base;
  z0.gamma = gamma_ladder.front();
  FrequencyBVP ref = FrequencyBVP::make(sys, z0, [n](Real) { return CVec::Zero(n); },
                                        CVec::Zero(p), tol);
  ProfileFn f = bump_profile(amp, 0.25 * ref.x_max, 0.05 * ref.x_max);

  for (Real g_val : gamma_ladder) {
    Frequency z = zeta_base;
    z.gamma = g_val;
    SymmetrizerSymbols sym = build_symmetrizer(sys, z, 3.0, nu_hint, tol);
    CMat delta_op = sym.basis * sym.delta * sym.basis.partialPivLu().inverse();

    FrequencyBVP bvp = FrequencyBVP::make(sys, z, f, g, tol);
    BVPSolution sol = solve_frequency_bvp(bvp, tol);
    CMat du = delta_op * sol.u;

    GammaSweepRow row;
    row.gamma = g_val;
    row.lhs = grid_inner_lhs(du, du, sol.grid_h, g_val);
    const int N = bvp.n_points;
    Real df2 = 0.0;
    for (int k = 0; k <= N; ++k) {
      Real coeff = (k == 0 || k == N) ? 0.5 : 1.0;
      df2 += coeff * (delta_op * f(k * sol.grid_h)).squaredNorm();
    }
    df2 *= sol.grid_h;
    row.rhs = df2 / g_val + (sym.q * g).squaredNorm();
    row.ratio = row.lhs / row.rhs;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CoulombelRow> coulombel_comparison(const HyperbolicSystem& sys,
                                               const std::vector<Frequency>& zeta_sequence,
                                               int n_data, std::uint64_t seed,
                                               std::optional<Real> nu_hint,
                                               const Tols& tol) {
  std::vector<CoulombelRow> rows;
  for (const auto& zeta : zeta_sequence) {
    SharpEngine eng = run_engine(sys, zeta, n_data, seed, nu_hint, tol);
    CoulombelRow row;
    row.abs_delta_tilde = std::abs(eng.sym.delta_tilde);
    Real lam2 = zeta.lambda() * zeta.lambda();
    Real g = zeta.gamma;
    for (int i = 0; i < static_cast<int>(eng.solved.size()); ++i) {
      const auto& s = eng.solved[i];
      Real plain = eng.lhs(s, s, false);
      Real f2 = (s.amp.squaredNorm()) * eng.bump_overlap(i, i);
      Real g2 = s.g.squaredNorm();
      Real rhs_unf = f2 / g + g2;
      Real rhs_cou = lam2 * f2 / (g * g * g) + lam2 * g2 / (g * g);
      if (rhs_unf > 1e-300) row.unfiltered = std::max(row.unfiltered, plain / rhs_unf);
      if (rhs_cou > 1e-300)
        row.one_derivative = std::max(row.one_derivative, plain / rhs_cou);
    }
    rows.push_back(row);
  }
  return rows;
}

Frequency frequency_at_delta_tilde(Real nu, const Vec& eta, Real target) {
  Real base = std::sqrt(nu * nu + eta.squaredNorm());
  Real gamma = target * base / std::sqrt(1.0 - target * target);
  return Frequency(nu, eta, gamma);
}

}  // namespace hypwr
