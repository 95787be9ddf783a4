#pragma once

#include "hypwr/lopatinskii.hpp"
#include "hypwr/spectral.hpp"
#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace hypwr {

// Point moving along a bicharacteristic; γ is constant along trajectories.
struct FlowState {
  Real t = 0.0;
  Vec y;
  Real tau = 0.0;
  Vec eta;
  Real gamma = 0.0;
  Real x_d = 0.0;

  static FlowState from_point(const BasePoint& X) {
    return {X.t, X.y, X.freq.tau, X.freq.eta, X.freq.gamma, X.x_d};
  }
  BasePoint to_point() const {
    return BasePoint(t, y, x_d, Frequency(tau, eta, gamma));
  }
  Real lambda() const {
    return std::sqrt(gamma * gamma + tau * tau + eta.squaredNorm());
  }
};

// Local chart: box in (t, y, x_d) and a spherical cap in frequency directions.
struct Chart {
  Vec box_lo, box_hi;          // length d+1: (t, y..., x_d)
  Vec cap_center;              // length d+1: (τ, η..., γ) on S^d; empty = no cap
  Real cap_radius = 0.0;

  bool contains(const FlowState& s) const;
  static Chart unbounded(int d);
};

struct Trajectory {
  std::vector<FlowState> states;   // includes both endpoints
  Real step = 0.0;
  Real error_estimate = 0.0;       // from step halving
  const FlowState& back() const { return states.back(); }
};

// Classical RK4 on the 2d-dimensional system (t, y, τ, η) with x_d as the
// integration variable and γ frozen. The Hamiltonian is the real part of the
// tracked eigenvalue branch (exact on real hyperbolic branches at γ = 0).
Trajectory hamiltonian_flow(const HyperbolicSystem& sys, int branch,
                            const FlowState& start, Real x_d_target, Real step,
                            const std::optional<Chart>& chart = std::nullopt,
                            const Tols& tol = {});

// Step-halving wrapper: refines until the per-trajectory error estimate meets
// tol.flow_tol * (1 + |Δx_d|).
Trajectory hamiltonian_flow_auto(const HyperbolicSystem& sys, int branch,
                                 const FlowState& start, Real x_d_target,
                                 const std::optional<Chart>& chart = std::nullopt,
                                 const Tols& tol = {});

// Δ̃ at a boundary base point: (γ + iω)/λ with ω = τ - ν(t, y, η).
Complex delta_tilde_at(const HyperbolicSystem& sys, const BasePoint& X,
                       const Tols& tol = {});

// δ_j⁻(X) = Δ̃(φ⁻¹_{x_d, j}(X)): pull back along the branch-j flow.
Complex transport_delta(const HyperbolicSystem& sys, int branch, const BasePoint& X,
                        const std::optional<Chart>& chart = std::nullopt,
                        const Tols& tol = {});

struct RefinedBasis {
  CMat basis;                 // ẽ₀(X): eigenvector columns; first s span K_ℓ
  CVec eigenvalues;           // per column
  int s = 0;                  // dim K_ℓ
  int stable_dim = 0;         // first stable_dim columns span 𝔼⁻
  std::vector<int> kl_cluster_dims;  // dim(K_ℓ ∩ V_k) per cluster met
};

// Eigenvector basis whose first s columns span the Krylov space of the
// critical direction, decomposed cluster-by-cluster.
RefinedBasis refined_basis(const HyperbolicSystem& sys, const BasePoint& X,
                           const LopatinskiiData& lop, const Tols& tol = {});

struct DeltaFieldValue {
  CMat basis;    // ẽ₀(X)
  CVec diag;     // δ diagonal in that basis
  int s = 0;
  CMat matrix() const {  // δ as an operator on C^n
    return basis * diag.asDiagonal() * basis.partialPivLu().inverse();
  }
};

// Transported filter field δ(X) = diag(δ⁻(X), I_{n-p}) over a chart.
class DeltaField {
 public:
  DeltaField(const HyperbolicSystem& sys, Chart chart, int s, const Tols& tol = {});
  DeltaFieldValue eval(const BasePoint& X) const;
  int s() const { return s_; }

 private:
  const HyperbolicSystem* sys_;
  Chart chart_;
  int s_;
  Tols tol_;
};

struct BoundaryRelationResult {
  CMat q, m, b_dot, delta;
  Real residual = 0.0;
};

// q(X) ḃ(X) = m(X) δ(X) at x_d = 0. With use_identity_q the Step-1 branch
// (q = I, m = ḃ δ⁻¹) is checked instead; δ must be invertible there.
BoundaryRelationResult boundary_relation_check(const HyperbolicSystem& sys,
                                               const BasePoint& X,
                                               bool use_identity_q = false,
                                               const Tols& tol = {});

struct BlockDiagCorrection {
  CMat e_minus1;      // order -1 basis correction
  CMat a0_corrected;  // ä₀: block-diagonal part of the source
  CMat source;        // G at the requested finite-difference step
  Real residual = 0.0;  // off-block norm of G - [ȧ₁, F]
};

using SymbolProvider = std::function<CMat(const BasePoint&)>;

BlockDiagCorrection block_diag_correction(const HyperbolicSystem& sys,
                                          const BasePoint& X,
                                          const SymbolProvider& a0,
                                          Real fd_step = 1e-3,
                                          const Tols& tol = {});

struct FlowGrowthReport {
  Real growth_constant = 0.0;     // C = sup λ(φ⁻¹(X))/λ(ζ)
  Real delta_upper = 0.0;         // C₂ = sup |δ_j|
  Real min_sandwich_slack = 0.0;  // min of (C/γ₀)|δ_j(X)| - 1/λ(ζ)
  bool sandwich_holds = false;
  int samples = 0;
};

FlowGrowthReport flow_growth_and_sandwich(const HyperbolicSystem& sys, int branch,
                                          const Chart& chart, int n_samples,
                                          Real gamma0, std::uint64_t seed,
                                          const Tols& tol = {});

struct RealPrincipalTypeReport {
  Real max_char_value = 0.0;      // sup |δ_j| on the flowed critical set
  Real max_imag_residual = 0.0;   // realness of -i δ_j at γ = 0
  Real min_dtau = 0.0;            // |∂_τ δ_j| on the flowed critical set
  Real min_elliptic_abs = 0.0;    // min |δ_j| on the γ > 0 slice
  bool passed = false;
};

RealPrincipalTypeReport real_principal_type_check(
    const HyperbolicSystem& sys, int branch, const std::vector<CriticalRoot>& roots,
    const std::vector<Real>& xd_samples, Real gamma_slice = 0.25,
    const std::optional<Chart>& chart = std::nullopt, const Tols& tol = {});

}  // namespace hypwr
