#pragma once

#include "hypwr/spectral.hpp"
#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <optional>
#include <vector>

namespace hypwr {

// Factorization data around the critical set:
//   b⁻ = 𝔭 · diag(Δ̃, 1, …, 1) · c⁻¹,  Δ̃ = (γ + iω)/λ,  ω = τ - ν(t, y, η).
struct LopatinskiiData {
  Complex delta_value{};       // Δ(X) = det(b · basis)
  CMat basis_used;             // n×p stable basis (pivoted column order)
  std::vector<int> pivot;      // basis column permutation applied before the d-solve
  CVec dcoeffs;                // d_2..d_p (size p-1)
  CMat p_matrix;               // 𝔭(X)
  CMat c_matrix;               // c(X), unit lower triangular, column-1 fill
  Real omega = 0.0;            // ω(X)
  Real nu = 0.0;               // ν(t, y, η)
  Complex delta_tilde{};       // Δ̃(X)
  CVec critical_direction;     // ℓ = e₁ - Σ d_i e_i (pivoted order)
  Real p_rcond = 0.0;
  Real factorization_residual = 0.0;  // ‖b⁻ - 𝔭 diag(Δ̃,1,…,1) c⁻¹‖_F
  bool trivial_filter = false;        // uniform-condition systems: Δ̃ ≡ 1
};

// Stable bases along an ordered grid, consecutive frames aligned by
// orthogonal Procrustes so the determinant varies continuously.
std::vector<CMat> continuous_stable_basis(const HyperbolicSystem& sys,
                                          const std::vector<BasePoint>& grid,
                                          const Tols& tol = {});

// Δ(X) = det(b(X) · basis)
Complex lopatinskii_determinant(const HyperbolicSystem& sys, const BasePoint& X,
                                const CMat& basis);

struct CriticalRoot {
  Frequency zeta;            // γ = 0 root location
  BasePoint point;           // with the boundary base point used in the search
  Complex dtau_delta{};      // ∂_τΔ, central difference at the root
  PointClass cls = PointClass::Hyperbolic;
  Real residual = 0.0;       // |Δ| after refinement
};

// Zero crossings of Δ on a γ = 0 grid (ordered path on S^d), refined by secant
// iteration in τ at fixed η. Glancing points split the scan.
std::vector<CriticalRoot> find_critical_set(const HyperbolicSystem& sys,
                                            const std::vector<BasePoint>& sphere_grid,
                                            const Tols& tol = {});

struct WRReport {
  bool weak_lopatinskii = false;
  bool critical_set_hyperbolic = false;   // Γ nonempty and inside ℋ
  bool first_order_vanishing = false;     // |∂_τΔ| > threshold at all roots
  bool wr = false;
  bool uniform_lopatinskii = false;       // weak holds and Γ empty
  Real min_abs_delta_gamma_pos = 0.0;     // over the γ > 0 sweep
  std::vector<CriticalRoot> roots;
};

// Sphere grid for d = 2: count points on the circle at γ = 0 (or at given γ).
std::vector<BasePoint> circle_grid(int count, Real gamma = 0.0, Real t = 0.0,
                                   Real y = 0.0);

WRReport check_wr_membership(const HyperbolicSystem& sys, int sphere_resolution = 256,
                             const std::vector<Real>& gamma_ladder = {},
                             const Tols& tol = {});

// Prop.-2.11-style boundary factorization at X in a hyperbolic neighborhood of
// the critical set. When `basis` is absent the stable bundle basis at X is
// used. `nu_hint` skips the ν bracket search.
LopatinskiiData factor_boundary_matrix(const HyperbolicSystem& sys, const BasePoint& X,
                                       const std::optional<CMat>& basis = std::nullopt,
                                       std::optional<Real> nu_hint = std::nullopt,
                                       const Tols& tol = {});

// ν(t, y, η): τ-location of the Δ zero at γ = 0 with the given (t, y, η),
// searched on [-mult·λ, mult·λ] in `cells` subdivisions; nearest root to
// tau_ref wins. Empty when no sign change is found.
std::optional<Real> find_nu(const HyperbolicSystem& sys, Real t, const Vec& y,
                            const Vec& eta, Real tau_ref, const Tols& tol = {});

}  // namespace hypwr
