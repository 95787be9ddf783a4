#pragma once

#include "hypwr/lopatinskii.hpp"
#include "hypwr/spectral.hpp"
#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <cstdint>
#include <vector>

namespace hypwr {

// Constant-coefficient symmetrizer symbols at one frequency, expressed in the
// coordinates of the diagonalizing basis e₀ (first p columns span 𝔼⁻).
struct SymmetrizerSymbols {
  CMat basis;          // e₀, eigenvector columns, stable block first
  CMat a_dot;          // e₀⁻¹ a e₀ (diagonal up to roundoff)
  CMat delta;          // diag(Δ̃ I_p, I_{n-p})
  Mat r;               // diag(-1 on the stable block, ρ on the unstable one)
  CMat sigma;          // δ* r δ
  CMat q;              // p×p, q b⁻ = Δ̃ I_p
  CMat b_plus;         // p×(n-p): b applied to the unstable columns
  CMat m;              // [I_p | q b⁺]
  Real rho = 0.0;
  Complex delta_tilde{};
  Frequency zeta;
  LopatinskiiData lop;
  int p = 0;

  // q ḃ in coordinates: [Δ̃ I_p | q b⁺]
  CMat q_bdot() const {
    CMat out(p, delta.cols());
    out.leftCols(p) = delta_tilde * CMat::Identity(p, p);
    out.rightCols(delta.cols() - p) = q * b_plus;
    return out;
  }
};

// Factorization + eigenbasis assembly at ζ. For uniform-condition systems
// (no critical set) the filter degenerates to Δ̃ ≡ 1, q = (b⁻)⁻¹.
SymmetrizerSymbols build_symmetrizer(const HyperbolicSystem& sys, const Frequency& zeta,
                                     Real rho, std::optional<Real> nu_hint = std::nullopt,
                                     const Tols& tol = {});

// ρ = 2C + 1 with C = sup over the sample of ‖[I_p | -q b⁺]‖², the convexity
// constant of the boundary estimate.
Real choose_rho(const HyperbolicSystem& sys, const std::vector<Frequency>& sample,
                std::optional<Real> nu_hint = std::nullopt, const Tols& tol = {});

struct ConditionReport {
  bool hermitian = false;
  Real hermitian_residual = 0.0;
  Real bound_constant = 0.0;       // C₂ = ‖r‖ for (ii), exact by construction
  Real bound_max_violation = 0.0;  // max over trials of (|<σv₁,v₂>| - C₂|δv₁||δv₂|)
  Real min_dissipativity_ratio = 0.0;  // min over trials of Im(v*σȧv)/(γ|δv|²)
  CVec argmin_dissipativity;
  Real min_boundary_slack = 0.0;   // min of v*σv - α|δv|² + β|q ḃ v|², α=1, β=2C
  CVec argmin_boundary;
  int n_trials = 0;
  std::vector<Real> gamma_range;
};

// Random-vector verification of Definition-3.2-style conditions at the
// frequencies underlying `syms` (one entry per γ-scaled frequency).
ConditionReport verify_symmetrizer_conditions(const std::vector<SymmetrizerSymbols>& syms,
                                              int trials, std::uint64_t seed,
                                              const Tols& tol = {});

// Orthonormal basis of span{ℓ, aℓ, a²ℓ, …}, truncated when the next power
// stays within tolerance of the current span.
CMat krylov_space(const CMat& a, const CVec& ell, const Tols& tol = {});

struct KrylovDegeneracyReport {
  Real max_quadratic_form = 0.0;  // max |<σw,w>| over unit w in the Krylov space
  int krylov_dim = 0;
  bool within_tolerance = false;
};

KrylovDegeneracyReport check_krylov_degeneracy(const SymmetrizerSymbols& sym,
                                               const Tols& tol = {});

struct BoundaryProjectorFactor {
  CMat x;   // (n-p)×n, orthonormal complement of the rows of b
  CMat y;   // n×p, b y = I_p
  CMat d;   // n×(n-p)
  Real by_identity_residual = 0.0;
};

// I_n = [b; 𝔵] [𝔶 | 𝔡] with 𝔵 an orthonormal basis of the row complement.
BoundaryProjectorFactor build_boundary_projector_factor(const CMat& b,
                                                        const Tols& tol = {});

}  // namespace hypwr
