#pragma once

#include "hypwr/symmetrizer.hpp"
#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hypwr {

using ProfileFn = std::function<CVec(Real)>;  // f̂(x_d), C^n valued

// One-frequency boundary value problem on [0, X_max]:
//   û' = -i a û + i f̂,   b û(0) = ĝ,   bounded as x_d → ∞.
struct FrequencyBVP {
  CMat a;            // reduced symbol at ζ
  Frequency zeta;
  CMat b;            // boundary matrix (complexified)
  ProfileFn f_hat;   // compactly supported within [0, 0.9 X_max]
  CVec g_hat;
  Real x_max = 0.0;
  int n_points = 0;  // grid nodes - 1 (uniform spacing x_max / n_points)

  // X_max = efolds / min|Im μ_stable|; N resolves the fastest oscillation.
  static FrequencyBVP make(const HyperbolicSystem& sys, const Frequency& zeta,
                           ProfileFn f, CVec g, const Tols& tol = {});
};

struct BVPSolution {
  CMat u;            // n × (N+1) samples
  CVec u0;           // û(0)
  Real grid_h = 0.0;
  Real ode_residual = 0.0;       // 4th-order stencil check, relative
  Real boundary_residual = 0.0;  // |b û(0) - ĝ|
  Real truncation_bound = 0.0;   // e^{-|Im μ| X_max} decay estimate
};

BVPSolution solve_frequency_bvp(const FrequencyBVP& bvp, const Tols& tol = {});

// (interior, trace) with weight λ(ζ)^{2s}: trapezoid in x_d.
std::pair<Real, Real> weighted_norms(const CMat& u, Real grid_h, const Frequency& zeta,
                                     Real s);

struct EstimateReport {
  Frequency zeta;
  Real lhs = 0.0;             // γ‖δû‖² + |δû(0)|²
  Real rhs_filtered = 0.0;    // (1/γ)‖δf̂‖² + |q ĝ|²
  Real rhs_unfiltered = 0.0;  // (1/γ)‖f̂‖² + |ĝ|²
  Real sharp_filtered = 0.0;
  Real sharp_unfiltered = 0.0;
  Real abs_delta_tilde = 0.0;
};

// Maximal lhs/rhs over n_data random data pairs plus the adversarial pair
// aligned with the smallest singular value of the boundary solve, sharpened
// over their span by a generalized eigenproblem.
EstimateReport sharp_constants(const HyperbolicSystem& sys, const Frequency& zeta,
                               int n_data, std::uint64_t seed,
                               std::optional<Real> nu_hint = std::nullopt,
                               const Tols& tol = {});

Real sharp_constant(const HyperbolicSystem& sys, const Frequency& zeta, bool filter,
                    int n_data, std::uint64_t seed,
                    std::optional<Real> nu_hint = std::nullopt, const Tols& tol = {});

struct GammaSweepRow {
  Real gamma = 0.0;
  Real lhs = 0.0;
  Real rhs = 0.0;
  Real ratio = 0.0;
};

// Fixed data profile, γ across the ladder; the filtered ratio must not grow.
std::vector<GammaSweepRow> gamma_scaling_sweep(const HyperbolicSystem& sys,
                                               const Frequency& zeta_base,
                                               const std::vector<Real>& gamma_ladder,
                                               std::uint64_t seed,
                                               std::optional<Real> nu_hint = std::nullopt,
                                               const Tols& tol = {});

struct CoulombelRow {
  Real abs_delta_tilde = 0.0;
  Real unfiltered = 0.0;        // sharp constant against (1/γ)‖f‖² + |g|²
  Real one_derivative = 0.0;    // against (1/γ³)λ²‖f‖² + (1/γ²)λ²|g|²
};

std::vector<CoulombelRow> coulombel_comparison(const HyperbolicSystem& sys,
                                               const std::vector<Frequency>& zeta_sequence,
                                               int n_data, std::uint64_t seed,
                                               std::optional<Real> nu_hint = std::nullopt,
                                               const Tols& tol = {});

// ζ with |Δ̃| = target on the τ = ν line: γ = target·√(ν²+|η|²)/√(1-target²).
Frequency frequency_at_delta_tilde(Real nu, const Vec& eta, Real target);

}  // namespace hypwr
