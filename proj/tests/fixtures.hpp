#pragma once

#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <cmath>
#include <random>
#include <string>

namespace fixtures {

using namespace hypwr;

inline const Real kThetaStar = 1.1780972450961724;  // 3π/8, the shipped WR angle

inline std::string data_path(const std::string& name) {
  return std::string(HYPWR_DATA_DIR) + "/" + name;
}

// n = 2, d = 2 system with A₁ = [[0,1],[1,0]], A₂ = diag(1,-1) and boundary
// row (cos θ, sin θ).
inline HyperbolicSystem s1(Real theta) {
  Mat a1(2, 2), a2(2, 2), b(1, 2);
  a1 << 0, 1, 1, 0;
  a2 << 1, 0, 0, -1;
  b << std::cos(theta), std::sin(theta);
  return HyperbolicSystem({a1, a2}, b);
}

inline HyperbolicSystem s1_wr() { return s1(kThetaStar); }

inline HyperbolicSystem s2() {
  return HyperbolicSystem::from_json_file(data_path("s2.json"));
}

inline HyperbolicSystem s1v() {
  return HyperbolicSystem::from_json_file(data_path("s1v.json"));
}

inline Frequency freq2(Real tau, Real eta, Real gamma) {
  Vec e(1);
  e << eta;
  return Frequency(tau, e, gamma);
}

inline BasePoint bp2(Real tau, Real eta, Real gamma, Real t = 0.0, Real y = 0.0,
                     Real xd = 0.0) {
  Vec yv(1);
  yv << y;
  return BasePoint(t, yv, xd, freq2(tau, eta, gamma));
}

// Analytic S1 facts used as oracles: reduced symbol [[ρ, η],[-η, -ρ]] with
// ρ = τ - iγ, eigenvalues ±sqrt(ρ² - η²), stable branch Im < 0.
inline Complex s1_stable_eigenvalue(Real tau, Real eta, Real gamma) {
  Complex rho(tau, -gamma);
  Complex mu = std::sqrt(rho * rho - eta * eta);
  if (gamma > 0.0) return (mu.imag() < 0) ? mu : -mu;
  // γ = 0 limit: the branch with κ < 0 is sgn(τ)·sqrt(τ² - η²) (hyperbolic).
  if (tau * tau > eta * eta) return (tau > 0 ? 1.0 : -1.0) * std::abs(mu);
  return (mu.imag() < 0) ? mu : -mu;  // elliptic: -i sqrt(η² - τ²)
}

inline CVec s1_stable_vector(Real tau, Real eta, Real gamma) {
  Complex rho(tau, -gamma);
  Complex mu = s1_stable_eigenvalue(tau, eta, gamma);
  CVec v(2);
  v << rho + mu, Complex(-eta, 0.0);
  return v / v.norm();
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace fixtures
