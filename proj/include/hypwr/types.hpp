#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypwr {

using Real = double;
using Complex = std::complex<Real>;

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

// Frequency ζ = (τ - iγ, η), γ >= 0, ζ != 0.
struct Frequency {
  Real tau = 0.0;
  Vec eta;   // length d-1
  Real gamma = 0.0;

  Frequency() = default;
  Frequency(Real tau_, Vec eta_, Real gamma_)
      : tau(tau_), eta(std::move(eta_)), gamma(gamma_) {}

  Real lambda() const {
    return std::sqrt(gamma * gamma + tau * tau + eta.squaredNorm());
  }
  bool is_zero(Real tol = 0.0) const { return lambda() <= tol; }

  Frequency scaled(Real s) const { return Frequency(s * tau, s * eta, s * gamma); }
  Frequency normalized() const { return scaled(1.0 / lambda()); }

  // ρ = τ - iγ
  Complex rho() const { return Complex(tau, -gamma); }
};

// Base point X = (t, y, x_d, ζ) with x_d >= 0.
struct BasePoint {
  Real t = 0.0;
  Vec y;   // length d-1
  Real x_d = 0.0;
  Frequency freq;

  BasePoint() = default;
  BasePoint(Real t_, Vec y_, Real xd_, Frequency f_)
      : t(t_), y(std::move(y_)), x_d(xd_), freq(std::move(f_)) {}

  static BasePoint boundary(const Frequency& f, int d) {
    return BasePoint(0.0, Vec::Zero(d - 1), 0.0, f);
  }
};

// Numerical policy knobs, overridable via flat dotted keys from the CLI.
struct Tols {
  // system_model
  Real rcond_min = 1e-12;        // A_d singularity cutoff (reciprocal condition number)
  Real fd_step_rel = 1e-5;       // coefficient finite-difference step: h = rel*max(1,|x|)
  // spectral
  Real cluster_rel = 1e-8;       // eigenvalue cluster tolerance, relative to λ(ζ)
  Real cluster_floor_rel = 4e-7; // numerical floor (defective spectra split at ~sqrt(eps))
  Real realness_rel = 1e-8;      // |Im μ| cutoff for classification at γ = 0
  Real gap_min_rel = 1e-12;      // NoSpectralGap threshold
  Real eigvec_cond_max = 1e8;    // above this, projectors fall back to contour integration
  Real kappa_min = 1e-8;         // ZeroKappa threshold
  // lopatinskii
  Real root_residual = 1e-10;    // |Δ| at accepted critical-set roots
  Real dtau_step_rel = 1e-6;     // ∂_τΔ central-difference step, relative to λ
  Real weak_lc_min = 1e-8;       // min |Δ| for the weak condition over the γ > 0 grid
  Real dtau_min = 1e-6;          // first-order vanishing threshold |∂_τΔ|
  Real delta_tilde_division = 1e-6; // below this |Δ̃|, 𝔭's first column uses the limit form
  Real omega_bracket_mult = 3.0; // ν search bracket: τ in ±mult·λ
  int omega_bracket_cells = 64;
  // symmetrizer
  Real krylov_trunc = 1e-10;
  Real krylov_residual = 1e-8;
  // transport
  Real flow_tol = 1e-10;         // per unit x_d
  Real branch_gap_rel = 1e-6;    // ClusterTooClose separation (per block)
  Real flow_collision_rel = 1e-3;  // BranchCollision: Rayleigh derivative floor
  Real kernel_detect = 1e-8;     // |δ_jj| below this counts as kernel at critical points
  // estimator
  Real gamma0 = 1.0;
  int grid_n_default = 2048;
  int grid_n_max = 1 << 21;
  Real xmax_efolds = 20.0;
};

// Domain error with originating module/operation, surfaced by the CLI as
// structured diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string op, const std::string& what)
      : std::runtime_error(module + "." + op + ": " + what),
        module_(std::move(module)),
        op_(std::move(op)) {}
  const std::string& module_name() const { return module_; }
  const std::string& op_name() const { return op_; }

 private:
  std::string module_, op_;
};

#define HYPWR_ERROR_TYPE(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    Name(std::string module, std::string op, const std::string& what) \
        : Error(std::move(module), std::move(op), what) {}       \
  }

HYPWR_ERROR_TYPE(SingularBoundaryMatrix);
HYPWR_ERROR_TYPE(NoSpectralGap);
HYPWR_ERROR_TYPE(GlancingOnPath);
HYPWR_ERROR_TYPE(RankDeficient);
HYPWR_ERROR_TYPE(OmegaRootNotFound);
HYPWR_ERROR_TYPE(BranchCollision);
HYPWR_ERROR_TYPE(ChartExit);
HYPWR_ERROR_TYPE(ClusterTooClose);
HYPWR_ERROR_TYPE(BasisSwapFailed);
HYPWR_ERROR_TYPE(ZeroKappa);
HYPWR_ERROR_TYPE(CriticalFrequency);
HYPWR_ERROR_TYPE(NoGap);
HYPWR_ERROR_TYPE(ParseError);

#undef HYPWR_ERROR_TYPE

// Minimal-rotation alignment of an orthonormal frame Q against a reference:
// Q * polar(Q^H R), the orthogonal Procrustes solution.
inline CMat procrustes_align(const CMat& q, const CMat& ref) {
  Eigen::JacobiSVD<CMat> svd(q.adjoint() * ref,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  return q * (svd.matrixU() * svd.matrixV().adjoint());
}

// Largest principal angle between the column spans of two orthonormal frames.
inline Real principal_angle(const CMat& a, const CMat& b) {
  Eigen::JacobiSVD<CMat> svd(a.adjoint() * b);
  Real c = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, std::max(-1.0, c)));
}

// Orthonormal basis of the numerical column space (singular values > tol·σ₁).
inline CMat range_basis(const CMat& m, int rank) {
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(rank);
}

inline int numeric_rank(const CMat& m, Real tol_abs) {
  Eigen::JacobiSVD<CMat> svd(m);
  return (svd.singularValues().array() > tol_abs).count();
}

inline Real rcond(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m);
  Real smax = svd.singularValues().maxCoeff();
  if (smax == 0.0) return 0.0;
  return svd.singularValues().minCoeff() / smax;
}

}  // namespace hypwr
