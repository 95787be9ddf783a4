#pragma once

#include "hypwr/expression.hpp"
#include "hypwr/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hypwr {

enum class CoeffKind { Constant, Variable };

// First-order hyperbolic boundary value problem on the half-space:
// matrices A_1..A_d (A_d nonsingular), boundary matrix B of rank p,
// p = number of positive eigenvalues of A_d.
class HyperbolicSystem {
 public:
  // Constant-coefficient constructor.
  HyperbolicSystem(std::vector<Mat> coeffs, Mat boundary);
  // Entry-wise expression providers; constant systems collapse automatically.
  HyperbolicSystem(int n, int d, std::vector<std::vector<ScalarExpr>> coeff_exprs,
                   std::vector<ScalarExpr> boundary_exprs, int p);

  static HyperbolicSystem from_json_file(const std::filesystem::path& path,
                                         const std::map<std::string, Real>& param_overrides = {});
  static HyperbolicSystem from_json_text(const std::string& text,
                                         const std::map<std::string, Real>& param_overrides = {});

  int n() const { return n_; }
  int d() const { return d_; }
  int p() const { return p_; }
  CoeffKind coeff_kind() const { return kind_; }

  // A_j(t, y, x_d), j in [0, d)
  Mat coeff(int j, Real t, const Vec& y, Real xd) const;
  Mat coeff(int j, const BasePoint& X) const { return coeff(j, X.t, X.y, X.x_d); }
  // B(t, y)
  Mat boundary(Real t, const Vec& y) const;
  Mat boundary(const BasePoint& X) const { return boundary(X.t, X.y); }

  const std::map<std::string, Real>& params() const { return params_; }

  // Coefficients are frozen (clamped) outside this box in (t, y, x_d); the
  // compact-dependence property is realized through a user-declared region.
  void set_freeze_box(Vec lo, Vec hi);

 private:
  int n_ = 0, d_ = 0, p_ = 0;
  CoeffKind kind_ = CoeffKind::Constant;
  std::vector<std::vector<ScalarExpr>> coeff_exprs_;  // d entries of n*n row-major
  std::vector<ScalarExpr> boundary_exprs_;            // p*n row-major
  std::vector<Mat> coeff_const_;                      // cached when constant
  std::optional<Mat> boundary_const_;
  std::map<std::string, Real> params_;
  Vec freeze_lo_, freeze_hi_;                         // length d+1 when set

  void finalize();
  void clamp_to_freeze_box(Real& t, Vec& y, Real& xd) const;
};

// a(X) = A_d^{-1} ((τ - iγ) I + Σ_{j<d} η_j A_j), homogeneous of degree 1 in ζ.
CMat reduced_symbol(const HyperbolicSystem& sys, const BasePoint& X,
                    const Tols& tol = {});

// det(ξ_d I + a(X))
Complex characteristic_polynomial(const HyperbolicSystem& sys, const BasePoint& X,
                                  Real xi_d, const Tols& tol = {});

struct AssumptionReport {
  struct PointChecks {
    bool ad_invertible = false;
    Real ad_rcond = 0.0;
    bool boundary_full_rank = false;
    bool p_matches_positive_eigenvalues = false;
    bool spectrum_real = false;
    bool semisimple = false;
    bool multiplicities_constant = false;
    std::vector<int> multiplicity_pattern;  // sorted cluster sizes, first grid direction
    bool all() const {
      return ad_invertible && boundary_full_rank && p_matches_positive_eigenvalues &&
             spectrum_real && semisimple && multiplicities_constant;
    }
  };
  std::vector<PointChecks> points;
  bool all_passed() const {
    if (points.empty()) return false;
    for (const auto& pc : points)
      if (!pc.all()) return false;
    return true;
  }
};

// Hyperbolicity / non-characteristic-boundary / rank checks over a sample of
// base points and a grid of real directions ξ on S^{d-1}.
AssumptionReport check_assumptions(const HyperbolicSystem& sys,
                                   const std::vector<BasePoint>& sample_points,
                                   int direction_grid = 100, const Tols& tol = {});

}  // namespace hypwr
