#pragma once

#include "hypwr/system_model.hpp"
#include "hypwr/types.hpp"

#include <vector>

namespace hypwr {

// Eigenstructure of the reduced symbol with clustering, phase-fixed
// eigenvectors and spectral projectors.
struct SpectralData {
  CVec eigenvalues;            // one entry per column, cluster members equal-ish
  CMat eigenvectors;           // columns, unit norm, phase fixed
  std::vector<std::vector<int>> clusters;   // column indices per cluster
  std::vector<Complex> cluster_values;      // cluster means
  bool jordan_flag = false;    // some cluster has geometric < algebraic multiplicity
  Real eigvec_rcond = 0.0;

  CMat stable_projector;       // π₋ (γ > 0 spectral sum; limit mode extrapolant)
  int stable_dim = 0;
  std::vector<Real> kappa;     // filled by kappa_signs at hyperbolic points

  // Spectral projector of cluster k (right/left eigenvector form).
  CMat cluster_projector(int k) const;
};

enum class PointClass { Elliptic, Hyperbolic, Mixed, Glancing };

const char* to_string(PointClass c);

// Full eigendecomposition with clustering at tolerance ~cluster_rel*scale.
SpectralData eigendecompose(const CMat& a, Real scale = 0.0, const Tols& tol = {});

struct StableBundle {
  CMat projector;        // π₋
  CMat basis;            // orthonormal columns spanning range(π₋)
  int dim = 0;
  Real extension_error = 0.0;   // limit mode: residual of last two extrapolants
};

// Direct mode (γ > 0 or elliptic): sum of Im<0 spectral projectors.
// Throws NoSpectralGap when the spectrum touches the real axis.
StableBundle stable_subspace_direct(const CMat& a, Real scale, const Tols& tol = {});

// Dispatching version: direct when the symbol has a spectral gap, otherwise the
// γ-ladder Richardson extrapolation of π₋(γ_k), γ_k = 2^{-k} λ(ζ), k = 6..14.
StableBundle stable_subspace(const HyperbolicSystem& sys, const BasePoint& X,
                             const Tols& tol = {});

// Classification of frequency-boundary points at γ = 0.
PointClass classify_point(const HyperbolicSystem& sys, const BasePoint& X,
                          const Tols& tol = {});

// κ_j = -i ∂a_{1,j}/∂γ at γ = 0 along continued branches; hyperbolic points only.
// Returns κ ordered like eigendecompose(a(X))'s columns.
struct KappaResult {
  std::vector<Real> kappa;
  Real max_imag_residual = 0.0;
};
KappaResult kappa_signs(const HyperbolicSystem& sys, const BasePoint& X,
                        const Tols& tol = {});

// True iff span(basis) admits a real basis: rank[Re | Im] equals the dimension.
bool real_type_check(const CMat& basis, const Tols& tol = {});

// Orthonormal real basis for a real-type space (columns real vectors stored
// complex). Throws if the space is not of real type.
CMat realify_basis(const CMat& basis, const Tols& tol = {});

}  // namespace hypwr
