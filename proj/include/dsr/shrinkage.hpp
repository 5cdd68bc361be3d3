#ifndef DSR_SHRINKAGE_HPP
#define DSR_SHRINKAGE_HPP

#include "dsr/patch_match.hpp"

namespace dsr {

// Weight lambda > 0 and shape nu in [0, 1] of the nonconvex low-rank penalty.
// nu = 1 is the nuclear norm; nu = 0 is the hard-threshold limit.
struct ShrinkParams {
  double lambda = 1.0;
  double nu = 0.02;

  void validate() const;
};

// Magnitude below which nu_shrink maps to zero: lambda^(1/(2-nu)).
double shrink_threshold(double lambda, double nu);

// Pointwise nu-shrinkage: sign(x) * max(0, |x| - lambda |x|^(nu-1)).
double nu_shrink_scalar(double x, double lambda, double nu);

// Soft thresholding, the nu = 1 case.
double soft_threshold(double x, double lambda);

// Moreau envelope of the penalty: quadratic below the threshold,
// |x|^nu / nu - delta above it. Requires nu in (0, 1].
double nu_huber(double x, double lambda, double nu);

// Singular value thresholding: u * soft(sigma, lambda) * v^T.
Block prox_nuclear(const Block& m, double lambda);

// u * nu_shrink(sigma, lambda, nu) * v^T.
Block prox_g(const Block& m, double lambda, double nu);

double nuclear_norm(const Block& m);

}  // namespace dsr

#endif  // DSR_SHRINKAGE_HPP
