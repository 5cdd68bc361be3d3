#include "dsr/shrinkage.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dsr {

void ShrinkParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("nu must lie in [0, 1]");
}

double shrink_threshold(double lambda, double nu) { return std::pow(lambda, 1.0 / (2.0 - nu)); }

double nu_shrink_scalar(double x, double lambda, double nu) {
  const double a = std::abs(x);
  if (a == 0.0 || a <= shrink_threshold(lambda, nu)) return 0.0;
  const double mag = std::max(0.0, a - lambda * std::pow(a, nu - 1.0));
  return std::copysign(mag, x);
}

double soft_threshold(double x, double lambda) {
  const double mag = std::abs(x) - lambda;
  return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

double nu_huber(double x, double lambda, double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("nu_huber: nu must lie in (0, 1]");
  const double a = std::abs(x);
  if (a < shrink_threshold(lambda, nu)) return a * a / (2.0 * lambda);
  const double delta = (1.0 / nu - 0.5) * std::pow(lambda, nu / (2.0 - nu));
  return std::pow(a, nu) / nu - delta;
}

namespace {

// Applies f to the singular values of m, i.e. returns u * f(sigma) * v^T.
// The thin SVD comes from the eigendecomposition of the smaller Gram matrix:
// for m = u s v^T, u f(s) v^T = m * v diag(f(s)/s) v^T (or the transposed
// form when m is wide), which only needs the singular values that survive f.
template <typename Shrink>
Block shrink_singular_values(const Block& m, Shrink&& shrink) {
  if (!m.allFinite()) throw NumericError("block contains non-finite entries");
  if (m.size() == 0) return m;
  const bool tall = m.cols() <= m.rows();
  const Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(m.transpose() * m)
                                    : Eigen::MatrixXd(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("SVD failed");
  Eigen::VectorXd gain(gram.rows());
  for (Eigen::Index k = 0; k < gain.size(); ++k) {
    const double s = std::sqrt(std::max(eig.eigenvalues()[k], 0.0));
    gain[k] = s > 0.0 ? shrink(s) / s : 0.0;
  }
  const Eigen::MatrixXd& basis = eig.eigenvectors();
  const Eigen::MatrixXd filter = basis * gain.asDiagonal() * basis.transpose();
  return tall ? Block(m * filter) : Block(filter * m);
}

}  // namespace

Block prox_nuclear(const Block& m, double lambda) {
  return shrink_singular_values(m, [lambda](double s) { return soft_threshold(s, lambda); });
}

Block prox_g(const Block& m, double lambda, double nu) {
  return shrink_singular_values(m, [lambda, nu](double s) { return nu_shrink_scalar(s, lambda, nu); });
}

double nuclear_norm(const Block& m) {
  if (!m.allFinite()) throw NumericError("block contains non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().sum();
}

}  // namespace dsr
