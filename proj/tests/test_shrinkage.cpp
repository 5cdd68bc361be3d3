#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dsr/shrinkage.hpp"

using namespace dsr;

namespace {

double prox_objective(const Block& y, const Block& b, double lambda) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  return 0.5 * (y - b).squaredNorm() + lambda * svd.singularValues().sum();
}

Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

Block random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Block b(rows, cols);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  return b;
}

Block diag2(double a, double b) {
  Block m = Block::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("nu_shrink_scalar") {
  CHECK(nu_shrink_scalar(2.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(nu_shrink_scalar(0.5, 1.0, 1.0) == 0.0);
  CHECK(nu_shrink_scalar(3.0, 1.0, 0.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK(nu_shrink_scalar(0.9, 1.0, 0.0) == 0.0);
  CHECK(nu_shrink_scalar(0.0, 1.0, 0.5) == 0.0);
  CHECK(nu_shrink_scalar(-2.0, 1.0, 1.0) == doctest::Approx(-1.0));
}

TEST_CASE("nu_shrink_scalar properties") {
  for (double lambda : {0.1, 1.0, 2.5}) {
    for (double nu : {0.0, 0.02, 0.1, 0.5, 1.0}) {
      const double knee = shrink_threshold(lambda, nu);
      double prev = 0.0;
      for (int i = 0; i <= 4000; ++i) {
        const double x = 1e-3 * i * std::max(knee, 1.0);
        const double t = nu_shrink_scalar(x, lambda, nu);
        CHECK((t == 0.0) == (x <= knee));
        CHECK(std::abs(t) <= std::abs(x));
        CHECK(nu_shrink_scalar(-x, lambda, nu) == -t);
        if (x > knee) CHECK(t >= prev);
        prev = t;
      }
    }
  }
}

TEST_CASE("nu_huber") {
  CHECK(nu_huber(0.5, 1.0, 1.0) == doctest::Approx(0.125));
  CHECK(nu_huber(2.0, 1.0, 1.0) == doctest::Approx(1.5));
  for (double lambda : {1.0, 0.3}) {
    for (double nu : {1.0, 0.5, 0.02}) {
      const double knee = shrink_threshold(lambda, nu);
      const double quad = knee * knee / (2.0 * lambda);
      const double delta = (1.0 / nu - 0.5) * std::pow(lambda, nu / (2.0 - nu));
      const double power = std::pow(knee, nu) / nu - delta;
      CHECK(std::abs(quad - power) <= 1e-12 * std::max(1.0, std::abs(quad)));
      CHECK(std::abs(nu_huber(knee, lambda, nu) - quad) <= 1e-12 * std::max(1.0, quad));
    }
  }
  CHECK_THROWS_AS(nu_huber(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("scalar Moreau identity at nu = 1") {
  // min_x 1/2 (x - y)^2 + lambda |x| is attained at T(y) and equals lambda * h(y);
  // at lambda = 1 that is h(y) itself.
  for (double lambda : {1.0, 0.4, 2.0}) {
    for (int i = -500; i <= 500; ++i) {
      const double y = 0.01 * i;
      const double t = nu_shrink_scalar(y, lambda, 1.0);
      const double env = 0.5 * (y - t) * (y - t) + lambda * std::abs(t);
      CHECK(std::abs(env - lambda * nu_huber(y, lambda, 1.0)) <= 1e-12);
    }
  }
}

TEST_CASE("prox_nuclear") {
  SUBCASE("diagonal input") {
    const Block out = prox_nuclear(diag2(3.0, 1.0), 1.0);
    CHECK((out - diag2(2.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("lambda = 0 is the identity") {
    std::mt19937_64 rng(1);
    const Block m = random_block(25, 10, rng);
    CHECK((prox_nuclear(m, 0.0) - m).cwiseAbs().maxCoeff() <= 1e-12);
    const Block wide = random_block(4, 9, rng);
    CHECK((prox_nuclear(wide, 0.0) - wide).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("output singular values are soft-thresholded") {
    std::mt19937_64 rng(2);
    const Block m = random_block(25, 10, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> in(m), out(prox_nuclear(m, 1.5));
    for (Eigen::Index k = 0; k < 10; ++k)
      CHECK(out.singularValues()[k] ==
            doctest::Approx(std::max(0.0, in.singularValues()[k] - 1.5)).epsilon(1e-10));
  }
  SUBCASE("minimizer oracle: random perturbations and subgradient descent") {
    std::mt19937_64 rng(3);
    const double lambda = 0.7;
    const Block y = random_block(25, 10, rng);
    const Block p = prox_nuclear(y, lambda);
    const double best = prox_objective(y, p, lambda);
    std::uniform_real_distribution<double> mag(-8.0, 0.0);
    int worse = 0;
    for (int trial = 0; trial < 100000; ++trial) {
      const Block q = p + std::pow(10.0, mag(rng)) * random_block(25, 10, rng);
      if (prox_objective(y, q, lambda) >= best - 1e-12) ++worse;
    }
    CHECK(worse == 100000);

    // Projected-free subgradient descent with diminishing steps.
    Block b = y;
    double sg_best = prox_objective(y, b, lambda);
    for (int k = 1; k <= 20000; ++k) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Block g = b - y;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-12)
          g += lambda * svd.matrixU().col(i) * svd.matrixV().col(i).transpose();
      b -= (0.5 / std::sqrt(static_cast<double>(k))) * g;
      sg_best = std::min(sg_best, prox_objective(y, b, lambda));
    }
    CHECK(best <= sg_best + 1e-12);
    CHECK(sg_best - best <= 1e-2 * best);
  }
  SUBCASE("firmly nonexpansive") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const Block a = random_block(25, 10, rng), b = random_block(25, 10, rng, 0.5);
      const double lambda = 0.1 + 0.01 * trial;
      const Block pa = prox_nuclear(a, lambda), pb = prox_nuclear(b, lambda);
      CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
      CHECK((pa - pb).squaredNorm() <= ((pa - pb).array() * (a - b).array()).sum() + 1e-10);
    }
  }
}

TEST_CASE("prox_g") {
  SUBCASE("nu = 1 matches prox_nuclear") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const Block m = random_block(25, 10, rng);
      const double lambda = 0.05 * (trial + 1);
      CHECK((prox_g(m, lambda, 1.0) - prox_nuclear(m, lambda)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("diagonal input at nu = 0") {
    const Block out = prox_g(diag2(3.0, 1.0), 1.0, 0.0);
    CHECK((out - diag2(8.0 / 3.0, 0.0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("rank-1 input keeps its singular vectors") {
    std::mt19937_64 rng(6);
    Eigen::VectorXd u = random_block(25, 1, rng).col(0).normalized();
    Eigen::VectorXd v = random_block(10, 1, rng).col(0).normalized();
    const double sigma = 4.0, lambda = 2.0, nu = 0.3;
    REQUIRE(sigma > shrink_threshold(lambda, nu));
    const Block out = prox_g(sigma * u * v.transpose(), lambda, nu);
    const Block expected = nu_shrink_scalar(sigma, lambda, nu) * u * v.transpose();
    CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("commutes with orthogonal rotations") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const Block m = random_block(25, 10, rng);
      const Eigen::MatrixXd ql = random_orthogonal(25, rng), qr = random_orthogonal(10, rng);
      for (double nu : {1.0, 0.5, 0.02}) {
        const Block lhs = prox_g(ql * m * qr, 1.2, nu);
        const Block rhs = ql * prox_g(m, 1.2, nu) * qr;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
      }
    }
  }
  SUBCASE("small nu keeps large singular values and drops small ones") {
    // T(x) -> x - lambda / x as nu -> 0, so agreement with a hard threshold is
    // only within 1e-3 once sigma^2 >= 1000 lambda.
    std::mt19937_64 rng(8);
    const double lambda = 0.25;
    const Eigen::MatrixXd ql = random_orthogonal(25, rng), qr = random_orthogonal(10, rng);
    Eigen::VectorXd s(10);
    s << 80, 60, 45, 30, 20, 0.45, 0.3, 0.2, 0.1, 0.01;
    const Block m = ql.leftCols(10) * s.asDiagonal() * qr;
    Eigen::VectorXd hard = s;
    for (Eigen::Index k = 0; k < 10; ++k) hard[k] = s[k] > std::sqrt(lambda) ? s[k] : 0.0;
    const Block expected = ql.leftCols(10) * hard.asDiagonal() * qr;
    const Block out = prox_g(m, lambda, 1e-6);
    CHECK((out - expected).norm() <= 1e-3 * expected.norm());
  }
  SUBCASE("non-finite input is a numeric error") {
    Block m = Block::Zero(3, 2);
    m(1, 1) = std::nan("");
    CHECK_THROWS_AS(prox_g(m, 1.0, 0.5), NumericError);
  }
}

TEST_CASE("nuclear_norm") {
  CHECK(nuclear_norm(diag2(3.0, -1.0)) == doctest::Approx(4.0));
  CHECK(nuclear_norm(Block::Constant(25, 10, 2.0)) == doctest::Approx(2.0 * std::sqrt(250.0)));
}
