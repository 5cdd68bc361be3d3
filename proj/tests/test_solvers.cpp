#include <doctest.h>

#include <cmath>
#include <random>

#include "dsr/error.hpp"
#include "dsr/scene.hpp"
#include "dsr/solvers.hpp"
#include "oracles.hpp"

using namespace dsr;

namespace {

DepthVolume random_depth(FrameDims d, std::uint64_t seed, double lo = 1.0, double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  DepthVolume v(d);
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = u(rng);
  return v;
}

// Small moving-square scene used by the solver-level checks.
Scene small_scene() {
  SceneSpec s;
  s.dims = {32, 32, 6};
  s.objects = {{10, 10, 4, 11, 6.0, 0.3, 2, 0}};
  return synth_scene(s);
}

SolverConfig small_config(Algorithm algo) {
  SolverConfig c;
  c.algo = algo;
  c.geometry.patch_side = 4;
  c.geometry.stride = 2;
  c.geometry.window = {7, 7, 3};
  c.geometry.group_size = 6;
  return c;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("stop_check examples") {
  std::vector<double> prev{1.0, 0.0};
  CHECK(stop_check(prev, std::vector<double>{1.0, 0.0}, 1e-4));
  CHECK(stop_check(prev, std::vector<double>{1.0, 1e-5}, 1e-4));
  CHECK_FALSE(stop_check(prev, std::vector<double>{1.0, 1e-3}, 1e-4));
  CHECK(relative_change(std::vector<double>{3.0, 4.0}, std::vector<double>{3.0, 4.5}) ==
        doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(stop_check(std::vector<double>{0.0, 0.0}, prev, 1e-4), DataError);
  CHECK_THROWS_AS(relative_change(prev, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("objective_nuclear") {
  const FrameDims d{8, 8, 2};
  PatchGeometry g;
  g.patch_side = 2;
  g.stride = 2;
  g.group_size = 3;
  const auto guide = random_depth(d, 1);
  const auto table = build_groups(guide, g, 1);

  SUBCASE("data term only at lambda = 0") {
    const auto phi = random_depth(d, 2);
    const auto psi = apply_sampling(SamplingOperator::decimation(d, 2), phi);
    CHECK(objective_nuclear(phi, psi, table, 0.0) == 0.0);
  }
  SUBCASE("constant volume: each block has one singular value c * sqrt(B L)") {
    const double c = 1.5;
    const DepthVolume phi(d, c);
    const auto psi = apply_sampling(SamplingOperator::full(d), phi);
    const double expected = 0.7 * table.groups.size() * c * std::sqrt(4.0 * 3.0);
    CHECK(objective_nuclear(phi, psi, table, 0.7) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("matches the dense oracle") {
    const auto phi = random_depth(d, 3);
    const auto psi = add_noise(apply_sampling(SamplingOperator::decimation(d, 2), phi), 10.0, 4);
    const oracle::ConvexProblem prob(psi, table, 0.3);
    CHECK(objective_nuclear(phi, psi, table, 0.3, 3) ==
          doctest::Approx(prob.objective(oracle::as_vector(phi.values()))).epsilon(1e-12));
  }
}

TEST_CASE("ADMM phi-step solves the quadratic subproblem") {
  const FrameDims d{6, 6, 2};
  PatchGeometry g;
  g.patch_side = 2;
  g.stride = 2;
  g.window = {5, 5, 3};
  g.group_size = 3;
  const auto table = build_groups(random_depth(d, 10), g, 1);
  const auto psi = add_noise(apply_sampling(SamplingOperator::decimation(d, 2), random_depth(d, 11)),
                             20.0, 12);

  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  std::vector<Block> beta, dual;
  for (const auto& grp : table.groups) {
    Block b(4, static_cast<Eigen::Index>(grp.members.size()));
    Block s(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b.data()[i] = n01(rng);
      s.data()[i] = n01(rng);
    }
    beta.push_back(b);
    dual.push_back(s);
  }

  const Eigen::MatrixXd h = oracle::dense_selection(psi.op);
  const Eigen::MatrixXd b = oracle::dense_patch_operator(table);
  for (double rho : {0.3, 1.0, 4.0}) {
    const Eigen::VectorXd z = oracle::stack_blocks(beta) + oracle::stack_blocks(dual) / rho;
    const Eigen::MatrixXd lhs = h.transpose() * h + rho * b.transpose() * b;
    const Eigen::VectorXd rhs = h.transpose() * oracle::as_vector(psi.values) + rho * b.transpose() * z;
    const Eigen::VectorXd expected = lhs.ldlt().solve(rhs);

    const AdmmPhiStep step(psi, table, rho);
    const auto phi = step(beta, dual);
    REQUIRE(phi.size() == static_cast<std::size_t>(expected.size()));
    for (std::size_t n = 0; n < phi.size(); ++n)
      CHECK(phi[n] == doctest::Approx(expected[static_cast<Eigen::Index>(n)]).epsilon(1e-8));
  }
}

TEST_CASE("lambda -> 0 with full sampling returns the input") {
  const FrameDims d{12, 12, 3};
  const auto truth = random_depth(d, 20);
  const auto psi = apply_sampling(SamplingOperator::full(d), truth);
  PatchGeometry g;
  g.patch_side = 3;
  g.stride = 2;
  g.group_size = 4;
  const auto table = build_groups(truth, g, 1);
  SolverConfig cfg;
  cfg.lambda = 1e-12;
  cfg.geometry = g;
  CHECK(max_abs_diff(solve_admm(psi, table, cfg).phi.values(), truth.values()) <= 1e-8);
  CHECK(max_abs_diff(solve_simplified(psi, table, cfg).phi.values(), truth.values()) <= 1e-8);
}

TEST_CASE("constant scene from 2x decimation") {
  const FrameDims d{20, 20, 4};
  const double c = 3.0;
  const DepthVolume truth(d, c);
  const auto psi = apply_sampling(SamplingOperator::decimation(d, 2), truth);
  const auto guide = random_depth(d, 30, 0.0, 1.0);
  SolverConfig cfg;
  cfg.lambda = 1e-4;
  const auto table = build_groups(guide, cfg.geometry, 1);
  CHECK(max_abs_diff(solve_admm(psi, table, cfg).phi.values(), truth.values()) <= 1e-6);
  CHECK(max_abs_diff(solve_simplified(psi, table, cfg).phi.values(), truth.values()) <= 1e-6);
}

TEST_CASE("ADMM with nu = 1 reaches the convex optimum") {
  const FrameDims d{8, 8, 2};
  SceneSpec s;
  s.dims = d;
  s.background = {1.0, 0.05, 0.02};
  s.objects = {{3, 3, 2, 2, 2.0, 0.4, 1, 0}};
  const auto scene = synth_scene(s);
  const auto psi = add_noise(apply_sampling(SamplingOperator::decimation(d, 2), scene.depth), 25.0, 5);

  PatchGeometry g;
  g.patch_side = 2;
  g.stride = 2;
  g.group_size = 3;
  const auto table = build_groups(scene.intensity, g, 1);
  const double lambda = 0.1;

  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.nu = 1.0;
  cfg.geometry = g;
  cfg.max_iter = 20000;
  cfg.tol = 1e-10;
  const auto res = solve_admm(psi, table, cfg);

  const oracle::ConvexProblem prob(psi, table, lambda);
  const double best = prob.objective(prob.solve(20000));
  const double got = objective_nuclear(res.phi, psi, table, lambda);
  CHECK(got <= best * 1.01);
  CHECK(got >= best * (1.0 - 1e-3));
  CHECK(res.report.trace.back().primal_residual <= 1e-3);
}

TEST_CASE("LINEAR returns the initializer bit-exactly") {
  const auto scene = small_scene();
  const auto psi = apply_sampling(SamplingOperator::decimation(scene.depth.dims(), 3), scene.depth);
  SolverConfig cfg;
  cfg.algo = Algorithm::Linear;
  const auto res = run_pipeline(psi, scene.intensity, cfg);
  CHECK(res.phi == linear_interpolate(psi, scene.depth.dims()));
  CHECK(res.report.stop_reason == StopReason::NotIterative);
  CHECK(res.report.iterations == 0);
  CHECK(run_pipeline(psi, cfg).phi == res.phi);
}

TEST_CASE("intensity-guided algorithms require a guide") {
  const auto scene = small_scene();
  const auto psi = apply_sampling(SamplingOperator::decimation(scene.depth.dims(), 2), scene.depth);
  for (auto a : {Algorithm::Gds3d, Algorithm::Gds2d, Algorithm::Admm3d})
    CHECK_THROWS_AS(run_pipeline(psi, small_config(a)), std::invalid_argument);
  auto cfg = small_config(Algorithm::Ds3d);
  cfg.max_iter = 3;
  CHECK_NOTHROW(run_pipeline(psi, cfg));
}

TEST_CASE("config normalization and validation") {
  SolverConfig c;
  c.algo = Algorithm::Gds2d;
  CHECK(c.normalized().geometry.window.wt == 1);
  c.algo = Algorithm::Ds3d;
  CHECK(c.normalized().guide_mode == GuideMode::SelfDepth);
  CHECK(c.normalized().geometry.window.wt == 3);
  c.algo = Algorithm::Gds3d;
  CHECK(c.normalized().guide_mode == GuideMode::Intensity);
  c.rho = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.rho = 1.0;
  c.nu = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.nu = 0.02;
  c.lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_algorithm("admm3d") == Algorithm::Admm3d);
  CHECK(to_string(Algorithm::Gds2d) == "gds2d");
  CHECK_THROWS_AS(parse_algorithm("bm3d"), std::invalid_argument);
}

TEST_CASE("solvers on a noisy moving square") {
  const auto scene = small_scene();
  const FrameDims d = scene.depth.dims();
  const auto clean = apply_sampling(SamplingOperator::decimation(d, 3), scene.depth);
  const auto psi = add_noise(clean, 30.0, 7);
  const double sigma = implied_noise_sigma(clean, 30.0);

  auto gds = small_config(Algorithm::Gds3d);
  gds.lambda = lambda_for_level(sigma, gds);
  const auto r3 = run_pipeline(psi, scene.intensity, gds);
  auto lin = small_config(Algorithm::Linear);
  const double s_lin = snr_db(scene.depth.values(), run_pipeline(psi, scene.intensity, lin).phi.values());
  const double s_gds = snr_db(scene.depth.values(), r3.phi.values());
  CHECK(s_gds >= s_lin + 2.0);

  SUBCASE("worker count does not change the result") {
    auto one = gds;
    one.workers = 1;
    one.max_iter = 10;
    auto four = one;
    four.workers = 4;
    CHECK(run_pipeline(psi, scene.intensity, one).phi == run_pipeline(psi, scene.intensity, four).phi);
    one.algo = four.algo = Algorithm::Admm3d;
    CHECK(run_pipeline(psi, scene.intensity, one).phi == run_pipeline(psi, scene.intensity, four).phi);
  }
  SUBCASE("trace is consistent with the report") {
    CHECK(r3.report.iterations == r3.report.trace.size());
    CHECK(r3.report.iterations <= gds.max_iter);
    if (r3.report.stop_reason == StopReason::Tolerance)
      CHECK(r3.report.trace.back().rel_change <= gds.tol);
    for (const auto& rec : r3.report.trace) CHECK(std::isfinite(rec.rel_change));
  }
}

TEST_CASE("measured voxels stay consistent with noise-free data") {
  const auto scene = small_scene();
  const auto psi = apply_sampling(SamplingOperator::decimation(scene.depth.dims(), 2), scene.depth);
  for (auto a : {Algorithm::Gds3d, Algorithm::Admm3d}) {
    auto cfg = small_config(a);
    const auto table = build_groups(scene.intensity, cfg.geometry, 1);
    double sigma1 = 0.0;
    for (const auto& b : extract_all(initial_estimate(psi), table))
      sigma1 = std::max(sigma1, Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()[0]);
    // shrinkage threshold lambda^(1 / (2 - nu)) at 1e-6 * sigma1.
    cfg.lambda = std::pow(1e-6 * sigma1, 2.0 - cfg.nu);
    const auto res = run_pipeline(psi, scene.intensity, cfg);
    const auto fit = apply_sampling(psi.op, res.phi);
    CHECK(max_abs_diff(fit.values, psi.values) <= 1e-4);
    CHECK(res.report.stop_reason == StopReason::Tolerance);
  }
}

TEST_CASE("select_lambda") {
  const auto scene = small_scene();
  const auto clean = apply_sampling(SamplingOperator::decimation(scene.depth.dims(), 3), scene.depth);
  const auto psi = add_noise(clean, 30.0, 3);
  auto cfg = small_config(Algorithm::Gds3d);
  cfg.max_iter = 15;

  SUBCASE("single candidate") {
    const auto sel = select_lambda(psi, &scene.intensity, cfg, {0.5}, scene.depth);
    CHECK(sel.lambda == 0.5);
    REQUIRE(sel.snr_db.size() == 1);
    auto c = cfg;
    c.lambda = 0.5;
    CHECK(sel.result.phi == run_pipeline(psi, scene.intensity, c).phi);
  }
  SUBCASE("argmax over candidates") {
    const double mid = lambda_for_level(implied_noise_sigma(clean, 30.0), cfg);
    const auto sel = select_lambda(psi, &scene.intensity, cfg, {0.0, mid, 1e6}, scene.depth);
    REQUIRE(sel.snr_db.size() == 3);
    const double best = std::max({sel.snr_db[0], sel.snr_db[1], sel.snr_db[2]});
    CHECK(snr_db(scene.depth.values(), sel.result.phi.values()) == best);
    CHECK(sel.lambda == mid);
  }
  SUBCASE("ties go to the smaller lambda") {
    const auto sel = select_lambda(psi, &scene.intensity, cfg, {0.2, 0.1, 0.2}, scene.depth);
    auto lin = cfg;
    lin.algo = Algorithm::Linear;
    const auto flat = select_lambda(psi, &scene.intensity, lin, {0.3, 0.1, 0.2}, scene.depth);
    CHECK(flat.lambda == 0.1);
    CHECK(sel.snr_db[0] == sel.snr_db[2]);
  }
  CHECK_THROWS_AS(select_lambda(psi, &scene.intensity, cfg, {}, scene.depth), std::invalid_argument);
}

TEST_CASE("default lambda grid") {
  SolverConfig cfg;
  cfg.nu = 0.0;
  const double level = 0.1 * (5.0 + std::sqrt(10.0));
  CHECK(lambda_for_level(0.1, cfg) == doctest::Approx(level * level).epsilon(1e-14));
  cfg.nu = 1.0;
  CHECK(lambda_for_level(0.1, cfg) == doctest::Approx(level).epsilon(1e-14));
  const auto grid = default_lambda_grid(0.1, cfg, {0.5, 2.0});
  REQUIRE(grid.size() == 2);
  CHECK(grid[0] == doctest::Approx(0.5 * level));
  CHECK(grid[1] == doctest::Approx(2.0 * level));
  CHECK(default_lambda_grid(0.0, cfg).front() == 0.0);
  CHECK_THROWS_AS(lambda_for_level(-1.0, cfg), std::invalid_argument);
}
