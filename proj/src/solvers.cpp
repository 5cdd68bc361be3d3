#include "dsr/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dsr/parallel.hpp"
#include "dsr/shrinkage.hpp"

namespace dsr {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Linear: return "linear";
    case Algorithm::Gds2d: return "gds2d";
    case Algorithm::Ds3d: return "ds3d";
    case Algorithm::Admm3d: return "admm3d";
    case Algorithm::Gds3d: return "gds3d";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::Linear, Algorithm::Gds2d, Algorithm::Ds3d, Algorithm::Admm3d,
                 Algorithm::Gds3d})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

SolverConfig SolverConfig::normalized() const {
  SolverConfig out = *this;
  if (algo == Algorithm::Gds2d) out.geometry.window.wt = 1;
  out.guide_mode = algo == Algorithm::Ds3d ? GuideMode::SelfDepth : GuideMode::Intensity;
  return out;
}

void SolverConfig::validate() const {
  if (algo == Algorithm::Linear) return;
  // lambda = 0 is allowed here and means no regularization.
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("nu must lie in [0, 1]");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be non-negative");
}

double relative_change(std::span<const double> prev, std::span<const double> cur) {
  if (prev.size() != cur.size()) throw DimensionError("relative_change: length mismatch");
  double diff = 0.0;
  double base = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double d = cur[i] - prev[i];
    diff += d * d;
    base += prev[i] * prev[i];
  }
  if (base == 0.0) throw DataError("relative_change: zero previous iterate");
  return std::sqrt(diff / base);
}

bool stop_check(std::span<const double> prev, std::span<const double> cur, double tol) {
  return relative_change(prev, cur) <= tol;
}

double objective_nuclear(const DepthVolume& phi, const Measurements& psi,
                         const PatchGroupTable& table, double lambda, unsigned workers) {
  const auto fit = apply_sampling(psi.op, phi);
  double data = 0.0;
  for (std::size_t k = 0; k < fit.values.size(); ++k) {
    const double d = psi.values[k] - fit.values[k];
    data += d * d;
  }
  if (lambda == 0.0) return 0.5 * data;
  const auto blocks = extract_all(phi, table, workers);
  std::vector<double> norms(blocks.size());
  parallel_for(blocks.size(), workers, [&](std::size_t p) { norms[p] = nuclear_norm(blocks[p]); });
  double reg = 0.0;
  for (double v : norms) reg += v;
  return 0.5 * data + lambda * reg;
}

namespace {

using Clock = std::chrono::steady_clock;

void check_inputs(const Measurements& psi, const PatchGroupTable& table, const DepthVolume& init) {
  if (psi.values.size() != psi.op.measurement_count())
    throw DimensionError("measurement count does not match operator");
  if (table.dims != psi.op.dims() || init.dims() != psi.op.dims())
    throw DimensionError("group table, initialization and operator dimensions differ");
}

double block_residual(const std::vector<Block>& a, const std::vector<Block>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    num += (a[p] - b[p]).squaredNorm();
    den += b[p].squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Shared loop bookkeeping: trace, stopping rule, timing.
class IterationLog {
 public:
  explicit IterationLog(const SolverConfig& cfg) : cfg_(cfg), start_(Clock::now()) {}

  // Returns true when the iteration should stop.
  bool record(std::span<const double> prev, std::span<const double> cur, double primal,
              const DepthVolume& phi, const Measurements& psi, const PatchGroupTable& table) {
    IterationRecord rec;
    rec.rel_change = relative_change(prev, cur);
    rec.primal_residual = primal;
    rec.objective = cfg_.trace_objective
                        ? objective_nuclear(phi, psi, table, cfg_.lambda, cfg_.workers)
                        : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(rec.rel_change)) throw NumericError("iterate diverged");
    report_.trace.push_back(rec);
    report_.iterations = report_.trace.size();
    // The first step from a data-consistent start can leave phi unchanged
    // (ADMM with beta = B phi), so the rule applies from the second step on.
    if (report_.iterations >= 2 && rec.rel_change <= cfg_.tol) {
      report_.stop_reason = StopReason::Tolerance;
      return true;
    }
    report_.stop_reason = StopReason::MaxIter;
    return false;
  }

  SolveReport finish() {
    report_.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
    return report_;
  }

 private:
  const SolverConfig& cfg_;
  Clock::time_point start_;
  SolveReport report_;
};

}  // namespace

AdmmPhiStep::AdmmPhiStep(const Measurements& psi, const PatchGroupTable& table, double rho)
    : table_(table), rho_(rho), hty_(adjoint_sampling(psi.op, psi)) {
  if (table.dims != psi.op.dims()) throw DimensionError("group table and operator dimensions differ");
  const auto h = occupancy(psi.op);
  const auto r = compute_counts(table);
  inv_diag_.resize(h.size());
  for (std::size_t n = 0; n < h.size(); ++n) inv_diag_[n] = 1.0 / (h[n] + rho * r[n]);
}

DepthVolume AdmmPhiStep::operator()(const std::vector<Block>& beta,
                                    const std::vector<Block>& dual) const {
  if (beta.size() != table_.groups.size() || dual.size() != beta.size())
    throw DimensionError("ADMM state does not match the group table");
  std::vector<Block> z(beta.size());
  for (std::size_t p = 0; p < beta.size(); ++p) z[p] = beta[p] + dual[p] / rho_;
  const auto btz = adjoint_sum(table_, z);
  DepthVolume phi(table_.dims);
  for (std::size_t n = 0; n < phi.size(); ++n) phi[n] = (hty_[n] + rho_ * btz[n]) * inv_diag_[n];
  return phi;
}

SolveResult solve_admm(const Measurements& psi, const PatchGroupTable& table,
                       const SolverConfig& cfg, const DepthVolume& init) {
  cfg.validate();
  check_inputs(psi, table, init);
  const std::size_t P = table.groups.size();
  const double rho = cfg.rho;
  const double prox_weight = cfg.lambda / rho;
  const AdmmPhiStep phi_step(psi, table, rho);

  DepthVolume phi = init;
  std::vector<Block> beta = extract_all(phi, table, cfg.workers);
  std::vector<Block> dual(P);
  for (std::size_t p = 0; p < P; ++p) dual[p] = Block::Zero(beta[p].rows(), beta[p].cols());

  IterationLog log(cfg);
  std::vector<double> prev;
  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    prev.assign(phi.values().begin(), phi.values().end());
    phi = phi_step(beta, dual);

    // beta-step: block-wise prox at B phi - s / rho.
    const auto bphi = extract_all(phi, table, cfg.workers);
    parallel_for(P, cfg.workers, [&](std::size_t p) {
      beta[p] = prox_g(bphi[p] - dual[p] / rho, prox_weight, cfg.nu);
    });

    // dual ascent on beta = B phi.
    for (std::size_t p = 0; p < P; ++p) dual[p] += rho * (beta[p] - bphi[p]);

    if (log.record(prev, phi.values(), block_residual(beta, bphi), phi, psi, table)) break;
  }
  return {std::move(phi), log.finish()};
}

SolveResult solve_admm(const Measurements& psi, const PatchGroupTable& table,
                       const SolverConfig& cfg) {
  return solve_admm(psi, table, cfg, initial_estimate(psi));
}

SolveResult solve_simplified(const Measurements& psi, const PatchGroupTable& table,
                             const SolverConfig& cfg, const DepthVolume& init) {
  cfg.validate();
  check_inputs(psi, table, init);
  const std::size_t P = table.groups.size();
  const double rho = cfg.rho;

  const auto h = occupancy(psi.op);
  const auto counts = compute_counts(table);
  const auto hty = adjoint_sampling(psi.op, psi);

  DepthVolume phi = init;
  std::vector<Block> beta(P);
  IterationLog log(cfg);
  std::vector<double> prev;
  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    prev.assign(phi.values().begin(), phi.values().end());

    const auto bphi = extract_all(phi, table, cfg.workers);
    parallel_for(P, cfg.workers,
                 [&](std::size_t p) { beta[p] = prox_g(bphi[p], cfg.lambda, cfg.nu); });
    const auto averaged = aggregate_average(table, beta, counts);
    for (std::size_t n = 0; n < phi.size(); ++n)
      phi[n] = (hty[n] + rho * averaged[n]) / (h[n] + rho);

    if (log.record(prev, phi.values(), 0.0, phi, psi, table)) break;
  }
  return {std::move(phi), log.finish()};
}

SolveResult solve_simplified(const Measurements& psi, const PatchGroupTable& table,
                             const SolverConfig& cfg) {
  return solve_simplified(psi, table, cfg, initial_estimate(psi));
}

namespace {

SolveResult dispatch(const Measurements& psi, const IntensityVolume* guide,
                     const SolverConfig& raw) {
  const SolverConfig cfg = raw.normalized();
  cfg.validate();
  const auto start = Clock::now();
  DepthVolume init = initial_estimate(psi);
  if (cfg.algo == Algorithm::Linear) {
    SolveResult out{std::move(init), {}};
    out.report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
  }

  PatchGroupTable table;
  if (cfg.guide_mode == GuideMode::SelfDepth) {
    table = build_groups(init, cfg.geometry, cfg.workers);
  } else {
    if (guide == nullptr)
      throw std::invalid_argument(std::string(to_string(cfg.algo)) + " requires an intensity guide");
    if (guide->dims() != psi.op.dims()) throw DimensionError("guide dimensions do not match depth");
    table = build_groups(*guide, cfg.geometry, cfg.workers);
  }

  SolveResult out = cfg.algo == Algorithm::Admm3d ? solve_admm(psi, table, cfg, init)
                                                  : solve_simplified(psi, table, cfg, init);
  out.report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

}  // namespace

SolveResult run_pipeline(const Measurements& psi, const IntensityVolume& guide,
                         const SolverConfig& cfg) {
  return dispatch(psi, &guide, cfg);
}

SolveResult run_pipeline(const Measurements& psi, const SolverConfig& cfg) {
  return dispatch(psi, nullptr, cfg);
}

LambdaSelection select_lambda(const Measurements& psi, const IntensityVolume* guide,
                              const SolverConfig& cfg, const std::vector<double>& candidates,
                              const DepthVolume& ref) {
  if (candidates.empty()) throw std::invalid_argument("select_lambda: no candidates");
  LambdaSelection best;
  double best_snr = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (double lambda : candidates) {
    SolverConfig c = cfg;
    c.lambda = lambda;
    SolveResult res = dispatch(psi, guide, c);
    const double s = snr_db(ref.values(), res.phi.values());
    best.snr_db.push_back(s);
    const bool better = !have || s > best_snr || (s == best_snr && lambda < best.lambda);
    if (better) {
      have = true;
      best_snr = s;
      best.lambda = lambda;
      best.result = std::move(res);
    }
  }
  return best;
}

double lambda_for_level(double noise_sigma, const SolverConfig& cfg) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("noise sigma must be finite and >= 0");
  const auto& g = cfg.geometry;
  const double level = noise_sigma * (std::sqrt(static_cast<double>(g.patch_pixels())) +
                                      std::sqrt(static_cast<double>(g.group_size)));
  return std::pow(level, 2.0 - cfg.nu);
}

std::vector<double> default_lambda_grid(double noise_sigma, const SolverConfig& cfg,
                                        const std::vector<double>& scales) {
  const double base = lambda_for_level(noise_sigma, cfg);
  std::vector<double> grid;
  for (double s : scales) {
    if (!(s >= 0.0)) throw std::invalid_argument("lambda scales must be >= 0");
    grid.push_back(s * base);
  }
  return grid;
}

}  // namespace dsr
