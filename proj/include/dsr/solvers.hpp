#ifndef DSR_SOLVERS_HPP
#define DSR_SOLVERS_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsr/patch_match.hpp"
#include "dsr/sampling.hpp"

namespace dsr {

enum class Algorithm { Linear, Gds2d, Ds3d, Admm3d, Gds3d };
enum class GuideMode { Intensity, SelfDepth };

std::string_view to_string(Algorithm algo);
// Accepts the CLI spellings: linear, gds2d, ds3d, admm3d, gds3d.
Algorithm parse_algorithm(std::string_view name);

struct SolverConfig {
  Algorithm algo = Algorithm::Gds3d;
  double lambda = 1.0;
  double rho = 1.0;
  double nu = 0.02;
  std::size_t max_iter = 100;
  double tol = 1e-4;
  PatchGeometry geometry;
  GuideMode guide_mode = GuideMode::Intensity;
  unsigned workers = 0;
  // Record the nuclear-norm objective each iteration (costs one extra SVD
  // sweep per iteration; only meaningful for nu = 1).
  bool trace_objective = false;

  // Applies the per-algorithm rules: GDS-2D matches frame by frame,
  // DS-3D matches on the depth initialization, the rest on intensity.
  SolverConfig normalized() const;
  void validate() const;
};

struct IterationRecord {
  double rel_change = 0.0;
  double primal_residual = 0.0;  // ADMM only, 0 otherwise
  double objective = 0.0;        // NaN unless trace_objective
};

enum class StopReason { Tolerance, MaxIter, NotIterative };

struct SolveReport {
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::NotIterative;
  std::vector<IterationRecord> trace;
  double wall_time = 0.0;
};

struct SolveResult {
  DepthVolume phi;
  SolveReport report;
};

double relative_change(std::span<const double> prev, std::span<const double> cur);

// |cur - prev| / |prev| <= tol. Throws DataError on a zero previous iterate.
bool stop_check(std::span<const double> prev, std::span<const double> cur, double tol);

// 1/2 |psi - H phi|^2 + lambda * sum_p |B_p phi|_*.
double objective_nuclear(const DepthVolume& phi, const Measurements& psi,
                         const PatchGroupTable& table, double lambda, unsigned workers = 0);

// The ADMM phi-update: solves the diagonal system
// (H^T H + rho R) phi = H^T psi + rho B^T (beta + dual / rho).
class AdmmPhiStep {
 public:
  AdmmPhiStep(const Measurements& psi, const PatchGroupTable& table, double rho);
  DepthVolume operator()(const std::vector<Block>& beta, const std::vector<Block>& dual) const;

 private:
  const PatchGroupTable& table_;
  double rho_;
  DepthVolume hty_;
  std::vector<double> inv_diag_;
};

// ADMM on the augmented Lagrangian with splitting beta = B phi.
SolveResult solve_admm(const Measurements& psi, const PatchGroupTable& table,
                       const SolverConfig& cfg, const DepthVolume& init);
SolveResult solve_admm(const Measurements& psi, const PatchGroupTable& table,
                       const SolverConfig& cfg);

// Decoupled variant: block-wise prox, aggregate, then a per-voxel data step.
SolveResult solve_simplified(const Measurements& psi, const PatchGroupTable& table,
                             const SolverConfig& cfg, const DepthVolume& init);
SolveResult solve_simplified(const Measurements& psi, const PatchGroupTable& table,
                             const SolverConfig& cfg);

// Initialization, block matching and solver dispatch for one configuration.
// The guide is required by every algorithm that matches on intensity.
SolveResult run_pipeline(const Measurements& psi, const IntensityVolume& guide,
                         const SolverConfig& cfg);
SolveResult run_pipeline(const Measurements& psi, const SolverConfig& cfg);

struct LambdaSelection {
  double lambda = 0.0;
  SolveResult result;
  std::vector<double> snr_db;  // one per candidate
};

// Oracle grid search: best snr_db against ref, ties to the smaller lambda.
LambdaSelection select_lambda(const Measurements& psi, const IntensityVolume* guide,
                              const SolverConfig& cfg, const std::vector<double>& candidates,
                              const DepthVolume& ref);

// Noise level of a group's singular values: sigma * (sqrt(patch pixels) + sqrt(L)).
// lambda = level^(2 - nu) puts the shrinkage knee at that level.
double lambda_for_level(double noise_sigma, const SolverConfig& cfg);

// scales * lambda_for_level(sigma, cfg); default scales are octaves around 1.
std::vector<double> default_lambda_grid(double noise_sigma, const SolverConfig& cfg,
                                        const std::vector<double>& scales = {0.25, 0.5, 1.0,
                                                                             2.0, 4.0});

}  // namespace dsr

#endif  // DSR_SOLVERS_HPP
