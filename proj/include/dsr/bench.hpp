#ifndef DSR_BENCH_HPP
#define DSR_BENCH_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsr/scene.hpp"
#include "dsr/solvers.hpp"

namespace dsr {

struct ExperimentGrid {
  std::vector<std::size_t> factors{2, 3, 4, 5};
  double input_snr_db = 30.0;  // kNoNoise disables noise
  std::vector<Algorithm> algorithms{Algorithm::Linear, Algorithm::Gds2d, Algorithm::Ds3d,
                                    Algorithm::Admm3d, Algorithm::Gds3d};
  // Absolute lambda candidates; when empty, default_lambda_grid with
  // lambda_scale at the noise sigma implied by the input SNR.
  std::vector<double> lambdas;
  std::vector<double> lambda_scale{0.25, 0.5, 1.0, 2.0, 4.0};
  std::uint64_t noise_seed = 0;
  SolverConfig solver;

  void validate() const;
};

struct BenchConfig {
  ExperimentGrid grid;
  // Either a synthetic scene or a pair of DSRV files.
  std::optional<SceneSpec> scene;
  std::filesystem::path depth_path;
  std::filesystem::path guide_path;
};

// JSON config; relative file paths resolve against base_dir.
BenchConfig parse_bench_config(const std::string& json_text, const std::filesystem::path& base_dir);
BenchConfig load_bench_config(const std::filesystem::path& path);

struct BenchCell {
  Algorithm algo = Algorithm::Linear;
  std::size_t factor = 0;
  double snr_db = 0.0;  // NaN when the cell failed
  double lambda = 0.0;
  std::size_t iterations = 0;
  std::vector<double> frame_snr_db;
  std::string error;
};

struct BenchResult {
  std::vector<BenchCell> cells;  // algorithm-major, in grid order
};

// Runs the grid and writes table.csv, frames_<algo>_<factor>.csv,
// recon_<algo>_<factor>.dsrv and run.json into out_dir.
BenchResult run_bench(const BenchConfig& cfg, const std::filesystem::path& out_dir);

// "%.2f" for finite values, "inf"/"-inf"/"nan" otherwise.
std::string format_db(double v, int decimals = 2);

}  // namespace dsr

#endif  // DSR_BENCH_HPP
