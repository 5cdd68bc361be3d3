#include "dsr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "dsr/volume_io.hpp"

namespace dsr {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void ExperimentGrid::validate() const {
  if (factors.empty()) throw std::invalid_argument("bench: no downsizing factors");
  for (auto f : factors)
    if (f < 1) throw std::invalid_argument("bench: factors must be >= 1");
  if (algorithms.empty()) throw std::invalid_argument("bench: no algorithms");
  if (lambdas.empty() && lambda_scale.empty())
    throw std::invalid_argument("bench: no lambda candidates");
  const bool iterative = std::any_of(algorithms.begin(), algorithms.end(),
                                     [](Algorithm a) { return a != Algorithm::Linear; });
  if (iterative && lambdas.empty() && !std::isfinite(input_snr_db))
    throw std::invalid_argument("bench: noise-free runs need explicit lambda candidates");
}

std::string format_db(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {

double snr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kNoNoise;
    throw std::invalid_argument("input_snr_db must be a number or \"inf\"");
  }
  if (j.is_null()) return kNoNoise;
  return j.get<double>();
}

json snr_to_json(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

SolverConfig solver_from_json(const json& j) {
  SolverConfig c;
  c.rho = j.value("rho", c.rho);
  c.nu = j.value("nu", c.nu);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.tol = j.value("tol", c.tol);
  c.geometry.patch_side = j.value("patch", c.geometry.patch_side);
  c.geometry.stride = j.value("stride", c.geometry.stride);
  c.geometry.group_size = j.value("group_size", c.geometry.group_size);
  if (j.contains("window")) {
    const auto w = j.at("window").get<std::vector<std::size_t>>();
    if (w.size() != 3) throw std::invalid_argument("window needs [wx, wy, wt]");
    c.geometry.window = {w[0], w[1], w[2]};
  }
  c.workers = j.value("workers", c.workers);
  return c;
}

ordered_json solver_to_json(const SolverConfig& c) {
  ordered_json j;
  j["rho"] = c.rho;
  j["nu"] = c.nu;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["patch"] = c.geometry.patch_side;
  j["stride"] = c.geometry.stride;
  j["window"] = {c.geometry.window.wx, c.geometry.window.wy, c.geometry.window.wt};
  j["group_size"] = c.geometry.group_size;
  return j;
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s = default_scene_spec(j.value("seed", std::uint64_t{0}));
  s.dims.width = j.value("width", s.dims.width);
  s.dims.height = j.value("height", s.dims.height);
  s.dims.frames = j.value("frames", s.dims.frames);
  s.texture = j.value("texture", s.texture);
  s.background_intensity = j.value("background_intensity", s.background_intensity);
  if (j.contains("background")) {
    const auto& b = j.at("background");
    s.background.offset = b.value("offset", s.background.offset);
    s.background.slope_x = b.value("slope_x", s.background.slope_x);
    s.background.slope_y = b.value("slope_y", s.background.slope_y);
  }
  if (j.contains("objects")) {
    const auto& objs = j.at("objects");
    if (objs.is_string()) {
      s.objects = parse_objects(objs.get<std::string>());
    } else {
      s.objects.clear();
      for (const auto& o : objs)
        s.objects.push_back(SceneObject{o.at("w"), o.at("h"), o.at("x"), o.at("y"),
                                        o.at("depth"), o.value("contrast", 0.3), o.value("vx", 0L),
                                        o.value("vy", 0L)});
    }
  }
  return s;
}

ordered_json scene_to_json(const SceneSpec& s) {
  ordered_json j;
  j["width"] = s.dims.width;
  j["height"] = s.dims.height;
  j["frames"] = s.dims.frames;
  j["seed"] = s.seed;
  j["texture"] = s.texture;
  j["background_intensity"] = s.background_intensity;
  j["background"] = {{"offset", s.background.offset},
                     {"slope_x", s.background.slope_x},
                     {"slope_y", s.background.slope_y}};
  ordered_json objs = ordered_json::array();
  for (const auto& o : s.objects)
    objs.push_back({{"w", o.width}, {"h", o.height}, {"x", o.x}, {"y", o.y}, {"depth", o.depth},
                    {"contrast", o.contrast}, {"vx", o.vx}, {"vy", o.vy}});
  j["objects"] = objs;
  return j;
}

std::string cell_name(const BenchCell& c) {
  return std::string(to_string(c.algo)) + "_" + std::to_string(c.factor);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

BenchConfig parse_bench_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bench config: ") + e.what());
  }
  BenchConfig cfg;
  try {
    auto& g = cfg.grid;
    if (j.contains("factors")) g.factors = j.at("factors").get<std::vector<std::size_t>>();
    if (j.contains("input_snr_db")) g.input_snr_db = snr_from_json(j.at("input_snr_db"));
    if (j.contains("algorithms")) {
      g.algorithms.clear();
      for (const auto& a : j.at("algorithms")) g.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("lambda")) g.lambdas = j.at("lambda").get<std::vector<double>>();
    if (j.contains("lambda_scale")) g.lambda_scale = j.at("lambda_scale").get<std::vector<double>>();
    g.noise_seed = j.value("noise_seed", std::uint64_t{0});
    g.solver = solver_from_json(j.value("solver", json::object()));
    if (j.contains("workers")) g.solver.workers = j.at("workers").get<unsigned>();

    if (j.contains("depth") || j.contains("guide")) {
      cfg.depth_path = base_dir / j.at("depth").get<std::string>();
      cfg.guide_path = base_dir / j.at("guide").get<std::string>();
    } else {
      cfg.scene = scene_from_json(j.value("scene", json::object()));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bench config: ") + e.what());
  }
  cfg.grid.validate();
  return cfg;
}

BenchConfig load_bench_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_bench_config(text, path.parent_path());
}

BenchResult run_bench(const BenchConfig& cfg, const fs::path& out_dir) {
  const auto& grid = cfg.grid;
  grid.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  DepthVolume depth;
  IntensityVolume guide;
  if (cfg.scene) {
    Scene scene = synth_scene(*cfg.scene);
    depth = std::move(scene.depth);
    guide = std::move(scene.intensity);
  } else {
    depth = read_volume(cfg.depth_path);
    guide = read_intensity(cfg.guide_path);
    if (guide.dims() != depth.dims()) throw DataError("bench: guide and depth dimensions differ");
  }

  BenchResult result;
  // factor-major execution; cells are stored algorithm-major for the table.
  std::vector<std::vector<BenchCell>> by_algo(grid.algorithms.size());
  for (std::size_t f : grid.factors) {
    const auto op = SamplingOperator::decimation(depth.dims(), f);
    const Measurements clean = apply_sampling(op, depth);
    const Measurements psi = add_noise(clean, grid.input_snr_db, grid.noise_seed);
    std::vector<double> candidates = grid.lambdas;
    if (candidates.empty()) {
      const double sigma = implied_noise_sigma(clean, grid.input_snr_db);
      candidates = default_lambda_grid(sigma, grid.solver, grid.lambda_scale);
    }

    for (std::size_t a = 0; a < grid.algorithms.size(); ++a) {
      BenchCell cell;
      cell.algo = grid.algorithms[a];
      cell.factor = f;
      try {
        SolverConfig sc = grid.solver;
        sc.algo = cell.algo;
        SolveResult res;
        if (cell.algo == Algorithm::Linear) {
          res = run_pipeline(psi, guide, sc);
        } else {
          auto sel = select_lambda(psi, &guide, sc, candidates, depth);
          cell.lambda = sel.lambda;
          res = std::move(sel.result);
        }
        cell.iterations = res.report.iterations;
        cell.snr_db = snr_db(depth.values(), res.phi.values());
        cell.frame_snr_db = frame_snr_db(depth, res.phi);
        write_volume(res.phi, out_dir / ("recon_" + cell_name(cell) + ".dsrv"));
      } catch (const std::exception& e) {
        cell.snr_db = std::numeric_limits<double>::quiet_NaN();
        cell.frame_snr_db.clear();
        cell.error = e.what();
      }
      by_algo[a].push_back(std::move(cell));
    }
  }

  std::string table = "algo";
  for (auto f : grid.factors) table += "," + std::to_string(f) + "x";
  table += "\n";
  for (std::size_t a = 0; a < by_algo.size(); ++a) {
    table += std::string(to_string(grid.algorithms[a]));
    for (const auto& cell : by_algo[a]) table += "," + format_db(cell.snr_db);
    table += "\n";
    for (const auto& cell : by_algo[a]) {
      std::string frames = "frame,snr_db\n";
      for (std::size_t t = 0; t < cell.frame_snr_db.size(); ++t)
        frames += std::to_string(t) + "," + format_db(cell.frame_snr_db[t], 4) + "\n";
      write_text(out_dir / ("frames_" + cell_name(cell) + ".csv"), frames);
      result.cells.push_back(cell);
    }
  }
  write_text(out_dir / "table.csv", table);

  ordered_json run;
  if (cfg.scene) {
    run["scene"] = scene_to_json(*cfg.scene);
  } else {
    run["depth"] = cfg.depth_path.string();
    run["guide"] = cfg.guide_path.string();
  }
  run["factors"] = grid.factors;
  run["input_snr_db"] = snr_to_json(grid.input_snr_db);
  run["noise_seed"] = grid.noise_seed;
  ordered_json algos = ordered_json::array();
  for (auto a : grid.algorithms) algos.push_back(std::string(to_string(a)));
  run["algorithms"] = algos;
  run["lambda"] = grid.lambdas;
  run["lambda_scale"] = grid.lambda_scale;
  run["solver"] = solver_to_json(grid.solver);
  ordered_json cells = ordered_json::array();
  for (const auto& c : result.cells) {
    ordered_json jc;
    jc["algo"] = std::string(to_string(c.algo));
    jc["factor"] = c.factor;
    jc["snr_db"] = format_db(c.snr_db);
    jc["lambda"] = c.lambda;
    jc["iterations"] = c.iterations;
    if (!c.error.empty()) jc["error"] = c.error;
    cells.push_back(jc);
  }
  run["cells"] = cells;
  write_text(out_dir / "run.json", run.dump(2) + "\n");
  return result;
}

}  // namespace dsr
