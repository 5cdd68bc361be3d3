#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsr/bench.hpp"
#include "dsr/error.hpp"
#include "dsr/scene.hpp"
#include "dsr/solvers.hpp"
#include "dsr/volume_io.hpp"

namespace fs = std::filesystem;
using namespace dsr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

SearchWindow parse_window(const std::string& text) {
  SearchWindow w;
  char x1 = 0, x2 = 0;
  std::istringstream is(text);
  if (!(is >> w.wx >> x1 >> w.wy >> x2 >> w.wt) || x1 != 'x' || x2 != 'x' || !is.eof())
    throw UsageError("--window expects WxWxT, got '" + text + "'");
  return w;
}

struct SimulateArgs {
  fs::path out;
  std::size_t w = 64, h = 64, t = 16;
  std::uint64_t seed = 0;
  std::string objects;
  bool has_objects = false;
};

void cmd_simulate(const SimulateArgs& a) {
  SceneSpec spec = default_scene_spec(a.seed);
  spec.dims = {a.w, a.h, a.t};
  if (a.has_objects) spec.objects = parse_objects(a.objects);
  const Scene scene = synth_scene(spec);
  ensure_dir(a.out);
  write_volume(scene.depth, a.out / "depth.dsrv");
  write_volume(scene.intensity, a.out / "intensity.dsrv");
  std::cout << "wrote " << (a.out / "depth.dsrv").string() << " and "
            << (a.out / "intensity.dsrv").string() << "\n";
}

struct DegradeArgs {
  fs::path depth, out;
  std::size_t factor = 2;
  double snr = 30.0;
  std::uint64_t seed = 0;
};

void cmd_degrade(const DegradeArgs& a) {
  const DepthVolume depth = read_volume(a.depth);
  const auto op = SamplingOperator::decimation(depth.dims(), a.factor);
  const Measurements m = add_noise(apply_sampling(op, depth), a.snr, a.seed);
  write_measurements(a.out, m, {a.snr, a.seed});
  std::cout << m.values.size() << " measurements written to " << a.out.string() << "\n";
}

struct SparseArgs {
  fs::path depth, out;
  double rate = 0.0394, split = 0.5;
  std::uint64_t seed = 0;
};

void cmd_sparse(const SparseArgs& a) {
  const DepthVolume depth = read_volume(a.depth);
  const SparseSplit s = sparse_split(depth, a.rate, a.split, a.seed);
  write_measurements(a.out / "reconstruction", s.reconstruction, {kNoNoise, a.seed});
  write_measurements(a.out / "validation", s.validation, {kNoNoise, a.seed});
  std::cout << s.reconstruction.values.size() << " reconstruction, " << s.validation.values.size()
            << " validation measurements\n";
}

struct SolveArgs {
  std::string algo = "gds3d";
  fs::path meas, guide, ref, out;
  std::vector<double> lambdas{1.0};
  double rho = 1.0, nu = 0.02, tol = 1e-4;
  std::size_t patch = 5, stride = 3, group_size = 10, max_iter = 100;
  std::string window = "11x11x3";
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

nlohmann::ordered_json report_json(const SolveReport& r) {
  nlohmann::ordered_json j;
  j["iterations"] = r.iterations;
  j["stop_reason"] = r.stop_reason == StopReason::Tolerance ? "tolerance"
                     : r.stop_reason == StopReason::MaxIter ? "max_iter"
                                                            : "not_iterative";
  j["wall_time_s"] = r.wall_time;
  auto& trace = j["trace"] = nlohmann::ordered_json::array();
  for (const auto& rec : r.trace)
    trace.push_back({{"rel_change", rec.rel_change}, {"primal_residual", rec.primal_residual}});
  return j;
}

void cmd_solve(const SolveArgs& a) {
  if (a.lambdas.empty()) throw UsageError("--lambda needs at least one value");
  if (a.lambdas.size() > 1 && a.ref.empty())
    throw UsageError("several --lambda values need --ref for selection");

  SolverConfig cfg;
  cfg.algo = parse_algorithm(a.algo);
  cfg.lambda = a.lambdas.front();
  cfg.rho = a.rho;
  cfg.nu = a.nu;
  cfg.tol = a.tol;
  cfg.max_iter = a.max_iter;
  cfg.geometry.patch_side = a.patch;
  cfg.geometry.stride = a.stride;
  cfg.geometry.group_size = a.group_size;
  cfg.geometry.window = parse_window(a.window);
  cfg.workers = a.workers;
  cfg.validate();

  MeasurementMeta meta;
  const Measurements psi = read_measurements(a.meas, &meta);
  std::optional<IntensityVolume> guide;
  if (!a.guide.empty()) guide = read_intensity(a.guide);
  const IntensityVolume* gp = guide ? &*guide : nullptr;

  nlohmann::ordered_json out;
  out["algo"] = to_string(cfg.algo);
  out["seed"] = a.seed;
  SolveResult result;
  if (!a.ref.empty()) {
    const DepthVolume ref = read_volume(a.ref);
    LambdaSelection sel = select_lambda(psi, gp, cfg, a.lambdas, ref);
    out["lambda"] = sel.lambda;
    out["candidates"] = a.lambdas;
    std::vector<std::string> snrs;
    for (double s : sel.snr_db) snrs.push_back(format_db(s, 4));
    out["candidate_snr_db"] = snrs;
    result = std::move(sel.result);
  } else {
    result = gp ? run_pipeline(psi, *gp, cfg) : run_pipeline(psi, cfg);
    out["lambda"] = cfg.lambda;
  }
  out["report"] = report_json(result.report);

  ensure_dir(a.out);
  write_volume(result.phi, a.out / "depth.dsrv");
  write_text(a.out / "report.json", out.dump(2) + "\n");
  std::cout << to_string(cfg.algo) << ": lambda " << out["lambda"].get<double>() << ", "
            << result.report.iterations << " iterations\n";
}

struct EvalArgs {
  fs::path ref, est, per_frame;
};

void cmd_eval(const EvalArgs& a) {
  const DepthVolume ref = read_volume(a.ref);
  const DepthVolume est = read_volume(a.est);
  if (ref.dims() != est.dims()) throw DimensionError("reference and estimate dimensions differ");
  std::cout << "snr_db " << format_db(snr_db(ref.values(), est.values()), 4) << "\n";
  if (!a.per_frame.empty()) {
    std::string csv = "frame,snr_db\n";
    const auto frames = frame_snr_db(ref, est);
    for (std::size_t t = 0; t < frames.size(); ++t)
      csv += std::to_string(t) + "," + format_db(frames[t], 4) + "\n";
    write_text(a.per_frame, csv);
  }
}

struct BenchArgs {
  fs::path config, out;
  unsigned workers = 0;
  bool has_workers = false;
};

void cmd_bench(const BenchArgs& a) {
  BenchConfig cfg = load_bench_config(a.config);
  if (a.has_workers) cfg.grid.solver.workers = a.workers;
  ensure_dir(a.out);
  run_bench(cfg, a.out);
  std::ifstream table(a.out / "table.csv");
  std::cout << table.rdbuf();
}

struct ImportArgs {
  fs::path manifest, out;
};

void cmd_import(const ImportArgs& a) {
  const auto frames = read_manifest(a.manifest);
  write_volume(import_pgm_sequence(a.manifest.parent_path(), frames), a.out);
}

struct RenderArgs {
  fs::path volume;
  std::string prefix;
};

void cmd_render(const RenderArgs& a) {
  const fs::path parent = fs::path(a.prefix).parent_path();
  if (!parent.empty()) ensure_dir(parent);
  for (const auto& p : render_pgm(read_volume(a.volume), a.prefix)) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided depth superresolution with motion-adaptive block matching"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Synthesize a depth/intensity scene");
  s->set_help_flag("--help", "Print this help message and exit");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--w", sim.w, "Width");
  s->add_option("--h", sim.h, "Height");
  s->add_option("--t", sim.t, "Frames");
  s->add_option("--seed", sim.seed, "Texture seed");
  auto* obj = s->add_option("--objects", sim.objects, "w,h,x,y,depth,contrast,vx,vy;...");

  DegradeArgs deg;
  auto* d = app.add_subcommand("degrade", "Decimate and add noise");
  d->add_option("--depth", deg.depth, "Ground-truth depth (DSRV)")->required();
  d->add_option("--factor", deg.factor, "Decimation factor")->required();
  d->add_option("--snr", deg.snr, "Input SNR in dB (inf for none)");
  d->add_option("--seed", deg.seed, "Noise seed");
  d->add_option("--out", deg.out, "Measurement directory")->required();

  SparseArgs sp;
  auto* r = app.add_subcommand("sparse", "Random sparse sampling with a validation split");
  r->add_option("--depth", sp.depth, "Ground-truth depth (DSRV)")->required();
  r->add_option("--rate", sp.rate, "Fraction of voxels sampled");
  r->add_option("--split", sp.split, "Fraction kept for reconstruction");
  r->add_option("--seed", sp.seed, "Sampling seed");
  r->add_option("--out", sp.out, "Output directory")->required();

  SolveArgs so;
  auto* v = app.add_subcommand("solve", "Reconstruct depth from measurements");
  v->add_option("--algo", so.algo, "linear|gds2d|ds3d|admm3d|gds3d")
      ->check(CLI::IsMember({"linear", "gds2d", "ds3d", "admm3d", "gds3d"}));
  v->add_option("--meas", so.meas, "Measurement directory")->required();
  v->add_option("--guide", so.guide, "Intensity guide (DSRV)");
  v->add_option("--lambda", so.lambdas, "Regularization weight(s)")->delimiter(',');
  v->add_option("--rho", so.rho, "Penalty parameter");
  v->add_option("--nu", so.nu, "Shrinkage exponent");
  v->add_option("--patch", so.patch, "Patch side");
  v->add_option("--window", so.window, "Search window WxWxT");
  v->add_option("--stride", so.stride, "Reference stride");
  v->add_option("--group-size", so.group_size, "Patches per group");
  v->add_option("--max-iter", so.max_iter, "Iteration cap");
  v->add_option("--tol", so.tol, "Relative-change tolerance");
  v->add_option("--seed", so.seed, "Recorded in the report");
  v->add_option("--ref", so.ref, "Ground truth for lambda selection");
  v->add_option("--workers", so.workers, "Worker threads (0 = all cores)");
  v->add_option("--out", so.out, "Output directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "SNR of an estimate against a reference");
  e->add_option("--ref", ev.ref, "Reference depth (DSRV)")->required();
  e->add_option("--est", ev.est, "Estimated depth (DSRV)")->required();
  e->add_option("--per-frame", ev.per_frame, "Per-frame CSV output");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Run an experiment grid");
  b->add_option("--config", be.config, "JSON config")->required();
  b->add_option("--out", be.out, "Output directory")->required();
  auto* bw = b->add_option("--workers", be.workers, "Worker threads (0 = all cores)");

  ImportArgs im;
  auto* i = app.add_subcommand("import", "Stack a PGM sequence into an intensity volume");
  i->add_option("--manifest", im.manifest, "Manifest listing frame files")->required();
  i->add_option("--out", im.out, "Output volume (DSRV)")->required();

  RenderArgs re;
  auto* g = app.add_subcommand("render", "Write a volume as 16-bit PGM frames");
  g->add_option("--volume", re.volume, "Volume (DSRV)")->required();
  g->add_option("--prefix", re.prefix, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kUsage;
  }

  try {
    sim.has_objects = obj->count() > 0;
    be.has_workers = bw->count() > 0;
    if (s->parsed()) cmd_simulate(sim);
    if (d->parsed()) cmd_degrade(deg);
    if (r->parsed()) cmd_sparse(sp);
    if (v->parsed()) cmd_solve(so);
    if (e->parsed()) cmd_eval(ev);
    if (b->parsed()) cmd_bench(be);
    if (i->parsed()) cmd_import(im);
    if (g->parsed()) cmd_render(re);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const NumericError& err) {
    std::cerr << "numeric failure: " << err.what() << "\n";
    return kNumeric;
  } catch (const DimensionError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  }
  return kOk;
}
