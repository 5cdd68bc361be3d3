#include "dsr/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace dsr {

namespace fs = std::filesystem;

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw DimensionError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_volume(VolumeView vol, const fs::path& path) {
  std::string bytes = "DSRV";
  put_u16(bytes, 1);
  bytes.push_back(0);  // float32
  bytes.push_back(0);
  put_u32(bytes, checked_u32(vol.dims.width));
  put_u32(bytes, checked_u32(vol.dims.height));
  put_u32(bytes, checked_u32(vol.dims.frames));
  bytes.reserve(bytes.size() + 4 * vol.values.size());
  for (double v : vol.values) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  dump(path, bytes);
}

DepthVolume read_volume(const fs::path& path) {
  const std::string bytes = slurp(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kDsrvHeaderBytes) throw DataError(path.string() + ": truncated header");
  if (std::memcmp(p, "DSRV", 4) != 0) throw DataError(path.string() + ": bad magic");
  const unsigned version = p[4] | (p[5] << 8);
  if (version != 1)
    throw DataError(path.string() + ": unsupported version " + std::to_string(version));
  if (p[6] != 0) throw DataError(path.string() + ": unsupported dtype " + std::to_string(p[6]));
  const FrameDims dims{get_u32(p + 8), get_u32(p + 12), get_u32(p + 16)};
  if (!dims.valid()) throw DataError(path.string() + ": empty dimensions");
  const std::uint64_t voxels = std::uint64_t(dims.width) * dims.height * dims.frames;
  if (bytes.size() != kDsrvHeaderBytes + 4 * voxels)
    throw DataError(path.string() + ": payload size does not match header");
  std::vector<double> values(voxels);
  const unsigned char* payload = p + kDsrvHeaderBytes;
  for (std::size_t n = 0; n < values.size(); ++n)
    values[n] = std::bit_cast<float>(get_u32(payload + 4 * n));
  return DepthVolume(dims, std::move(values));
}

IntensityVolume read_intensity(const fs::path& path) {
  const DepthVolume raw = read_volume(path);
  return to_intensity(raw.dims(), {raw.values().begin(), raw.values().end()});
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

std::size_t pgm_number(const std::string& bytes, std::size_t& pos, const fs::path& path) {
  const std::string tok = pgm_token(bytes, pos);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw DataError(path.string() + ": malformed PGM header");
  return std::stoul(tok);
}

}  // namespace

PgmImage read_pgm(const fs::path& path) {
  const std::string bytes = slurp(path);
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
  PgmImage img;
  img.width = pgm_number(bytes, pos, path);
  img.height = pgm_number(bytes, pos, path);
  const std::size_t maxval = pgm_number(bytes, pos, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535)
    throw DataError(path.string() + ": malformed PGM header");
  ++pos;  // single whitespace before the raster
  const std::size_t bps = maxval < 256 ? 1 : 2;
  const std::size_t n = img.width * img.height;
  if (bytes.size() < pos + n * bps) throw DataError(path.string() + ": truncated PGM raster");
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  img.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bps == 1 ? raster[i] : (raster[2 * i] << 8) | raster[2 * i + 1];
    if (v > maxval) throw DataError(path.string() + ": sample exceeds maxval");
    img.values[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

std::vector<std::string> read_manifest(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> frames;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    frames.push_back(line);
  }
  if (frames.empty()) throw DataError(path.string() + ": manifest lists no frames");
  return frames;
}

IntensityVolume import_pgm_sequence(const fs::path& dir, const std::vector<std::string>& frames) {
  if (frames.empty()) throw DataError("import_pgm_sequence: no frames");
  std::vector<double> values;
  FrameDims dims;
  for (const auto& name : frames) {
    PgmImage img = read_pgm(dir / name);
    if (dims.frames == 0) {
      dims.width = img.width;
      dims.height = img.height;
    } else if (img.width != dims.width || img.height != dims.height) {
      throw DataError(name + ": frame size differs from the first frame");
    }
    values.insert(values.end(), img.values.begin(), img.values.end());
    ++dims.frames;
  }
  return to_intensity(dims, std::move(values));
}

std::vector<fs::path> render_pgm(VolumeView vol, const std::string& prefix) {
  const auto [lo, hi] = std::minmax_element(vol.values.begin(), vol.values.end());
  const double vmin = *lo;
  const double range = *hi - *lo;
  const std::size_t n = vol.dims.pixels();
  std::vector<fs::path> written;
  for (std::size_t t = 0; t < vol.dims.frames; ++t) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_t%04zu.pgm", t);
    const fs::path path = prefix + suffix;
    std::string bytes = "P5\n" + std::to_string(vol.dims.width) + " " +
                        std::to_string(vol.dims.height) + "\n65535\n";
    for (std::size_t i = 0; i < n; ++i) {
      unsigned v = 32768;
      if (range > 0.0)
        v = static_cast<unsigned>(std::lround((vol.values[t * n + i] - vmin) / range * 65535.0));
      bytes.push_back(static_cast<char>(v >> 8));
      bytes.push_back(static_cast<char>(v & 0xff));
    }
    dump(path, bytes);
    written.push_back(path);
  }
  return written;
}

void write_measurements(const fs::path& dir, const Measurements& m, const MeasurementMeta& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const auto& op = m.op;
  const FrameDims d = op.dims();
  nlohmann::ordered_json j;
  j["kind"] = op.kind() == SamplingOperator::Kind::Decimation ? "decimation" : "mask";
  j["width"] = d.width;
  j["height"] = d.height;
  j["frames"] = d.frames;
  j["factor"] = op.factor();
  j["measurements"] = op.measurement_count();
  if (std::isfinite(meta.input_snr_db))
    j["input_snr_db"] = meta.input_snr_db;
  else
    j["input_snr_db"] = "inf";
  j["seed"] = meta.seed;
  std::ofstream(dir / "operator.json") << j.dump(2) << '\n';

  if (op.kind() == SamplingOperator::Kind::Decimation) {
    const FrameDims grid{op.grid_width(), op.grid_height(), d.frames};
    write_volume(VolumeView{grid, m.values}, dir / "values.dsrv");
  } else {
    write_volume(VolumeView{FrameDims{m.values.size(), 1, 1}, m.values}, dir / "values.dsrv");
    const auto occ = occupancy(op);
    std::vector<double> mask(occ.begin(), occ.end());
    write_volume(VolumeView{d, mask}, dir / "mask.dsrv");
  }
}

Measurements read_measurements(const fs::path& dir, MeasurementMeta* meta) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(dir / "operator.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + "/operator.json: " + e.what());
  }
  try {
    const FrameDims d{j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>(),
                      j.at("frames").get<std::size_t>()};
    const std::string kind = j.at("kind").get<std::string>();
    if (meta) {
      const auto& snr = j.at("input_snr_db");
      meta->input_snr_db = snr.is_string() ? kNoNoise : snr.get<double>();
      meta->seed = j.value("seed", std::uint64_t{0});
    }
    const DepthVolume values = read_volume(dir / "values.dsrv");
    std::vector<double> v(values.values().begin(), values.values().end());
    if (kind == "decimation") {
      auto op = SamplingOperator::decimation(d, j.at("factor").get<std::size_t>());
      if (v.size() != op.measurement_count())
        throw DataError(dir.string() + ": value count does not match decimation grid");
      return {std::move(op), std::move(v)};
    }
    if (kind == "mask") {
      const DepthVolume mask = read_volume(dir / "mask.dsrv");
      if (mask.dims() != d) throw DataError(dir.string() + ": mask dimensions differ");
      std::vector<bool> bits(d.voxels());
      for (std::size_t n = 0; n < bits.size(); ++n) bits[n] = mask[n] != 0.0;
      auto op = SamplingOperator::mask(d, std::move(bits));
      if (v.size() != op.measurement_count())
        throw DataError(dir.string() + ": value count does not match mask");
      return {std::move(op), std::move(v)};
    }
    throw DataError(dir.string() + ": unknown operator kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + "/operator.json: " + e.what());
  }
}

}  // namespace dsr
