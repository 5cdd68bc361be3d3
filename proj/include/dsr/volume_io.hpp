#ifndef DSR_VOLUME_IO_HPP
#define DSR_VOLUME_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "dsr/sampling.hpp"

namespace dsr {

// DSRV container: "DSRV", u16 version (1), u8 dtype (0 = float32),
// u8 reserved, u32 width, height, frames, then float32 payload. All
// little-endian, frame-major, row-major.
inline constexpr std::size_t kDsrvHeaderBytes = 20;

void write_volume(VolumeView vol, const std::filesystem::path& path);
// Throws DataError on bad magic, version, dtype or a truncated payload.
DepthVolume read_volume(const std::filesystem::path& path);
IntensityVolume read_intensity(const std::filesystem::path& path);

// Binary PGM (P5), 8- or 16-bit. Values are scaled to [0,1] by maxval.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
};
PgmImage read_pgm(const std::filesystem::path& path);

// Manifest: one frame filename per line, relative to the manifest's directory;
// blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_manifest(const std::filesystem::path& path);
IntensityVolume import_pgm_sequence(const std::filesystem::path& dir,
                                    const std::vector<std::string>& frames);

// One 16-bit PGM per frame, "<prefix>_t0000.pgm", ... with one global
// min/max normalization; a constant volume renders as 32768.
std::vector<std::filesystem::path> render_pgm(VolumeView vol, const std::string& prefix);

// Measurement directory: operator.json, values.dsrv and, for masks, mask.dsrv.
// Decimation values are stored as the low-resolution grid, mask values as an
// M x 1 x 1 volume.
struct MeasurementMeta {
  double input_snr_db = kNoNoise;
  std::uint64_t seed = 0;
};
void write_measurements(const std::filesystem::path& dir, const Measurements& m,
                        const MeasurementMeta& meta);
Measurements read_measurements(const std::filesystem::path& dir, MeasurementMeta* meta = nullptr);

}  // namespace dsr

#endif  // DSR_VOLUME_IO_HPP
