#include "dsr/volume.hpp"

#include <cmath>
#include <limits>

namespace dsr {

IntensityVolume luma(const RgbFrames& rgb) {
  if (rgb.channels != 3) throw DimensionError("luma needs 3-channel frames");
  if (rgb.values.size() != rgb.dims.voxels() * 3)
    throw DimensionError("rgb payload does not match dimensions");
  IntensityVolume out(rgb.dims);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double* px = &rgb.values[3 * n];
    out[n] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

IntensityVolume to_intensity(FrameDims dims, std::vector<double> values) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("intensity values must lie in [0,1]");
  return IntensityVolume(dims, std::move(values));
}

double snr_db(std::span<const double> ref, std::span<const double> est) {
  if (ref.size() != est.size()) throw DimensionError("snr_db: length mismatch");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    signal += ref[i] * ref[i];
    const double d = ref[i] - est[i];
    error += d * d;
  }
  if (signal == 0.0) throw DataError("snr_db: zero reference");
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

std::vector<double> frame_snr_db(VolumeView ref, VolumeView est) {
  if (ref.dims != est.dims) throw DimensionError("frame_snr_db: dimension mismatch");
  const std::size_t n = ref.dims.pixels();
  std::vector<double> out;
  out.reserve(ref.dims.frames);
  for (std::size_t t = 0; t < ref.dims.frames; ++t)
    out.push_back(snr_db(ref.values.subspan(t * n, n), est.values.subspan(t * n, n)));
  return out;
}

}  // namespace dsr
