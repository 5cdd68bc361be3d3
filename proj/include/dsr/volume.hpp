#ifndef DSR_VOLUME_HPP
#define DSR_VOLUME_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "dsr/error.hpp"

namespace dsr {

// Extent of a space-time volume. Voxel (x, y, t) lives at t*N + y*W + x.
struct FrameDims {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t frames = 0;

  std::size_t pixels() const { return width * height; }
  std::size_t voxels() const { return width * height * frames; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t t) const {
    return t * pixels() + y * width + x;
  }
  bool valid() const { return voxels() > 0; }

  friend bool operator==(const FrameDims&, const FrameDims&) = default;
};

// Read-only view used by code that does not care what a volume measures
// (block matching, metrics).
struct VolumeView {
  FrameDims dims;
  std::span<const double> values;

  double at(std::size_t x, std::size_t y, std::size_t t) const {
    return values[dims.index(x, y, t)];
  }
};

struct DepthTag {};
struct IntensityTag {};

// Dense scalar field over a FrameDims grid. The tag keeps depth and
// intensity volumes from being swapped at call sites.
template <typename Tag>
class BasicVolume {
 public:
  BasicVolume() = default;
  explicit BasicVolume(FrameDims dims, double fill = 0.0)
      : dims_(dims), values_(dims.voxels(), fill) {
    if (!dims.valid()) throw DimensionError("volume dimensions must be positive");
  }
  BasicVolume(FrameDims dims, std::vector<double> values)
      : dims_(dims), values_(std::move(values)) {
    if (!dims.valid()) throw DimensionError("volume dimensions must be positive");
    if (values_.size() != dims.voxels())
      throw DimensionError("volume payload does not match dimensions");
  }

  const FrameDims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }
  double& at(std::size_t x, std::size_t y, std::size_t t) { return values_[dims_.index(x, y, t)]; }
  double at(std::size_t x, std::size_t y, std::size_t t) const {
    return values_[dims_.index(x, y, t)];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> frame(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * dims_.pixels(), dims_.pixels());
  }

  VolumeView view() const { return {dims_, values_}; }
  operator VolumeView() const { return view(); }

  friend bool operator==(const BasicVolume&, const BasicVolume&) = default;

 private:
  FrameDims dims_;
  std::vector<double> values_;
};

using DepthVolume = BasicVolume<DepthTag>;
using IntensityVolume = BasicVolume<IntensityTag>;

// Interleaved RGB frames, 3 values per pixel, each in [0,1].
struct RgbFrames {
  FrameDims dims;
  std::size_t channels = 3;
  std::vector<double> values;
};

// Rec.601 luma. Throws DimensionError unless channels == 3.
IntensityVolume luma(const RgbFrames& rgb);

// Throws DataError if any value lies outside [0,1].
IntensityVolume to_intensity(FrameDims dims, std::vector<double> values);

// 10*log10(|ref|^2 / |ref - est|^2); +inf when est == ref.
double snr_db(std::span<const double> ref, std::span<const double> est);

// Per-frame snr_db, one value per frame.
std::vector<double> frame_snr_db(VolumeView ref, VolumeView est);

}  // namespace dsr

#endif  // DSR_VOLUME_HPP
