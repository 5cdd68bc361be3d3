#ifndef DSR_SAMPLING_HPP
#define DSR_SAMPLING_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "dsr/volume.hpp"

namespace dsr {

// Point-selection measurement operator H. Each measurement reads exactly one
// voxel; measurements are ordered by voxel index (frame, row, column).
class SamplingOperator {
 public:
  enum class Kind { Decimation, Mask };

  // Keeps voxels with x % factor == 0 and y % factor == 0 in every frame.
  static SamplingOperator decimation(FrameDims dims, std::size_t factor);
  // Keeps voxels whose mask entry is true; mask has dims.voxels() entries.
  static SamplingOperator mask(FrameDims dims, std::vector<bool> mask);
  static SamplingOperator full(FrameDims dims);

  Kind kind() const { return kind_; }
  const FrameDims& dims() const { return dims_; }
  std::size_t factor() const { return factor_; }
  std::size_t measurement_count() const { return selected_.size(); }
  // Voxel index read by each measurement, strictly increasing.
  const std::vector<std::size_t>& selected() const { return selected_; }

  // Low-resolution grid extent for decimation: ceil(W/f) x ceil(H/f).
  std::size_t grid_width() const { return (dims_.width + factor_ - 1) / factor_; }
  std::size_t grid_height() const { return (dims_.height + factor_ - 1) / factor_; }

  friend bool operator==(const SamplingOperator&, const SamplingOperator&) = default;

 private:
  SamplingOperator(Kind kind, FrameDims dims, std::size_t factor,
                   std::vector<std::size_t> selected)
      : kind_(kind), dims_(dims), factor_(factor), selected_(std::move(selected)) {}

  Kind kind_ = Kind::Mask;
  FrameDims dims_;
  std::size_t factor_ = 1;
  std::vector<std::size_t> selected_;
};

struct Measurements {
  SamplingOperator op;
  std::vector<double> values;
};

Measurements apply_sampling(const SamplingOperator& op, const DepthVolume& vol);

// Scatter back: measured voxels get their values, everything else 0.
DepthVolume adjoint_sampling(const SamplingOperator& op, const Measurements& m);

// diag(H^T H): 1 where a voxel is measured, else 0.
std::vector<std::uint8_t> occupancy(const SamplingOperator& op);

// Use as target_snr_db to disable noise.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Adds seeded white Gaussian noise, rescaled so that snr_db(m, result) equals
// target_snr_db up to rounding.
Measurements add_noise(const Measurements& m, double target_snr_db, std::uint64_t seed);

// Noise standard deviation implied by a measurement vector at a given SNR.
double implied_noise_sigma(const Measurements& m, double snr_db);

// Per-frame bilinear interpolation from the decimation grid; values beyond the
// last sample row/column are clamped.
DepthVolume linear_interpolate(const Measurements& m, FrameDims hi_dims);

// Nearest measured voxel in the same frame (Euclidean, ties by scan order).
DepthVolume mask_fill(const Measurements& m);

// linear_interpolate for decimation, mask_fill otherwise.
DepthVolume initial_estimate(const Measurements& m);

struct SparseSplit {
  Measurements reconstruction;
  Measurements validation;
};

// Seeded uniform sample of floor(rate * NT) voxels without replacement. The
// first floor(split * count) drawn voxels (at least one, at most count - 1)
// form the reconstruction set, the rest the validation set.
SparseSplit sparse_split(const DepthVolume& vol, double rate, double split, std::uint64_t seed);

}  // namespace dsr

#endif  // DSR_SAMPLING_HPP
