#include "dsr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace dsr {

SamplingOperator SamplingOperator::decimation(FrameDims dims, std::size_t factor) {
  if (!dims.valid()) throw DimensionError("decimation: empty dimensions");
  if (factor < 1) throw std::invalid_argument("decimation factor must be >= 1");
  std::vector<std::size_t> selected;
  for (std::size_t t = 0; t < dims.frames; ++t)
    for (std::size_t y = 0; y < dims.height; y += factor)
      for (std::size_t x = 0; x < dims.width; x += factor) selected.push_back(dims.index(x, y, t));
  return SamplingOperator(Kind::Decimation, dims, factor, std::move(selected));
}

SamplingOperator SamplingOperator::mask(FrameDims dims, std::vector<bool> mask) {
  if (!dims.valid()) throw DimensionError("mask: empty dimensions");
  if (mask.size() != dims.voxels()) throw DimensionError("mask length does not match dimensions");
  std::vector<std::size_t> selected;
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n]) selected.push_back(n);
  return SamplingOperator(Kind::Mask, dims, 1, std::move(selected));
}

SamplingOperator SamplingOperator::full(FrameDims dims) {
  return mask(dims, std::vector<bool>(dims.voxels(), true));
}

Measurements apply_sampling(const SamplingOperator& op, const DepthVolume& vol) {
  if (vol.dims() != op.dims()) throw DimensionError("apply_sampling: dimension mismatch");
  Measurements m{op, {}};
  m.values.reserve(op.measurement_count());
  for (std::size_t n : op.selected()) m.values.push_back(vol[n]);
  return m;
}

DepthVolume adjoint_sampling(const SamplingOperator& op, const Measurements& m) {
  if (!(m.op == op)) throw DimensionError("adjoint_sampling: measurements belong to another operator");
  if (m.values.size() != op.measurement_count())
    throw DimensionError("adjoint_sampling: measurement count mismatch");
  DepthVolume out(op.dims());
  const auto& sel = op.selected();
  for (std::size_t k = 0; k < sel.size(); ++k) out[sel[k]] = m.values[k];
  return out;
}

std::vector<std::uint8_t> occupancy(const SamplingOperator& op) {
  std::vector<std::uint8_t> out(op.dims().voxels(), 0);
  for (std::size_t n : op.selected()) out[n] = 1;
  return out;
}

Measurements add_noise(const Measurements& m, double target_snr_db, std::uint64_t seed) {
  if (std::isinf(target_snr_db) && target_snr_db > 0) return m;
  if (!std::isfinite(target_snr_db)) throw std::invalid_argument("add_noise: target SNR must be finite");
  double signal = 0.0;
  for (double v : m.values) signal += v * v;
  if (signal == 0.0) throw DataError("add_noise: all-zero measurements");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(m.values.size());
  double energy = 0.0;
  for (auto& e : noise) {
    e = gauss(rng);
    energy += e * e;
  }
  if (energy == 0.0) throw NumericError("add_noise: degenerate noise draw");
  const double scale = std::sqrt(signal / energy) * std::pow(10.0, -target_snr_db / 20.0);

  Measurements out = m;
  for (std::size_t k = 0; k < noise.size(); ++k) out.values[k] += scale * noise[k];
  return out;
}

double implied_noise_sigma(const Measurements& m, double snr_db) {
  if (m.values.empty()) throw DataError("implied_noise_sigma: no measurements");
  double signal = 0.0;
  for (double v : m.values) signal += v * v;
  return std::sqrt(signal / static_cast<double>(m.values.size())) * std::pow(10.0, -snr_db / 20.0);
}

DepthVolume linear_interpolate(const Measurements& m, FrameDims hi_dims) {
  const auto& op = m.op;
  if (op.kind() != SamplingOperator::Kind::Decimation)
    throw std::invalid_argument("linear_interpolate needs a decimation operator; use mask_fill");
  if (hi_dims != op.dims()) throw DimensionError("linear_interpolate: dimension mismatch");
  if (m.values.size() != op.measurement_count())
    throw DimensionError("linear_interpolate: measurement count mismatch");

  const std::size_t f = op.factor();
  const std::size_t gw = op.grid_width();
  const std::size_t gh = op.grid_height();
  DepthVolume out(hi_dims);

  // Per output coordinate: left grid index and weight of the right neighbour.
  auto axis = [f](std::size_t n, std::size_t grid) {
    std::vector<std::pair<std::size_t, double>> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t g = i / f;
      double frac = static_cast<double>(i % f) / static_cast<double>(f);
      if (g + 1 >= grid) {
        g = grid - 1;
        frac = 0.0;
      }
      w[i] = {g, frac};
    }
    return w;
  };
  const auto wx = axis(hi_dims.width, gw);
  const auto wy = axis(hi_dims.height, gh);

  for (std::size_t t = 0; t < hi_dims.frames; ++t) {
    const double* low = m.values.data() + t * gw * gh;
    auto sample = [&](std::size_t gx, std::size_t gy) {
      return low[std::min(gy, gh - 1) * gw + std::min(gx, gw - 1)];
    };
    for (std::size_t y = 0; y < hi_dims.height; ++y) {
      const auto [gy, fy] = wy[y];
      for (std::size_t x = 0; x < hi_dims.width; ++x) {
        const auto [gx, fx] = wx[x];
        const double top = (1.0 - fx) * sample(gx, gy) + fx * sample(gx + 1, gy);
        const double bottom = (1.0 - fx) * sample(gx, gy + 1) + fx * sample(gx + 1, gy + 1);
        out.at(x, y, t) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

DepthVolume mask_fill(const Measurements& m) {
  const auto& op = m.op;
  if (op.kind() != SamplingOperator::Kind::Mask)
    throw std::invalid_argument("mask_fill needs a mask operator");
  if (m.values.size() != op.measurement_count())
    throw DimensionError("mask_fill: measurement count mismatch");

  const FrameDims d = op.dims();
  const std::size_t n_pix = d.pixels();
  DepthVolume out(d);
  // Measurement slot per voxel, or npos.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> slot(d.voxels(), npos);
  for (std::size_t k = 0; k < op.selected().size(); ++k) slot[op.selected()[k]] = k;

  const auto W = static_cast<long>(d.width);
  const auto H = static_cast<long>(d.height);
  for (std::size_t t = 0; t < d.frames; ++t) {
    const std::size_t base = t * n_pix;
    bool any = false;
    for (std::size_t i = 0; i < n_pix && !any; ++i) any = slot[base + i] != npos;
    if (!any) throw DataError("mask_fill: frame " + std::to_string(t) + " has no measurements");

    for (long y = 0; y < H; ++y) {
      for (long x = 0; x < W; ++x) {
        // Ring search in growing Chebyshev radius; a ring at radius r cannot
        // hold anything closer than r^2, so stop once r^2 exceeds the best.
        long best_d2 = -1;
        std::size_t best_idx = npos;
        for (long r = 0;; ++r) {
          if (best_d2 >= 0 && r * r > best_d2) break;
          if (r > W && r > H) break;
          for (long dy = -r; dy <= r; ++dy) {
            const long yy = y + dy;
            if (yy < 0 || yy >= H) continue;
            const bool edge_row = (dy == -r || dy == r);
            const long step = edge_row ? 1 : 2 * r;
            for (long dx = -r; dx <= r; dx += (step == 0 ? 1 : step)) {
              const long xx = x + dx;
              if (xx < 0 || xx >= W) continue;
              const std::size_t idx = base + static_cast<std::size_t>(yy * W + xx);
              if (slot[idx] == npos) continue;
              const long d2 = dx * dx + dy * dy;
              if (best_d2 < 0 || d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                best_d2 = d2;
                best_idx = idx;
              }
            }
          }
        }
        out[base + static_cast<std::size_t>(y * W + x)] = m.values[slot[best_idx]];
      }
    }
  }
  return out;
}

DepthVolume initial_estimate(const Measurements& m) {
  if (m.op.kind() == SamplingOperator::Kind::Decimation) return linear_interpolate(m, m.op.dims());
  return mask_fill(m);
}

SparseSplit sparse_split(const DepthVolume& vol, double rate, double split, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must lie in (0, 1]");
  if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("split must lie in (0, 1)");
  const std::size_t total = vol.size();
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(total)));
  if (count < 2) throw std::invalid_argument("rate * voxels must be at least 2");

  // partial Fisher-Yates: the first count entries are the draw order.
  std::vector<std::size_t> order(total);
  for (std::size_t n = 0; n < total; ++n) order[n] = n;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  auto recon = static_cast<std::size_t>(std::floor(split * static_cast<double>(count)));
  recon = std::clamp<std::size_t>(recon, 1, count - 1);

  std::vector<bool> rmask(total, false), vmask(total, false);
  for (std::size_t i = 0; i < count; ++i) (i < recon ? rmask : vmask)[order[i]] = true;
  const auto rop = SamplingOperator::mask(vol.dims(), std::move(rmask));
  const auto vop = SamplingOperator::mask(vol.dims(), std::move(vmask));
  return {apply_sampling(rop, vol), apply_sampling(vop, vol)};
}

}  // namespace dsr
