#include "dsr/patch_match.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "dsr/parallel.hpp"

namespace dsr {

void PatchGeometry::validate(const FrameDims& dims) const {
  if (!dims.valid()) throw DimensionError("empty volume");
  if (patch_side < 1) throw std::invalid_argument("patch side must be >= 1");
  if (stride < 1 || stride > patch_side)
    throw std::invalid_argument("stride must lie in [1, patch_side]");
  if (window.wx < 1 || window.wy < 1) throw std::invalid_argument("search window must be nonempty");
  if (window.wt % 2 == 0) throw std::invalid_argument("temporal window must be odd");
  if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
  if (patch_side > dims.width || patch_side > dims.height)
    throw DimensionError("patch does not fit in a frame");
}

std::size_t PatchGroupTable::padded_groups() const {
  return static_cast<std::size_t>(
      std::count_if(groups.begin(), groups.end(), [](const PatchGroup& g) { return g.padded; }));
}

std::vector<std::size_t> reference_positions(std::size_t extent, std::size_t patch_side,
                                             std::size_t stride) {
  const std::size_t last = extent - patch_side;
  std::vector<std::size_t> pos;
  for (std::size_t p = 0; p <= last; p += stride) pos.push_back(p);
  if (pos.back() != last) pos.push_back(last);
  return pos;
}

namespace {

struct Candidate {
  double distance;
  PatchRef ref;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return std::tie(a.ref.t, a.ref.y, a.ref.x) < std::tie(b.ref.t, b.ref.y, b.ref.x);
}

// Clamped [lo, hi] range of a window of `size` centred on `center`.
std::pair<std::size_t, std::size_t> window_range(std::size_t center, std::size_t size,
                                                 std::size_t max_pos) {
  const std::size_t before = (size - 1) / 2;
  const std::size_t after = size - 1 - before;
  const std::size_t lo = center >= before ? center - before : 0;
  const std::size_t hi = std::min(center + after, max_pos);
  return {lo, hi};
}

double patch_ssd(VolumeView g, const PatchRef& a, const PatchRef& b, std::size_t side,
                 double bound) {
  double sum = 0.0;
  for (std::size_t dy = 0; dy < side; ++dy) {
    const double* pa = &g.values[g.dims.index(a.x, a.y + dy, a.t)];
    const double* pb = &g.values[g.dims.index(b.x, b.y + dy, b.t)];
    for (std::size_t dx = 0; dx < side; ++dx) {
      const double d = pa[dx] - pb[dx];
      sum += d * d;
    }
    // Early exit: this candidate already ranks behind the current L-th best.
    if (sum > bound) return sum;
  }
  return sum;
}

PatchGroup match_reference(VolumeView guide, const PatchGeometry& geom, const PatchRef& ref) {
  const FrameDims& d = guide.dims;
  const std::size_t side = geom.patch_side;
  const std::size_t L = geom.group_size;
  const auto [x0, x1] = window_range(ref.x, geom.window.wx, d.width - side);
  const auto [y0, y1] = window_range(ref.y, geom.window.wy, d.height - side);
  const auto [t0, t1] = window_range(ref.t, geom.window.wt, d.frames - 1);

  // Best L-1 non-reference candidates, kept sorted.
  std::vector<Candidate> best;
  best.reserve(L);
  const std::size_t keep = L - 1;
  std::size_t total = 0;
  for (std::size_t t = t0; t <= t1; ++t) {
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        const PatchRef cand{x, y, t};
        if (cand == ref) continue;
        ++total;
        if (keep == 0) continue;
        const double bound = best.size() == keep ? best.back().distance
                                                 : std::numeric_limits<double>::infinity();
        const double dist = patch_ssd(guide, ref, cand, side, bound);
        Candidate c{dist, cand};
        if (best.size() == keep && !ranks_before(c, best.back())) continue;
        auto pos = std::upper_bound(best.begin(), best.end(), c, ranks_before);
        best.insert(pos, c);
        if (best.size() > keep) best.pop_back();
      }
    }
  }

  PatchGroup group;
  group.reference = ref;
  group.members.reserve(L);
  group.members.push_back(ref);
  for (const auto& c : best) group.members.push_back(c.ref);
  if (total < keep) {
    group.padded = true;
    while (group.members.size() < L) group.members.push_back(ref);
  }
  return group;
}

}  // namespace

PatchGroupTable build_groups(VolumeView guide, const PatchGeometry& geom, unsigned workers) {
  geom.validate(guide.dims);
  const FrameDims& d = guide.dims;
  const auto xs = reference_positions(d.width, geom.patch_side, geom.stride);
  const auto ys = reference_positions(d.height, geom.patch_side, geom.stride);

  std::vector<PatchRef> refs;
  refs.reserve(xs.size() * ys.size() * d.frames);
  for (std::size_t t = 0; t < d.frames; ++t)
    for (std::size_t y : ys)
      for (std::size_t x : xs) refs.push_back({x, y, t});

  PatchGroupTable table{geom, d, std::vector<PatchGroup>(refs.size())};
  parallel_for(refs.size(), workers,
               [&](std::size_t p) { table.groups[p] = match_reference(guide, geom, refs[p]); });
  return table;
}

Block extract_block(VolumeView vol, const PatchGroup& group, std::size_t patch_side) {
  const FrameDims& d = vol.dims;
  Block block(static_cast<Eigen::Index>(patch_side * patch_side),
              static_cast<Eigen::Index>(group.members.size()));
  for (std::size_t l = 0; l < group.members.size(); ++l) {
    const PatchRef& m = group.members[l];
    if (m.x + patch_side > d.width || m.y + patch_side > d.height || m.t >= d.frames)
      throw DimensionError("extract_block: member patch out of bounds");
    auto col = block.col(static_cast<Eigen::Index>(l));
    Eigen::Index k = 0;
    for (std::size_t dy = 0; dy < patch_side; ++dy) {
      const double* row = &vol.values[d.index(m.x, m.y + dy, m.t)];
      for (std::size_t dx = 0; dx < patch_side; ++dx) col[k++] = row[dx];
    }
  }
  return block;
}

void adjoint_accumulate(const Block& block, const PatchGroup& group, std::size_t patch_side,
                        std::span<double> acc, const FrameDims& d) {
  if (acc.size() != d.voxels()) throw DimensionError("adjoint_accumulate: accumulator size");
  if (block.rows() != static_cast<Eigen::Index>(patch_side * patch_side) ||
      block.cols() != static_cast<Eigen::Index>(group.members.size()))
    throw DimensionError("adjoint_accumulate: block shape does not match group");
  for (std::size_t l = 0; l < group.members.size(); ++l) {
    const PatchRef& m = group.members[l];
    if (m.x + patch_side > d.width || m.y + patch_side > d.height || m.t >= d.frames)
      throw DimensionError("adjoint_accumulate: member patch out of bounds");
    auto col = block.col(static_cast<Eigen::Index>(l));
    Eigen::Index k = 0;
    for (std::size_t dy = 0; dy < patch_side; ++dy) {
      double* row = &acc[d.index(m.x, m.y + dy, m.t)];
      for (std::size_t dx = 0; dx < patch_side; ++dx) row[dx] += col[k++];
    }
  }
}

std::vector<Block> extract_all(VolumeView vol, const PatchGroupTable& table, unsigned workers) {
  if (vol.dims != table.dims) throw DimensionError("extract_all: dimension mismatch");
  std::vector<Block> blocks(table.groups.size());
  parallel_for(blocks.size(), workers, [&](std::size_t p) {
    blocks[p] = extract_block(vol, table.groups[p], table.geometry.patch_side);
  });
  return blocks;
}

std::vector<double> compute_counts(const PatchGroupTable& table) {
  const FrameDims& d = table.dims;
  const std::size_t side = table.geometry.patch_side;
  std::vector<double> counts(d.voxels(), 0.0);
  for (const auto& g : table.groups)
    for (const auto& m : g.members)
      for (std::size_t dy = 0; dy < side; ++dy)
        for (std::size_t dx = 0; dx < side; ++dx) counts[d.index(m.x + dx, m.y + dy, m.t)] += 1.0;
  return counts;
}

std::vector<double> adjoint_sum(const PatchGroupTable& table, const std::vector<Block>& blocks) {
  if (blocks.size() != table.groups.size())
    throw DimensionError("adjoint_sum: one block per group required");
  std::vector<double> acc(table.dims.voxels(), 0.0);
  for (std::size_t p = 0; p < blocks.size(); ++p)
    adjoint_accumulate(blocks[p], table.groups[p], table.geometry.patch_side, acc, table.dims);
  return acc;
}

std::vector<double> aggregate_average(const PatchGroupTable& table,
                                      const std::vector<Block>& blocks,
                                      const std::vector<double>& counts) {
  auto acc = adjoint_sum(table, blocks);
  if (counts.size() != acc.size()) throw DimensionError("aggregate_average: counts size");
  for (std::size_t n = 0; n < acc.size(); ++n) {
    if (counts[n] == 0.0) throw NumericError("aggregate_average: voxel not covered by any patch");
    acc[n] /= counts[n];
  }
  return acc;
}

std::vector<double> aggregate_average(const PatchGroupTable& table,
                                      const std::vector<Block>& blocks) {
  return aggregate_average(table, blocks, compute_counts(table));
}

void write_table(std::ostream& os, const PatchGroupTable& table) {
  for (std::size_t p = 0; p < table.groups.size(); ++p) {
    const auto& g = table.groups[p];
    os << p << ',' << g.reference.x << ',' << g.reference.y << ',' << g.reference.t;
    for (const auto& m : g.members) os << ',' << m.x << ',' << m.y << ',' << m.t;
    os << '\n';
  }
}

}  // namespace dsr
