#ifndef DSR_PATCH_MATCH_HPP
#define DSR_PATCH_MATCH_HPP

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "dsr/volume.hpp"

namespace dsr {

struct SearchWindow {
  std::size_t wx = 11;
  std::size_t wy = 11;
  std::size_t wt = 3;
};

struct PatchGeometry {
  std::size_t patch_side = 5;
  std::size_t stride = 3;
  SearchWindow window;
  std::size_t group_size = 10;

  std::size_t patch_pixels() const { return patch_side * patch_side; }
  // Throws std::invalid_argument on a geometry that cannot cover dims.
  void validate(const FrameDims& dims) const;
};

struct PatchRef {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t t = 0;
  friend bool operator==(const PatchRef&, const PatchRef&) = default;
};

struct PatchGroup {
  PatchRef reference;
  std::vector<PatchRef> members;  // members[0] == reference
  bool padded = false;            // fewer candidates than group_size
};

// Result of block matching: the set of patch-extraction operators B_p.
struct PatchGroupTable {
  PatchGeometry geometry;
  FrameDims dims;
  std::vector<PatchGroup> groups;

  std::size_t padded_groups() const;
};

// B x L matrix; column l is the row-major patch at members[l].
using Block = Eigen::MatrixXd;

// Reference top-left positions along one axis: the stride grid, plus a final
// position at extent - patch_side so the border is covered.
std::vector<std::size_t> reference_positions(std::size_t extent, std::size_t patch_side,
                                             std::size_t stride);

// SSD block matching on the guide inside the space-time window around each
// reference. Groups are independent of any depth estimate.
PatchGroupTable build_groups(VolumeView guide, const PatchGeometry& geom, unsigned workers = 0);

Block extract_block(VolumeView vol, const PatchGroup& group, std::size_t patch_side);

// acc += B_p^T block.
void adjoint_accumulate(const Block& block, const PatchGroup& group, std::size_t patch_side,
                        std::span<double> acc, const FrameDims& dims);

std::vector<Block> extract_all(VolumeView vol, const PatchGroupTable& table, unsigned workers = 0);

// r_n: number of (group, member, offset) references to voxel n.
std::vector<double> compute_counts(const PatchGroupTable& table);

// sum_p B_p^T blocks[p], accumulated in group order.
std::vector<double> adjoint_sum(const PatchGroupTable& table, const std::vector<Block>& blocks);

// R^{-1} sum_p B_p^T blocks[p].
std::vector<double> aggregate_average(const PatchGroupTable& table,
                                      const std::vector<Block>& blocks,
                                      const std::vector<double>& counts);
std::vector<double> aggregate_average(const PatchGroupTable& table,
                                      const std::vector<Block>& blocks);

// "p,ref_x,ref_y,ref_t,x,y,t,x,y,t,..." one line per group.
void write_table(std::ostream& os, const PatchGroupTable& table);

}  // namespace dsr

#endif  // DSR_PATCH_MATCH_HPP
