#ifndef DSR_SCENE_HPP
#define DSR_SCENE_HPP

#include <cstdint>
#include <string_view>
#include <vector>

#include "dsr/volume.hpp"

namespace dsr {

// depth = offset + slope_x * x + slope_y * y
struct DepthRamp {
  double offset = 10.0;
  double slope_x = 0.04;
  double slope_y = 0.02;
};

// Axis-aligned rectangle translating at a constant velocity. Its top-left
// corner at frame t is (x + vx * t, y + vy * t).
struct SceneObject {
  long width = 0;
  long height = 0;
  long x = 0;
  long y = 0;
  double depth = 0.0;
  double contrast = 0.0;  // intensity offset relative to the background
  long vx = 0;
  long vy = 0;
};

struct SceneSpec {
  FrameDims dims{64, 64, 16};
  DepthRamp background;
  double background_intensity = 0.45;
  std::vector<SceneObject> objects;
  double texture = 0.05;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument if an object leaves the frame.
  void validate() const;
};

struct Scene {
  IntensityVolume intensity;
  DepthVolume depth;
};

// 64x64x16, one rectangle moving 2 px/frame to the right over a ramp.
SceneSpec default_scene_spec(std::uint64_t seed = 0);

// Objects as "w,h,x,y,depth,contrast,vx,vy" separated by ';'.
std::vector<SceneObject> parse_objects(std::string_view text);

// Depth is the ramp overwritten by the objects; intensity has the same
// edges plus a seeded texture that moves with the surface it belongs to.
Scene synth_scene(const SceneSpec& spec);

}  // namespace dsr

#endif  // DSR_SCENE_HPP
