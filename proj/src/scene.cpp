#include "dsr/scene.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dsr {

void SceneSpec::validate() const {
  if (!dims.valid()) throw std::invalid_argument("scene dimensions must be positive");
  if (!(texture >= 0.0)) throw std::invalid_argument("texture amplitude must be non-negative");
  const auto W = static_cast<long>(dims.width);
  const auto H = static_cast<long>(dims.height);
  const auto last = static_cast<long>(dims.frames) - 1;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    if (o.width <= 0 || o.height <= 0)
      throw std::invalid_argument("object " + std::to_string(k) + " has an empty rectangle");
    for (long t : {0L, last}) {
      const long x = o.x + o.vx * t;
      const long y = o.y + o.vy * t;
      if (x < 0 || y < 0 || x + o.width > W || y + o.height > H)
        throw std::invalid_argument("object " + std::to_string(k) + " leaves the frame at t=" +
                                    std::to_string(t));
    }
  }
}

SceneSpec default_scene_spec(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.objects.push_back(SceneObject{20, 20, 6, 22, 6.0, 0.3, 2, 0});
  return spec;
}

std::vector<SceneObject> parse_objects(std::string_view text) {
  std::vector<SceneObject> out;
  std::stringstream all{std::string(text)};
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream fields(item);
    std::string f;
    std::vector<double> v;
    while (std::getline(fields, f, ',')) {
      try {
        v.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad object field '" + f + "'");
      }
    }
    if (v.size() != 8)
      throw std::invalid_argument("object needs 8 fields w,h,x,y,depth,contrast,vx,vy");
    out.push_back(SceneObject{static_cast<long>(v[0]), static_cast<long>(v[1]),
                              static_cast<long>(v[2]), static_cast<long>(v[3]), v[4], v[5],
                              static_cast<long>(v[6]), static_cast<long>(v[7])});
  }
  return out;
}

Scene synth_scene(const SceneSpec& spec) {
  spec.validate();
  const FrameDims d = spec.dims;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> tex(-spec.texture, spec.texture);

  std::vector<double> bg_texture(d.pixels());
  for (auto& v : bg_texture) v = tex(rng);
  std::vector<std::vector<double>> obj_texture;
  for (const auto& o : spec.objects) {
    std::vector<double> t(static_cast<std::size_t>(o.width * o.height));
    for (auto& v : t) v = tex(rng);
    obj_texture.push_back(std::move(t));
  }

  DepthVolume depth(d);
  std::vector<double> intensity(d.voxels());
  for (std::size_t t = 0; t < d.frames; ++t) {
    for (std::size_t y = 0; y < d.height; ++y) {
      for (std::size_t x = 0; x < d.width; ++x) {
        double z = spec.background.offset + spec.background.slope_x * static_cast<double>(x) +
                   spec.background.slope_y * static_cast<double>(y);
        double i = spec.background_intensity + bg_texture[y * d.width + x];
        // Later objects are painted over earlier ones.
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
          const auto& o = spec.objects[k];
          const long ox = static_cast<long>(x) - (o.x + o.vx * static_cast<long>(t));
          const long oy = static_cast<long>(y) - (o.y + o.vy * static_cast<long>(t));
          if (ox < 0 || oy < 0 || ox >= o.width || oy >= o.height) continue;
          z = o.depth;
          i = spec.background_intensity + o.contrast +
              obj_texture[k][static_cast<std::size_t>(oy * o.width + ox)];
        }
        const std::size_t n = d.index(x, y, t);
        depth[n] = z;
        intensity[n] = std::clamp(i, 0.0, 1.0);
      }
    }
  }
  return {IntensityVolume(d, std::move(intensity)), std::move(depth)};
}

}  // namespace dsr
