#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "collate/geometry.hpp"

namespace collate {

inline constexpr char kFmapMagic[4] = {'F', 'M', 'A', 'P'};
inline constexpr std::uint32_t kFmapVersion = 1;
inline constexpr std::size_t kFmapHeaderBytes = 24;

// H x W grid of C-dimensional descriptors, row-major [H][W][C].
struct FeatureMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(std::uint32_t h, std::uint32_t w, std::uint32_t c)
      : height(h), width(w), channels(c), data(std::size_t{h} * w * c, 0.0f) {}

  std::size_t cells() const noexcept { return std::size_t{height} * width; }
  std::uint32_t largest_side() const noexcept { return height > width ? height : width; }

  std::span<const float> cell(std::size_t index) const {
    return {data.data() + index * channels, channels};
  }
  std::span<float> cell(std::size_t index) {
    return {data.data() + index * channels, channels};
  }

  // Cell centre in normalized grid coordinates: the largest side spans [0,1],
  // so the same image location has the same coordinates at every scale.
  Point2 position(std::size_t index) const noexcept;

  // Throws ShapeMismatch / NonFinite when the invariants do not hold.
  void validate() const;

  bool operator==(const FeatureMap&) const = default;
};

struct ScaleMap {
  int tag = 0;
  FeatureMap map;
};

struct FeaturePyramid {
  std::string illustration_id;
  FeatureMap fixed_map;
  std::vector<ScaleMap> scale_maps;  // strictly increasing tags

  const FeatureMap* find_scale(int tag) const noexcept;
  std::uint32_t channels() const noexcept { return fixed_map.channels; }
  void validate() const;
};

struct ManuscriptFeatures {
  std::string manuscript_id;
  std::vector<FeaturePyramid> pyramids;  // manifest order is the canonical index order

  std::size_t size() const noexcept { return pyramids.size(); }
  std::uint32_t channels() const noexcept {
    return pyramids.empty() ? 0 : pyramids.front().channels();
  }
  void validate() const;
};

void write_feature_map(const FeatureMap& map, std::ostream& out);
FeatureMap read_feature_map(std::istream& in);

void write_feature_map_file(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap read_feature_map_file(const std::filesystem::path& path);

// Loads a manuscript manifest; map paths are resolved against the manifest's
// directory.
ManuscriptFeatures load_manuscript(const std::filesystem::path& manifest_path);

// Writes every map below `directory` and a manifest named `manifest.json`;
// returns the manifest path.
std::filesystem::path save_manuscript(const ManuscriptFeatures& manuscript,
                                      const std::filesystem::path& directory);

}  // namespace collate
