#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "collate/correspondence.hpp"
#include "collate/feature_store.hpp"
#include "collate/matrix.hpp"
#include "collate/random.hpp"

namespace fixture {

inline collate::FeatureMap random_map(collate::Rng& rng, std::uint32_t h, std::uint32_t w, std::uint32_t c) {
  collate::FeatureMap m;
  m.height = h;
  m.width = w;
  m.channels = c;
  m.data.resize(std::size_t(h) * w * c);
  for (auto& v : m.data) v = static_cast<float>(rng.normal());
  return m;
}

// Shape of a scale map whose longer side is `tag`; `landscape` picks which
// side that is, `ratio` in (0, 1] shrinks the other one.
inline std::pair<std::uint32_t, std::uint32_t> scale_shape(int tag, double ratio, bool landscape) {
  const auto other = static_cast<std::uint32_t>(std::max(1.0, std::round(tag * ratio)));
  return landscape ? std::pair{other, std::uint32_t(tag)} : std::pair{std::uint32_t(tag), other};
}

inline collate::FeaturePyramid random_pyramid(collate::Rng& rng, const std::string& id, const std::vector<int>& tags,
                                              std::uint32_t channels, std::uint32_t fixed_side = 3) {
  collate::FeaturePyramid p;
  p.illustration_id = id;
  p.fixed_map = random_map(rng, fixed_side, fixed_side, channels);
  const double ratio = 0.5 + 0.5 * rng.uniform();
  const bool landscape = rng.uniform() < 0.5;
  for (int t : tags) {
    const auto [h, w] = scale_shape(t, ratio, landscape);
    p.scale_maps.push_back({t, random_map(rng, h, w, channels)});
  }
  return p;
}

// Values drawn from a small set when `ties` is on, so equal scores occur.
inline collate::SimilarityMatrix random_matrix(collate::Rng& rng, std::size_t rows, std::size_t cols,
                                               bool ties = false, double lo = 0.0, double hi = 1.0) {
  collate::SimilarityMatrix m(rows, cols);
  for (auto& v : m.values) {
    v = ties ? lo + (hi - lo) * double(rng.below(5)) / 4.0 : lo + (hi - lo) * rng.uniform();
  }
  return m;
}

// Ground truth: a random partial matching (one-to-one).
inline collate::CorrespondenceSet random_gt(collate::Rng& rng, std::size_t rows, std::size_t cols,
                                            std::size_t count) {
  std::vector<std::size_t> r(rows), c(cols);
  std::iota(r.begin(), r.end(), std::size_t{0});
  std::iota(c.begin(), c.end(), std::size_t{0});
  for (std::size_t k = rows; k > 1; --k) std::swap(r[k - 1], r[rng.below(k)]);
  for (std::size_t k = cols; k > 1; --k) std::swap(c[k - 1], c[rng.below(k)]);
  collate::CorrespondenceSet gt;
  for (std::size_t k = 0; k < std::min({count, rows, cols}); ++k) {
    gt.entries.push_back({r[k], c[k], collate::MatchStatus::Confirmed, 1.0, collate::MatchSource::Manual});
  }
  return gt;
}

// Temporary directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& stem) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixture
