#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collate/correspondence.hpp"
#include "collate/feature_store.hpp"
#include "collate/geometry.hpp"
#include "collate/random.hpp"

namespace collate::synth {

// A continuous descriptor field over the unit square, stored as a side x side
// grid and sampled bilinearly.
struct Texture {
  std::uint32_t side = 0;
  std::uint32_t channels = 0;
  std::vector<double> values;  // [side][side][channels]

  static Texture random(std::uint32_t side, std::uint32_t channels, Rng& rng);
  void sample(Point2 p, std::span<double> out) const;
};

struct RenderOptions {
  std::vector<int> scale_tags{18, 19, 20, 21, 22};
  std::uint32_t fixed_side = 16;
  double aspect = 1.0;  // height / width, <= 1 keeps width as the largest side
};

// Renders a pyramid whose descriptor at normalized position p is the unit
// vector texture(warp(p)).
FeaturePyramid render_pyramid(const Texture& texture, const std::string& id,
                              const AffineTransform& warp, const RenderOptions& options);

// Adds i.i.d. Gaussian noise of expected norm `magnitude` to every descriptor.
FeaturePyramid perturb_pyramid(const FeaturePyramid& pyramid, double magnitude, Rng& rng);

// Permutation where every index moves by at most `max_shift` (shuffles within
// consecutive blocks of max_shift + 1).
std::vector<std::size_t> locality_permutation(std::size_t n, std::size_t max_shift,
                                              std::uint64_t seed);

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t n_illustrations = 1;
  std::uint32_t channels = 32;
  double style_noise = 0.0;
  // permutation[i] = index in B of A's i-th illustration; empty means identity.
  std::vector<std::size_t> permutation;
  RenderOptions render;
  std::uint32_t texture_side = 12;
  // Weight of a texture shared by all illustrations. Each illustration draws
  // its own share in [0, hub_strength], so some pyramids resemble everything.
  double hub_strength = 0.0;
};

struct SynthPair {
  ManuscriptFeatures a;
  ManuscriptFeatures b;
  CorrespondenceSet truth;
};

SynthPair synth_manuscripts(const SynthOptions& options);

}  // namespace collate::synth
