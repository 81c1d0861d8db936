#include "collate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collate/error.hpp"

namespace collate::synth {

Texture Texture::random(std::uint32_t side, std::uint32_t channels, Rng& rng) {
  Texture t;
  t.side = side;
  t.channels = channels;
  t.values.resize(std::size_t{side} * side * channels);
  for (auto& v : t.values) v = rng.normal();
  return t;
}

void Texture::sample(Point2 p, std::span<double> out) const {
  const double max_coord = static_cast<double>(side - 1);
  const double u = std::clamp(p.x * side - 0.5, 0.0, max_coord);
  const double v = std::clamp(p.y * side - 0.5, 0.0, max_coord);
  const auto c0 = static_cast<std::uint32_t>(u);
  const auto r0 = static_cast<std::uint32_t>(v);
  const std::uint32_t c1 = std::min(c0 + 1, side - 1);
  const std::uint32_t r1 = std::min(r0 + 1, side - 1);
  const double fu = u - c0;
  const double fv = v - r0;
  auto at = [&](std::uint32_t r, std::uint32_t c) {
    return values.data() + (std::size_t{r} * side + c) * channels;
  };
  const double* v00 = at(r0, c0);
  const double* v01 = at(r0, c1);
  const double* v10 = at(r1, c0);
  const double* v11 = at(r1, c1);
  for (std::uint32_t k = 0; k < channels; ++k) {
    out[k] = (1 - fv) * ((1 - fu) * v00[k] + fu * v01[k]) + fv * ((1 - fu) * v10[k] + fu * v11[k]);
  }
}

namespace {

void store_unit(std::span<const double> v, std::span<float> out) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = static_cast<float>(norm > 0.0 ? v[k] / norm : 0.0);
  }
}

FeatureMap render_map(const Texture& texture, const AffineTransform& warp, std::uint32_t height,
                      std::uint32_t width, double y_scale) {
  FeatureMap map(height, width, texture.channels);
  std::vector<double> buffer(texture.channels);
  for (std::size_t idx = 0; idx < map.cells(); ++idx) {
    Point2 p = map.position(idx);
    p.y *= y_scale;
    texture.sample(warp.apply(p), buffer);
    store_unit(buffer, map.cell(idx));
  }
  return map;
}

}  // namespace

FeaturePyramid render_pyramid(const Texture& texture, const std::string& id,
                              const AffineTransform& warp, const RenderOptions& options) {
  if (options.aspect <= 0.0 || options.aspect > 1.0) {
    fail(ErrorKind::InvalidArgument, "render aspect must be in (0, 1]");
  }
  FeaturePyramid pyramid;
  pyramid.illustration_id = id;
  // The fixed map squashes the whole illustration into a square grid.
  pyramid.fixed_map =
      render_map(texture, warp, options.fixed_side, options.fixed_side, options.aspect);
  for (int tag : options.scale_tags) {
    if (tag <= 0) fail(ErrorKind::InvalidArgument, "scale tags must be positive");
    const auto width = static_cast<std::uint32_t>(tag);
    const auto height =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(tag * options.aspect)));
    pyramid.scale_maps.push_back({tag, render_map(texture, warp, height, width, 1.0)});
  }
  return pyramid;
}

namespace {

void perturb_map(FeatureMap& map, double magnitude, Rng& rng) {
  const double per_component = magnitude / std::sqrt(static_cast<double>(map.channels));
  for (auto& v : map.data) v = static_cast<float>(v + per_component * rng.normal());
}

}  // namespace

FeaturePyramid perturb_pyramid(const FeaturePyramid& pyramid, double magnitude, Rng& rng) {
  if (magnitude < 0.0) fail(ErrorKind::InvalidArgument, "noise magnitude must be >= 0");
  FeaturePyramid out = pyramid;
  if (magnitude == 0.0) return out;
  perturb_map(out.fixed_map, magnitude, rng);
  for (auto& s : out.scale_maps) perturb_map(s.map, magnitude, rng);
  return out;
}

std::vector<std::size_t> locality_permutation(std::size_t n, std::size_t max_shift,
                                              std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  const std::size_t block = max_shift + 1;
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t end = std::min(n, start + block);
    for (std::size_t k = end - 1; k > start; --k) {
      std::swap(perm[k], perm[start + rng.below(k - start + 1)]);
    }
  }
  return perm;
}

namespace {

std::string padded(std::string_view prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return std::string(prefix) + digits;
}

}  // namespace

SynthPair synth_manuscripts(const SynthOptions& options) {
  const std::size_t n = options.n_illustrations;
  if (n < 1) fail(ErrorKind::InvalidArgument, "synth needs at least one illustration");
  if (options.channels < 1) fail(ErrorKind::InvalidArgument, "synth needs at least one channel");
  if (options.texture_side < 1) fail(ErrorKind::InvalidArgument, "texture side must be >= 1");
  if (options.style_noise < 0.0) fail(ErrorKind::InvalidArgument, "style noise must be >= 0");
  if (options.hub_strength < 0.0 || options.hub_strength > 1.0) {
    fail(ErrorKind::InvalidArgument, "hub strength must be in [0, 1]");
  }
  std::vector<std::size_t> perm = options.permutation;
  if (perm.empty()) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
  }
  if (perm.size() != n) fail(ErrorKind::InvalidArgument, "permutation length differs from n");
  {
    std::vector<bool> hit(n, false);
    for (std::size_t p : perm) {
      if (p >= n || hit[p]) fail(ErrorKind::InvalidArgument, "argument is not a permutation");
      hit[p] = true;
    }
  }

  Rng rng(options.seed);
  const Texture shared = Texture::random(options.texture_side, options.channels, rng);

  SynthPair out;
  out.a.manuscript_id = "A";
  out.b.manuscript_id = "B";
  out.b.pyramids.resize(n);
  out.truth.pair_id = {"A", "B"};
  for (std::size_t i = 0; i < n; ++i) {
    Texture own = Texture::random(options.texture_side, options.channels, rng);
    const double u = rng.uniform();
    const double hub = options.hub_strength * u * u;
    if (hub > 0.0) {
      const double keep = std::sqrt(1.0 - hub);
      const double mix = std::sqrt(hub);
      for (std::size_t k = 0; k < own.values.size(); ++k) {
        own.values[k] = keep * own.values[k] + mix * shared.values[k];
      }
    }
    FeaturePyramid pa =
        render_pyramid(own, padded("A-", i), AffineTransform::identity(), options.render);
    FeaturePyramid pb = perturb_pyramid(pa, options.style_noise, rng);
    pb.illustration_id = padded("B-", perm[i]);
    out.b.pyramids[perm[i]] = std::move(pb);
    out.a.pyramids.push_back(std::move(pa));
    out.truth.entries.push_back({i, perm[i], MatchStatus::Confirmed, 1.0, MatchSource::Manual});
  }
  return out;
}

}  // namespace collate::synth
