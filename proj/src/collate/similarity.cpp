#include "collate/similarity.hpp"

#include <algorithm>
#include <limits>

#include "collate/error.hpp"
#include "collate/parallel.hpp"
#include "collate/random.hpp"

namespace collate {

using nlohmann::json;

std::string_view to_string(SimilarityMethod method) noexcept {
  switch (method) {
    case SimilarityMethod::Features: return "features";
    case SimilarityMethod::Matching: return "matching";
    case SimilarityMethod::Trans: return "trans";
  }
  return "features";
}

SimilarityMethod parse_similarity_method(std::string_view text) {
  if (text == "features") return SimilarityMethod::Features;
  if (text == "matching") return SimilarityMethod::Matching;
  if (text == "trans") return SimilarityMethod::Trans;
  fail(ErrorKind::InvalidArgument, "unknown similarity method '" + std::string(text) + "'");
}

void SimilarityConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidArgument, "sigma must be > 0");
  if (ransac_iterations < 1) fail(ErrorKind::InvalidArgument, "ransac_iterations must be >= 1");
  if (scale_tags.empty()) fail(ErrorKind::InvalidArgument, "scale_tags must not be empty");
}

json SimilarityConfig::to_json() const {
  return {{"sigma", sigma},
          {"ransac_iterations", ransac_iterations},
          {"scale_tags", scale_tags},
          {"base_scale", base_scale},
          {"rng_seed", rng_seed}};
}

SimilarityConfig SimilarityConfig::from_json(const json& j) {
  SimilarityConfig cfg;
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.ransac_iterations = j.value("ransac_iterations", cfg.ransac_iterations);
  cfg.scale_tags = j.value("scale_tags", cfg.scale_tags);
  cfg.base_scale = j.value("base_scale", cfg.base_scale);
  cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
  return cfg;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    fail(ErrorKind::DimensionMismatch, "cosine of vectors with " + std::to_string(u.size()) +
                                           " and " + std::to_string(v.size()) + " components");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a = u[k];
    const double b = v[k];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

PreparedMap prepare_map(const FeatureMap& map, int tag) {
  PreparedMap out;
  out.tag = tag;
  out.unit.resize(static_cast<Eigen::Index>(map.cells()), map.channels);
  out.positions.reserve(map.cells());
  for (std::size_t i = 0; i < map.cells(); ++i) {
    const auto cell = map.cell(i);
    double norm = 0.0;
    for (float x : cell) norm += double{x} * x;
    norm = std::sqrt(norm);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::uint32_t k = 0; k < map.channels; ++k) {
      out.unit(row, k) = norm > 0.0 ? cell[k] / norm : 0.0;
    }
    out.positions.push_back(map.position(i));
  }
  return out;
}

double gaussian(double squared, double sigma) {
  return std::exp(-squared / (2.0 * sigma * sigma));
}

// One directional term: (1 / 2N) sum exp(-|T x_src - x_tgt|^2 / 2 sigma^2) w.
double direction_term(const MatchSet& ms, std::size_t source_cells, const AffineTransform* t,
                      double sigma) {
  double sum = 0.0;
  for (const auto& m : ms.matches) {
    const Point2 src = t ? t->apply(m.src_pos) : m.src_pos;
    sum += gaussian(squared_distance(src, m.tgt_pos), sigma) * m.weight;
  }
  return sum / (2.0 * static_cast<double>(source_cells));
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

double s_features(const FeatureMap& a, const FeatureMap& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    fail(ErrorKind::ShapeMismatch, "s_features needs maps of identical shape");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.cells(); ++i) sum += cosine(a.cell(i), b.cell(i));
  return sum / static_cast<double>(a.cells());
}

MatchSet best_matches(const PreparedMap& src, const PreparedPyramid& tgt) {
  const auto n = static_cast<std::size_t>(src.unit.rows());
  constexpr double kLowest = -std::numeric_limits<double>::infinity();
  std::vector<double> best_weight(n, kLowest);
  std::vector<Match> best(n);
  std::vector<bool> found(n, false);

  std::vector<double> row_best(n);
  std::vector<Eigen::Index> row_arg(n);
  for (const PreparedMap& target : tgt.targets) {
    if (target.unit.cols() != src.unit.cols()) {
      fail(ErrorKind::ChannelMismatch, "source and target descriptors differ in channel count");
    }
    const Eigen::MatrixXd gram = src.unit * target.unit.transpose();
    const Eigen::Index m = gram.cols();
    std::fill(row_best.begin(), row_best.end(), kLowest);
    std::fill(row_arg.begin(), row_arg.end(), 0);
    std::vector<Eigen::Index> col_arg(static_cast<std::size_t>(m), 0);
    // Strict comparisons in ascending index order: lowest index wins ties.
    for (Eigen::Index j = 0; j < m; ++j) {
      double col_best = kLowest;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = gram(static_cast<Eigen::Index>(i), j);
        if (g > row_best[i]) {
          row_best[i] = g;
          row_arg[i] = j;
        }
        if (g > col_best) {
          col_best = g;
          col_arg[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(i);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index j = row_arg[i];
      if (col_arg[static_cast<std::size_t>(j)] != static_cast<Eigen::Index>(i)) continue;
      if (found[i] && !(row_best[i] > best_weight[i])) continue;
      found[i] = true;
      best_weight[i] = row_best[i];
      best[i] = Match{src.positions[i], target.positions[static_cast<std::size_t>(j)], row_best[i],
                      i, static_cast<std::size_t>(j), target.tag};
    }
  }

  MatchSet out;
  out.direction.second = tgt.id;
  for (std::size_t i = 0; i < n; ++i) {
    if (found[i]) out.matches.push_back(best[i]);
  }
  return out;
}

MatchSet best_matches(const FeatureMap& src, const FeaturePyramid& tgt,
                      std::span<const int> scale_tags) {
  if (src.channels != tgt.channels()) {
    fail(ErrorKind::ChannelMismatch, "best_matches: channel counts differ");
  }
  PreparedPyramid target;
  target.id = tgt.illustration_id;
  if (scale_tags.empty()) {
    for (const auto& s : tgt.scale_maps) target.targets.push_back(prepare_map(s.map, s.tag));
  } else {
    for (int tag : scale_tags) {
      const FeatureMap* map = tgt.find_scale(tag);
      if (!map) fail(ErrorKind::ShapeMismatch, tgt.illustration_id + " has no scale " + std::to_string(tag));
      target.targets.push_back(prepare_map(*map, tag));
    }
  }
  return best_matches(prepare_map(src, static_cast<int>(src.largest_side())), target);
}

PreparedPyramid prepare_pyramid(const FeaturePyramid& pyramid, const SimilarityConfig& cfg,
                                SimilarityMethod method) {
  PreparedPyramid out;
  out.id = pyramid.illustration_id;
  out.fixed_map = &pyramid.fixed_map;
  if (method == SimilarityMethod::Features) return out;
  const FeatureMap* base = pyramid.find_scale(cfg.base_scale);
  if (!base) {
    fail(ErrorKind::ShapeMismatch, pyramid.illustration_id + " has no base scale " +
                                       std::to_string(cfg.base_scale));
  }
  out.base = prepare_map(*base, cfg.base_scale);
  for (int tag : cfg.scale_tags) {
    const FeatureMap* map = pyramid.find_scale(tag);
    if (!map) {
      fail(ErrorKind::ShapeMismatch, pyramid.illustration_id + " has no scale " + std::to_string(tag));
    }
    out.targets.push_back(prepare_map(*map, tag));
  }
  return out;
}

double ransac_objective(const MatchSet& matches, const AffineTransform& t, double sigma) {
  double sum = 0.0;
  for (const auto& m : matches.matches) {
    sum += gaussian(squared_distance(t.apply(m.src_pos), m.tgt_pos), sigma) * m.weight;
  }
  return sum;
}

namespace {

// Exact affine map through three correspondences; false when the source
// points are (numerically) collinear.
bool solve_affine(const Match& m0, const Match& m1, const Match& m2, AffineTransform& out) {
  const double dx1 = m1.src_pos.x - m0.src_pos.x, dy1 = m1.src_pos.y - m0.src_pos.y;
  const double dx2 = m2.src_pos.x - m0.src_pos.x, dy2 = m2.src_pos.y - m0.src_pos.y;
  // Equal to the determinant of the 3x3 system [x y 1].
  const double det = dx1 * dy2 - dx2 * dy1;
  if (std::abs(det) < 1e-12) return false;
  const double tx1 = m1.tgt_pos.x - m0.tgt_pos.x, tx2 = m2.tgt_pos.x - m0.tgt_pos.x;
  const double ty1 = m1.tgt_pos.y - m0.tgt_pos.y, ty2 = m2.tgt_pos.y - m0.tgt_pos.y;
  out.a = (tx1 * dy2 - tx2 * dy1) / det;
  out.b = (dx1 * tx2 - dx2 * tx1) / det;
  out.c = (ty1 * dy2 - ty2 * dy1) / det;
  out.d = (dx1 * ty2 - dx2 * ty1) / det;
  out.e = m0.tgt_pos.x - out.a * m0.src_pos.x - out.b * m0.src_pos.y;
  out.f = m0.tgt_pos.y - out.c * m0.src_pos.x - out.d * m0.src_pos.y;
  return out.is_finite();
}

}  // namespace

AffineTransform ransac_affine(const MatchSet& matches, const SimilarityConfig& cfg) {
  cfg.validate();
  AffineTransform best = AffineTransform::identity();
  const std::size_t n = matches.matches.size();
  if (n < 3) return best;
  // The identity competes like any hypothesis, so the result never scores
  // below it.
  double best_score = ransac_objective(matches, best, cfg.sigma);
  Rng rng(cfg.rng_seed);
  for (int it = 0; it < cfg.ransac_iterations; ++it) {
    const std::size_t i0 = rng.below(n);
    std::size_t i1 = rng.below(n - 1);
    if (i1 >= i0) ++i1;
    std::size_t i2 = rng.below(n - 2);
    for (std::size_t taken : {std::min(i0, i1), std::max(i0, i1)}) {
      if (i2 >= taken) ++i2;
    }
    AffineTransform candidate;
    if (!solve_affine(matches.matches[i0], matches.matches[i1], matches.matches[i2], candidate)) {
      continue;
    }
    const double score = ransac_objective(matches, candidate, cfg.sigma);
    if (score > best_score) {
      best_score = score;
      best = candidate;
    }
  }
  return best;
}

std::uint64_t direction_seed(std::uint64_t base_seed, std::string_view src_id,
                             std::string_view tgt_id) noexcept {
  const std::uint64_t hs = fnv1a64(src_id);
  const std::uint64_t ht = fnv1a64(tgt_id);
  const std::uint64_t pair = mix64(mix64(base_seed ^ std::min(hs, ht)) ^ std::max(hs, ht));
  return pair ^ (src_id > tgt_id ? 1u : 0u);
}

double pair_similarity(const PreparedPyramid& a, const PreparedPyramid& b, SimilarityMethod method,
                       const SimilarityConfig& cfg) {
  if (method == SimilarityMethod::Features) return s_features(*a.fixed_map, *b.fixed_map);

  const auto term = [&](const PreparedPyramid& src, const PreparedPyramid& tgt) {
    MatchSet ms = best_matches(src.base, tgt);
    ms.direction.first = src.id;
    const auto cells = static_cast<std::size_t>(src.base.unit.rows());
    if (method == SimilarityMethod::Matching) return direction_term(ms, cells, nullptr, cfg.sigma);
    SimilarityConfig directional = cfg;
    directional.rng_seed = direction_seed(cfg.rng_seed, src.id, tgt.id);
    const AffineTransform t = ransac_affine(ms, directional);
    return direction_term(ms, cells, &t, cfg.sigma);
  };
  return term(a, b) + term(b, a);
}

double s_matching(const FeaturePyramid& a, const FeaturePyramid& b, const SimilarityConfig& cfg) {
  cfg.validate();
  return pair_similarity(prepare_pyramid(a, cfg, SimilarityMethod::Matching),
                         prepare_pyramid(b, cfg, SimilarityMethod::Matching),
                         SimilarityMethod::Matching, cfg);
}

double s_trans(const FeaturePyramid& a, const FeaturePyramid& b, const SimilarityConfig& cfg) {
  cfg.validate();
  return pair_similarity(prepare_pyramid(a, cfg, SimilarityMethod::Trans),
                         prepare_pyramid(b, cfg, SimilarityMethod::Trans), SimilarityMethod::Trans,
                         cfg);
}

SimilarityMatrix similarity_matrix(const ManuscriptFeatures& a, const ManuscriptFeatures& b,
                                   SimilarityMethod method, const SimilarityConfig& cfg,
                                   unsigned workers) {
  cfg.validate();
  if (!a.pyramids.empty() && !b.pyramids.empty() && a.channels() != b.channels()) {
    fail(ErrorKind::ChannelMismatch, a.manuscript_id + " has " + std::to_string(a.channels()) +
                                         " channels, " + b.manuscript_id + " has " +
                                         std::to_string(b.channels()));
  }
  std::vector<PreparedPyramid> prepared(a.size() + b.size());
  parallel_for(prepared.size(), workers, [&](std::size_t k) {
    const FeaturePyramid& p = k < a.size() ? a.pyramids[k] : b.pyramids[k - a.size()];
    prepared[k] = prepare_pyramid(p, cfg, method);
  });

  SimilarityMatrix out(a.size(), b.size(), Provenance::Raw);
  out.method_tag = std::string(to_string(method));
  out.config_echo = cfg.to_json();
  out.config_echo["manuscripts"] = {a.manuscript_id, b.manuscript_id};
  parallel_for(out.values.size(), workers, [&](std::size_t k) {
    const std::size_t i = k / out.cols;
    const std::size_t j = k % out.cols;
    try {
      out.values[k] = pair_similarity(prepared[i], prepared[a.size() + j], method, cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), "pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
    }
  });
  return out;
}

}  // namespace collate
