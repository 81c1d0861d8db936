#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "collate/feature_store.hpp"
#include "collate/geometry.hpp"
#include "collate/matrix.hpp"

namespace collate {

enum class SimilarityMethod { Features, Matching, Trans };

std::string_view to_string(SimilarityMethod method) noexcept;
SimilarityMethod parse_similarity_method(std::string_view text);

struct SimilarityConfig {
  // Gaussian width on match displacements, in normalized grid coordinates.
  double sigma = 1.0 / std::sqrt(50.0);
  int ransac_iterations = 100;
  std::vector<int> scale_tags{18, 19, 20, 21, 22};
  int base_scale = 20;
  std::uint64_t rng_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SimilarityConfig from_json(const nlohmann::json& j);
};

struct Match {
  Point2 src_pos;
  Point2 tgt_pos;
  double weight = 0.0;  // cosine of the two descriptors
  std::size_t src_index = 0;
  std::size_t tgt_index = 0;
  int tgt_scale_tag = 0;
};

struct MatchSet {
  std::pair<std::string, std::string> direction;  // (source id, target id)
  std::vector<Match> matches;                     // ascending src_index, at most one each
};

// u.v / (|u||v|), 0 when either norm is 0.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

double s_features(const FeatureMap& a, const FeatureMap& b);

// Reciprocal nearest neighbours of every source descriptor against each
// target scale; the best reciprocal match over scales is kept. An empty
// `scale_tags` uses every scale of the target.
MatchSet best_matches(const FeatureMap& src, const FeaturePyramid& tgt,
                      std::span<const int> scale_tags = {});

double s_matching(const FeaturePyramid& a, const FeaturePyramid& b, const SimilarityConfig& cfg);

// Sum over matches of exp(-|T x_src - x_tgt|^2 / 2 sigma^2) * weight.
double ransac_objective(const MatchSet& matches, const AffineTransform& t, double sigma);

AffineTransform ransac_affine(const MatchSet& matches, const SimilarityConfig& cfg);

// RANSAC seed for the direction src -> tgt; swapping the arguments of a
// symmetric score leaves the seed of each direction unchanged.
std::uint64_t direction_seed(std::uint64_t base_seed, std::string_view src_id,
                             std::string_view tgt_id) noexcept;

double s_trans(const FeaturePyramid& a, const FeaturePyramid& b, const SimilarityConfig& cfg);

// Unit-normalized descriptors of one pyramid, laid out for matrix products.
struct PreparedMap {
  Eigen::MatrixXd unit;  // cells x channels
  std::vector<Point2> positions;
  int tag = 0;
};

struct PreparedPyramid {
  std::string id;
  const FeatureMap* fixed_map = nullptr;
  PreparedMap base;
  std::vector<PreparedMap> targets;  // in cfg.scale_tags order
};

PreparedPyramid prepare_pyramid(const FeaturePyramid& pyramid, const SimilarityConfig& cfg,
                                SimilarityMethod method);

MatchSet best_matches(const PreparedMap& src, const PreparedPyramid& tgt);
double pair_similarity(const PreparedPyramid& a, const PreparedPyramid& b, SimilarityMethod method,
                       const SimilarityConfig& cfg);

// Entry (i, j) = method(A[i], B[j]). The result does not depend on `workers`.
SimilarityMatrix similarity_matrix(const ManuscriptFeatures& a, const ManuscriptFeatures& b,
                                   SimilarityMethod method, const SimilarityConfig& cfg,
                                   unsigned workers = 1);

}  // namespace collate
