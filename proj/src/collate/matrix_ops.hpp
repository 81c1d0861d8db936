#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "collate/matrix.hpp"

namespace collate {

enum class NormalizationKind { Softmax, SoftmaxOverAvg, SoftmaxOverMax, OverAvg, OverMax };
enum class Combine { Sum, Hadamard };

std::string_view to_string(NormalizationKind kind) noexcept;
std::string_view to_string(Combine combine) noexcept;
NormalizationKind parse_normalization_kind(std::string_view text);
Combine parse_combine(std::string_view text);

inline bool is_softmax(NormalizationKind kind) noexcept {
  return kind == NormalizationKind::Softmax || kind == NormalizationKind::SoftmaxOverAvg ||
         kind == NormalizationKind::SoftmaxOverMax;
}

struct NormalizationScheme {
  NormalizationKind kind = NormalizationKind::OverMax;
  // Softmax temperature. Only meaningful for the softmax kinds; 50 is a
  // placeholder, not a tuned value.
  std::optional<double> lambda;
  Combine combine = Combine::Sum;

  static NormalizationScheme over_max() { return {}; }
  static NormalizationScheme softmax_kind(NormalizationKind kind, double lambda = 50.0) {
    return {kind, lambda, Combine::Sum};
  }

  void validate() const;
  nlohmann::json to_json() const;
  static NormalizationScheme from_json(const nlohmann::json& j);
};

// Row-wise (R) and column-wise (C) normalized matrices before combination.
struct RowColumnNormalized {
  SimilarityMatrix rows;
  SimilarityMatrix cols;
  // Indices of rows / columns whose max or mean was 0 and were zeroed.
  std::vector<std::size_t> zero_rows;
  std::vector<std::size_t> zero_cols;
};

RowColumnNormalized normalize_parts(const SimilarityMatrix& s, const NormalizationScheme& scheme);

struct NormalizeResult {
  SimilarityMatrix matrix;
  std::vector<std::string> warnings;
};

NormalizeResult normalize_with_warnings(const SimilarityMatrix& s, const NormalizationScheme& scheme);
SimilarityMatrix normalize(const SimilarityMatrix& s, const NormalizationScheme& scheme);

enum class SeedOrigin { TwoCycle, ThreeCycle, Confirmed, Mixed };
std::string_view to_string(SeedOrigin origin) noexcept;

struct SeedSet {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  SeedOrigin origin = SeedOrigin::Mixed;

  std::size_t size() const noexcept { return pairs.size(); }
  bool contains(std::size_t i, std::size_t j) const { return pairs.count({i, j}) != 0; }
};

// Index of the maximum of row i / column j; lowest index on ties.
std::size_t row_argmax(const SimilarityMatrix& m, std::size_t i);
std::size_t col_argmax(const SimilarityMatrix& m, std::size_t j);

SeedSet two_cycle_seeds(const SimilarityMatrix& n);

struct ThreeCycleSeeds {
  SeedSet ab;
  SeedSet bc;
  SeedSet ac;
};

ThreeCycleSeeds three_cycle_seeds(const SimilarityMatrix& n_ab, const SimilarityMatrix& n_bc,
                                  const SimilarityMatrix& n_ac);

struct PropagationConfig {
  double alpha = 0.25;
  double sigma_p = 5.0;  // in index units

  void validate() const;
  nlohmann::json to_json() const;
  static PropagationConfig from_json(const nlohmann::json& j);
};

SimilarityMatrix propagate(const SimilarityMatrix& n, const SeedSet& seeds,
                           const PropagationConfig& cfg);

nlohmann::json seeds_to_json(const SeedSet& seeds);
SeedSet seeds_from_json(const nlohmann::json& j);

}  // namespace collate
