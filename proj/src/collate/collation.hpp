#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "collate/correspondence.hpp"
#include "collate/matrix.hpp"

namespace collate {

enum class Direction { Rows, Cols };

CorrespondenceSet argmax_correspondences(const SimilarityMatrix& s, Direction direction);

// Repeatedly accepts the largest remaining entry whose row and column are
// both unused, until min(rows, cols) pairs are taken.
CorrespondenceSet greedy_one_to_one(const SimilarityMatrix& s);

struct Ranked {
  std::size_t index = 0;
  double score = 0.0;
  bool operator==(const Ranked&) const = default;
};

// Indices along the other axis that are excluded from a top_k answer.
using IndexMask = std::set<std::size_t>;

std::vector<Ranked> top_k(const SimilarityMatrix& s, std::size_t index, Direction direction,
                          std::size_t k, const IndexMask* mask = nullptr);

struct EvalReport {
  std::optional<double> accuracy_dir1;
  std::optional<double> accuracy_dir2;
  std::optional<double> accuracy_avg;
  std::optional<double> recall_at_n;
  std::optional<double> map_at_r;
  std::map<std::size_t, double> nn_recall;
  std::size_t n_annotated = 0;

  nlohmann::json to_json() const;
  // Aligned two-column table; each value printed as "70.5 (295)".
  std::string to_text(const std::string& label) const;
};

// Percent of ground-truth pairs (i, j) whose direction-1 prediction for i is
// j, the same from the column side for direction 2, and their mean.
// Undefined (empty optionals) when the ground truth is empty.
EvalReport accuracy(const CorrespondenceSet& pred_dir1, const CorrespondenceSet& pred_dir2,
                    const CorrespondenceSet& gt);

// Fraction of the |gt| best-scored entries that are ground-truth pairs. With
// `one_to_one` the ranking is the greedy one-to-one order instead.
double recall_at_n(const SimilarityMatrix& s, const CorrespondenceSet& gt, bool one_to_one = false);

// Mean over annotated query rows of the average precision of that row's
// ranking, normalized by the number of ground-truth partners R of the row.
double map_at_r(const SimilarityMatrix& s, const CorrespondenceSet& gt);

std::map<std::size_t, double> nn_recall(const SimilarityMatrix& s, const CorrespondenceSet& gt,
                                        const std::vector<std::size_t>& ks);

}  // namespace collate
