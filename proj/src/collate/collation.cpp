#include "collate/collation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "collate/error.hpp"
#include "collate/matrix_ops.hpp"

namespace collate {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> pair_of(const SimilarityMatrix& s) {
  const auto it = s.config_echo.find("manuscripts");
  if (it != s.config_echo.end() && it->is_array() && it->size() == 2) {
    return {(*it)[0].get<std::string>(), (*it)[1].get<std::string>()};
  }
  return {};
}

// Entry indices (row-major) ordered by descending score, then lowest (i, j).
std::vector<std::size_t> global_order(const SimilarityMatrix& s) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return s.values[x] > s.values[y]; });
  return order;
}

void require_gt(const CorrespondenceSet& gt, const SimilarityMatrix& s, const char* metric) {
  if (gt.empty()) fail(ErrorKind::Empty, std::string(metric) + " needs a non-empty ground truth");
  for (const auto& e : gt.entries) {
    if (e.i >= s.rows || e.j >= s.cols) {
      fail(ErrorKind::OutOfRange, std::string(metric) + ": ground-truth pair (" +
                                      std::to_string(e.i) + ", " + std::to_string(e.j) +
                                      ") outside the matrix");
    }
  }
}

// 1-based position of column j in row i's descending ranking.
std::size_t rank_in_row(const SimilarityMatrix& s, std::size_t i, std::size_t j) {
  const double v = s.at(i, j);
  std::size_t rank = 1;
  for (std::size_t k = 0; k < s.cols; ++k) {
    const double w = s.at(i, k);
    if (w > v || (w == v && k < j)) ++rank;
  }
  return rank;
}

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

CorrespondenceSet argmax_correspondences(const SimilarityMatrix& s, Direction direction) {
  CorrespondenceSet out;
  out.pair_id = pair_of(s);
  if (s.rows == 0 || s.cols == 0) return out;
  if (direction == Direction::Rows) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      const std::size_t j = row_argmax(s, i);
      out.entries.push_back({i, j, MatchStatus::Predicted, s.at(i, j), MatchSource::Argmax});
    }
  } else {
    for (std::size_t j = 0; j < s.cols; ++j) {
      const std::size_t i = col_argmax(s, j);
      out.entries.push_back({i, j, MatchStatus::Predicted, s.at(i, j), MatchSource::Argmax});
    }
  }
  return out;
}

CorrespondenceSet greedy_one_to_one(const SimilarityMatrix& s) {
  CorrespondenceSet out;
  out.pair_id = pair_of(s);
  const std::size_t target = std::min(s.rows, s.cols);
  std::vector<bool> row_used(s.rows, false), col_used(s.cols, false);
  for (std::size_t k : global_order(s)) {
    if (out.size() == target) break;
    const std::size_t i = k / s.cols;
    const std::size_t j = k % s.cols;
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = true;
    out.entries.push_back({i, j, MatchStatus::Predicted, s.values[k], MatchSource::Greedy});
  }
  return out;
}

std::vector<Ranked> top_k(const SimilarityMatrix& s, std::size_t index, Direction direction,
                          std::size_t k, const IndexMask* mask) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "top_k needs k >= 1");
  const std::size_t lines = direction == Direction::Rows ? s.rows : s.cols;
  if (index >= lines) {
    fail(ErrorKind::OutOfRange, "index " + std::to_string(index) + " outside " +
                                    std::to_string(lines) + " illustrations");
  }
  const std::size_t length = direction == Direction::Rows ? s.cols : s.rows;
  std::vector<Ranked> all;
  all.reserve(length);
  for (std::size_t other = 0; other < length; ++other) {
    if (mask && mask->count(other)) continue;
    const double v = direction == Direction::Rows ? s.at(index, other) : s.at(other, index);
    all.push_back({other, v});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Ranked& x, const Ranked& y) { return x.score > y.score; });
  if (all.size() > k) all.resize(k);
  return all;
}

EvalReport accuracy(const CorrespondenceSet& pred_dir1, const CorrespondenceSet& pred_dir2,
                    const CorrespondenceSet& gt) {
  EvalReport report;
  report.n_annotated = gt.size();
  if (gt.empty()) return report;
  std::size_t hits1 = 0, hits2 = 0;
  for (const auto& e : gt.entries) {
    if (pred_dir1.prediction_for_row(e.i) == e.j) ++hits1;
    if (pred_dir2.prediction_for_col(e.j) == e.i) ++hits2;
  }
  report.accuracy_dir1 = percent(hits1, gt.size());
  report.accuracy_dir2 = percent(hits2, gt.size());
  report.accuracy_avg = (*report.accuracy_dir1 + *report.accuracy_dir2) / 2.0;
  return report;
}

double recall_at_n(const SimilarityMatrix& s, const CorrespondenceSet& gt, bool one_to_one) {
  require_gt(gt, s, "recall@N");
  std::set<std::pair<std::size_t, std::size_t>> truth;
  for (const auto& e : gt.entries) truth.emplace(e.i, e.j);
  const std::size_t n = gt.size();
  std::size_t hits = 0;
  if (one_to_one) {
    const CorrespondenceSet greedy = greedy_one_to_one(s);
    for (std::size_t r = 0; r < std::min(n, greedy.size()); ++r) {
      hits += truth.count({greedy.entries[r].i, greedy.entries[r].j});
    }
  } else {
    const auto order = global_order(s);
    for (std::size_t r = 0; r < std::min(n, order.size()); ++r) {
      hits += truth.count({order[r] / s.cols, order[r] % s.cols});
    }
  }
  return percent(hits, n);
}

double map_at_r(const SimilarityMatrix& s, const CorrespondenceSet& gt) {
  require_gt(gt, s, "mAP@R");
  std::map<std::size_t, std::set<std::size_t>> partners;
  for (const auto& e : gt.entries) partners[e.i].insert(e.j);
  double total = 0.0;
  for (const auto& [i, relevant] : partners) {
    std::vector<std::size_t> ranks;
    for (std::size_t j : relevant) ranks.push_back(rank_in_row(s, i, j));
    std::sort(ranks.begin(), ranks.end());
    double ap = 0.0;
    for (std::size_t h = 0; h < ranks.size(); ++h) {
      ap += static_cast<double>(h + 1) / static_cast<double>(ranks[h]);
    }
    total += ap / static_cast<double>(relevant.size());
  }
  return 100.0 * total / static_cast<double>(partners.size());
}

std::map<std::size_t, double> nn_recall(const SimilarityMatrix& s, const CorrespondenceSet& gt,
                                        const std::vector<std::size_t>& ks) {
  require_gt(gt, s, "nn recall");
  std::vector<std::size_t> ranks;
  ranks.reserve(gt.size());
  for (const auto& e : gt.entries) ranks.push_back(rank_in_row(s, e.i, e.j));
  std::map<std::size_t, double> out;
  for (std::size_t k : ks) {
    if (k < 1) fail(ErrorKind::InvalidArgument, "nn recall needs k >= 1");
    const auto hits = static_cast<std::size_t>(
        std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; }));
    out[k] = percent(hits, gt.size());
  }
  return out;
}

json EvalReport::to_json() const {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  json nn = json::object();
  for (const auto& [k, v] : nn_recall) nn[std::to_string(k)] = v;
  return {{"accuracy_dir1", opt(accuracy_dir1)},
          {"accuracy_dir2", opt(accuracy_dir2)},
          {"accuracy_avg", opt(accuracy_avg)},
          {"recall_at_n", opt(recall_at_n)},
          {"map_at_r", opt(map_at_r)},
          {"nn_recall", nn},
          {"n_annotated", n_annotated}};
}

std::string EvalReport::to_text(const std::string& label) const {
  std::vector<std::pair<std::string, std::optional<double>>> rows;
  if (accuracy_avg || accuracy_dir1) {
    rows.emplace_back("accuracy", accuracy_avg);
    rows.emplace_back("accuracy dir1", accuracy_dir1);
    rows.emplace_back("accuracy dir2", accuracy_dir2);
  }
  if (recall_at_n) rows.emplace_back("recall@N", recall_at_n);
  if (map_at_r) rows.emplace_back("mAP@R", map_at_r);
  for (const auto& [k, v] : nn_recall) rows.emplace_back("nn recall@" + std::to_string(k), v);
  if (rows.empty()) rows.emplace_back("accuracy", std::nullopt);

  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  auto pad = [&](std::string s) {
    s.resize(width + 2, ' ');
    return s;
  };
  std::string out = pad("metric") + label + "\n";
  char buf[64];
  for (const auto& [name, value] : rows) {
    if (value) {
      std::snprintf(buf, sizeof buf, "%.1f (%zu)", *value, n_annotated);
    } else {
      std::snprintf(buf, sizeof buf, "n/a (%zu)", n_annotated);
    }
    out += pad(name) + buf + "\n";
  }
  return out;
}

}  // namespace collate
