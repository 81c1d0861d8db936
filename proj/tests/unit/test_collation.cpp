#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "collate/collation.hpp"
#include "collate/correspondence.hpp"
#include "collate/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace collate;
using PairSet = std::set<std::pair<std::size_t, std::size_t>>;

namespace {

PairSet pairs(const CorrespondenceSet& s) {
  PairSet out;
  for (const auto& e : s.entries) out.insert({e.i, e.j});
  return out;
}

CorrespondenceSet gt_of(const PairSet& p) {
  CorrespondenceSet s;
  for (const auto& [i, j] : p) s.entries.push_back({i, j, MatchStatus::Confirmed, 1.0, MatchSource::Manual});
  return s;
}

}  // namespace

TEST_CASE("argmax correspondences") {
  const auto s = SimilarityMatrix::from_rows({{0.9, 0.1}, {0.8, 0.2}});
  const auto rows = argmax_correspondences(s, Direction::Rows);
  CHECK(pairs(rows) == PairSet{{0, 0}, {1, 0}});
  for (const auto& e : rows.entries) CHECK(e.source == MatchSource::Argmax);
  CHECK(pairs(argmax_correspondences(s, Direction::Cols)) == PairSet{{0, 0}, {1, 1}});
  CHECK(argmax_correspondences(SimilarityMatrix(0, 3), Direction::Rows).empty());
  const auto diag = SimilarityMatrix::from_rows({{5, 1, 1}, {1, 5, 1}, {1, 1, 5}});
  CHECK(pairs(argmax_correspondences(diag, Direction::Rows)) == PairSet{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("greedy one-to-one") {
  const auto s = SimilarityMatrix::from_rows({{0.9, 0.1}, {0.8, 0.2}});
  const auto g = greedy_one_to_one(s);
  CHECK(pairs(g) == PairSet{{0, 0}, {1, 1}});
  for (const auto& e : g.entries) CHECK(e.source == MatchSource::Greedy);

  const auto row = SimilarityMatrix::from_rows({{0.3, 0.7, 0.1, 0.7}});
  CHECK(pairs(greedy_one_to_one(row)) == PairSet{{0, 1}});

  collate::Rng rng(30);
  for (int t = 0; t < 100; ++t) {
    const auto m = fixture::random_matrix(rng, 1 + rng.below(12), 1 + rng.below(12), t % 3 == 0);
    const auto out = greedy_one_to_one(m);
    CHECK(out.size() == std::min(m.rows, m.cols));
    std::set<std::size_t> is, js;
    for (const auto& e : out.entries) {
      is.insert(e.i);
      js.insert(e.j);
    }
    CHECK(is.size() == out.size());
    CHECK(js.size() == out.size());
  }
}

TEST_CASE("top_k") {
  collate::Rng rng(31);
  const auto s = fixture::random_matrix(rng, 3, 10, true);
  const auto one = top_k(s, 1, Direction::Rows, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].index == argmax_correspondences(s, Direction::Rows).prediction_for_row(1).value());

  const auto all = top_k(s, 0, Direction::Rows, 50);
  CHECK(all.size() == 10);
  const auto order = oracle::ranking(s, 0);
  for (std::size_t r = 0; r < 10; ++r) CHECK(all[r].index == order[r]);

  const auto five = top_k(s, 2, Direction::Rows, 5);
  const auto order2 = oracle::ranking(s, 2);
  REQUIRE(five.size() == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(five[r].index == order2[r]);
    CHECK(five[r].score == s.at(2, order2[r]));
  }

  const IndexMask mask{order2[0]};
  const auto masked = top_k(s, 2, Direction::Rows, 5, &mask);
  CHECK(masked.front().index == order2[1]);
  for (const auto& r : masked) CHECK(r.index != order2[0]);

  const auto col = top_k(s, 4, Direction::Cols, 3);
  CHECK(col.size() == 3);

  CHECK_THROWS_AS(top_k(s, 0, Direction::Rows, 0), Error);
  try {
    top_k(s, 3, Direction::Rows, 2);
    FAIL("expected out-of-range");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
}

TEST_CASE("accuracy") {
  const auto gt = gt_of({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const auto perfect = accuracy(gt, gt, gt);
  CHECK(*perfect.accuracy_avg == 100.0);
  const auto d1 = gt_of({{0, 0}, {1, 1}, {2, 2}, {3, 0}});
  const auto r = accuracy(d1, gt, gt);
  CHECK(*r.accuracy_dir1 == 75.0);
  CHECK(*r.accuracy_dir2 == 100.0);
  CHECK(*r.accuracy_avg == 87.5);
  CHECK(r.n_annotated == 4);

  const auto empty = accuracy(gt, gt, CorrespondenceSet{});
  CHECK_FALSE(empty.accuracy_avg.has_value());
  CHECK(empty.to_text("x").find("n/a") != std::string::npos);
  CHECK(empty.to_json()["accuracy_avg"].is_null());

  EvalReport table;
  table.accuracy_avg = table.accuracy_dir1 = table.accuracy_dir2 = 70.5;
  table.n_annotated = 295;
  CHECK(table.to_text("D1-D2").find("70.5 (295)") != std::string::npos);
}

TEST_CASE("accuracy is permutation equivariant") {
  collate::Rng rng(32);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 6;
    const auto s = fixture::random_matrix(rng, n, n);
    const auto gt = fixture::random_gt(rng, n, n, 4);
    std::vector<std::size_t> pr(n), pc(n);
    std::iota(pr.begin(), pr.end(), std::size_t{0});
    std::iota(pc.begin(), pc.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) {
      std::swap(pr[k - 1], pr[rng.below(k)]);
      std::swap(pc[k - 1], pc[rng.below(k)]);
    }
    SimilarityMatrix s2(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) s2.at(pr[i], pc[j]) = s.at(i, j);
    }
    CorrespondenceSet gt2;
    for (const auto& e : gt.entries) gt2.entries.push_back({pr[e.i], pc[e.j], e.status, e.score, e.source});
    const auto a = accuracy(argmax_correspondences(s, Direction::Rows), argmax_correspondences(s, Direction::Cols), gt);
    const auto b =
        accuracy(argmax_correspondences(s2, Direction::Rows), argmax_correspondences(s2, Direction::Cols), gt2);
    CHECK(*a.accuracy_avg == *b.accuracy_avg);
    CHECK(map_at_r(s, gt) == doctest::Approx(map_at_r(s2, gt2)));
    CHECK(recall_at_n(s, gt) == recall_at_n(s2, gt2));
  }
}

TEST_CASE("recall@N") {
  const auto s = SimilarityMatrix::from_rows({{0.9, 0.1, 0.2}, {0.3, 0.8, 0.1}, {0.2, 0.4, 0.7}});
  CHECK(recall_at_n(s, gt_of({{0, 0}, {1, 1}, {2, 2}})) == 100.0);
  CHECK(recall_at_n(s, gt_of({{0, 1}, {1, 2}, {2, 0}})) == 0.0);
  CHECK_THROWS_AS(recall_at_n(s, CorrespondenceSet{}), Error);
  try {
    recall_at_n(s, gt_of({{5, 0}}));
    FAIL("expected out-of-range");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
  collate::Rng rng(33);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_matrix(rng, 1 + rng.below(20), 1 + rng.below(20), t % 2 == 0);
    const auto gt = fixture::random_gt(rng, m.rows, m.cols, 1 + rng.below(10));
    CHECK(recall_at_n(m, gt) == doctest::Approx(oracle::recall_at_n(m, gt)).epsilon(1e-12));
    const double greedy = recall_at_n(m, gt, true);
    CHECK(greedy >= 0.0);
    CHECK(greedy <= 100.0);
  }
}

TEST_CASE("mAP@R") {
  const auto perfect = SimilarityMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  CHECK(map_at_r(perfect, gt_of({{0, 0}, {1, 1}})) == 100.0);
  const auto second = SimilarityMatrix::from_rows({{0.5, 0.9, 0.1, 0.2}, {0.1, 0.2, 0.3, 0.9}});
  CHECK(map_at_r(second, gt_of({{0, 0}, {1, 2}})) == doctest::Approx(50.0));
  CHECK_THROWS_AS(map_at_r(second, CorrespondenceSet{}), Error);

  collate::Rng rng(34);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_matrix(rng, 1 + rng.below(20), 1 + rng.below(20), t % 2 == 0);
    auto gt = fixture::random_gt(rng, m.rows, m.cols, 1 + rng.below(10));
    // Some rows get a second partner.
    if (m.cols > 1) gt.upsert({gt.entries[0].i, (gt.entries[0].j + 1) % m.cols, MatchStatus::Confirmed, 1.0, MatchSource::Manual});
    CHECK(map_at_r(m, gt) == doctest::Approx(oracle::map_at_r(m, gt)).epsilon(1e-12));
  }
}

TEST_CASE("nearest-neighbour recall") {
  collate::Rng rng(35);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_matrix(rng, 1 + rng.below(20), 1 + rng.below(20), t % 2 == 0);
    const auto gt = fixture::random_gt(rng, m.rows, m.cols, 1 + rng.below(10));
    const std::vector<std::size_t> ks{1, 5, 10, 20};
    const auto got = nn_recall(m, gt, ks);
    const auto want = oracle::nn_recall(m, gt, ks);
    for (auto k : ks) CHECK(got.at(k) == doctest::Approx(want.at(k)).epsilon(1e-12));
    CHECK(nn_recall(m, gt, {m.cols}).at(m.cols) == 100.0);
    double prev = 0.0;
    for (auto k : ks) {
      CHECK(got.at(k) >= prev);
      prev = got.at(k);
    }
    // Greedy accuracy cannot beat membership in the full row.
    const auto greedy = greedy_one_to_one(m);
    const auto acc = accuracy(greedy, greedy, gt);
    CHECK(*acc.accuracy_dir1 <= nn_recall(m, gt, {std::min(m.rows, m.cols)}).begin()->second + 1e-9);
  }
  CHECK_THROWS_AS(nn_recall(SimilarityMatrix(2, 2), CorrespondenceSet{}, {1}), Error);
}

TEST_CASE("correspondence files") {
  fixture::TempDir dir("collate-corr");
  CorrespondenceSet s;
  s.pair_id = {"A", "B"};
  s.entries.push_back({0, 3, MatchStatus::Confirmed, 0.25, MatchSource::Manual});
  s.entries.push_back({1, 2, MatchStatus::Predicted, 1.0 / 3.0, MatchSource::Greedy});
  s.entries.push_back({2, 0, MatchStatus::Rejected, -0.5, MatchSource::Argmax});
  save_correspondences_json(s, dir.path / "c.json");
  save_correspondences_csv(s, dir.path / "c.csv");
  CHECK(load_correspondences(dir.path / "c.json") == s);
  CHECK(load_correspondences(dir.path / "c.csv") == s);

  const std::string csv = correspondences_to_csv(s);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.rfind("manuscript_a,manuscript_b,i,j,status,score,source", 0) == 0);

  CorrespondenceSet dup = s;
  dup.entries.push_back(s.entries[0]);
  CHECK_THROWS_AS(dup.validate(), Error);
  CHECK_THROWS_AS(correspondences_from_json("{\"pair\": [\"A\"], \"entries\": 3}"), Error);
  CHECK_THROWS_AS(correspondences_from_json(R"({"pair":["A","B"],"entries":[{"i":0,"j":0,"status":"maybe","score":0,"source":"manual"}]})"), Error);
}
