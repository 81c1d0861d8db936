#include <doctest.h>

#include <cmath>
#include <cstring>

#include "collate/error.hpp"
#include "collate/matrix.hpp"
#include "collate/matrix_ops.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace collate;

namespace {

SimilarityMatrix normalized(SimilarityMatrix m) {
  m.provenance = Provenance::Normalized;
  return m;
}

bool bitwise_equal(const SimilarityMatrix& a, const SimilarityMatrix& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("over_max hand example") {
  const auto s = SimilarityMatrix::from_rows({{2, 1}, {1, 2}});
  const auto n = normalize(s, NormalizationScheme::over_max());
  CHECK(n.provenance == Provenance::Normalized);
  const double want[] = {2.0, 1.0, 1.0, 2.0};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(n.values[k] - want[k]) <= 1e-12);

  const auto one = normalize(SimilarityMatrix::from_rows({{0.37}}), NormalizationScheme::over_max());
  CHECK(one.values[0] == 2.0);
}

TEST_CASE("normalization kinds") {
  collate::Rng rng(20);
  const auto s = fixture::random_matrix(rng, 5, 7, false, 0.1, 1.0);
  SUBCASE("softmax rows and columns sum to one") {
    for (auto kind : {NormalizationKind::Softmax, NormalizationKind::SoftmaxOverAvg, NormalizationKind::SoftmaxOverMax}) {
      const auto parts = normalize_parts(s, NormalizationScheme::softmax_kind(kind, 50.0));
      if (kind == NormalizationKind::Softmax) {
        for (std::size_t i = 0; i < s.rows; ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < s.cols; ++j) sum += parts.rows.at(i, j);
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (std::size_t j = 0; j < s.cols; ++j) {
          double sum = 0.0;
          for (std::size_t i = 0; i < s.rows; ++i) sum += parts.cols.at(i, j);
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
      }
      for (double v : parts.rows.values) CHECK(std::isfinite(v));
    }
  }
  SUBCASE("over_max rows of R and columns of C peak at exactly 1") {
    const auto parts = normalize_parts(s, NormalizationScheme::over_max());
    for (std::size_t i = 0; i < s.rows; ++i) {
      double mx = -1;
      for (std::size_t j = 0; j < s.cols; ++j) mx = std::max(mx, parts.rows.at(i, j));
      CHECK(mx == 1.0);
    }
    for (std::size_t j = 0; j < s.cols; ++j) {
      double mx = -1;
      for (std::size_t i = 0; i < s.rows; ++i) mx = std::max(mx, parts.cols.at(i, j));
      CHECK(mx == 1.0);
    }
  }
  SUBCASE("over_avg and combines") {
    NormalizationScheme avg{NormalizationKind::OverAvg, std::nullopt, Combine::Sum};
    const auto parts = normalize_parts(s, avg);
    double row_mean = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) row_mean += s.at(0, j);
    row_mean /= double(s.cols);
    CHECK(parts.rows.at(0, 3) == doctest::Approx(s.at(0, 3) / row_mean));
    const auto sum = normalize(s, avg);
    avg.combine = Combine::Hadamard;
    const auto prod = normalize(s, avg);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      CHECK(sum.values[k] == doctest::Approx(parts.rows.values[k] + parts.cols.values[k]));
      CHECK(prod.values[k] == doctest::Approx(parts.rows.values[k] * parts.cols.values[k]));
    }
  }
  SUBCASE("softmax with large lambda stays finite") {
    const auto n = normalize(s, NormalizationScheme::softmax_kind(NormalizationKind::Softmax, 1e4));
    for (double v : n.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("normalization scheme validation and stage order") {
  const auto s = SimilarityMatrix::from_rows({{1, 2}});
  NormalizationScheme bad{NormalizationKind::Softmax, std::nullopt, Combine::Sum};
  CHECK_THROWS_AS(normalize(s, bad), Error);
  NormalizationScheme bad2{NormalizationKind::OverMax, 3.0, Combine::Sum};
  CHECK_THROWS_AS(normalize(s, bad2), Error);
  try {
    normalize(normalized(s), NormalizationScheme::over_max());
    FAIL("expected stage-order error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StageOrder);
  }
  const auto from = NormalizationScheme::from_json({{"kind", "softmax_over_max"}});
  REQUIRE(from.lambda);
  CHECK(*from.lambda == 50.0);
}

TEST_CASE("zero denominators are guarded with a warning") {
  const auto s = SimilarityMatrix::from_rows({{0, 0, 0}, {1, 2, 0}});
  const auto r = normalize_with_warnings(s, NormalizationScheme::over_max());
  CHECK_FALSE(r.warnings.empty());
  for (double v : r.matrix.values) CHECK(std::isfinite(v));
  CHECK(r.matrix.at(0, 0) == 0.0);
  CHECK(r.matrix.at(0, 1) == 0.0);
  // Column 2 is all zero as well.
  CHECK(r.matrix.at(1, 2) == 0.0);
}

TEST_CASE("row gains leave R unchanged") {
  collate::Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const auto s = fixture::random_matrix(rng, 2 + rng.below(8), 2 + rng.below(8), false, 0.05, 1.0);
    auto scaled = s;
    auto pow2 = s;
    for (std::size_t i = 0; i < s.rows; ++i) {
      const double g = 0.01 + 20.0 * rng.uniform();
      const double g2 = std::ldexp(1.0, int(rng.below(21)) - 10);
      for (std::size_t j = 0; j < s.cols; ++j) {
        scaled.at(i, j) *= g;
        pow2.at(i, j) *= g2;
      }
    }
    for (auto kind : {NormalizationKind::OverMax, NormalizationKind::OverAvg}) {
      const NormalizationScheme scheme{kind, std::nullopt, Combine::Sum};
      const auto r = normalize_parts(s, scheme).rows;
      CHECK(bitwise_equal(normalize_parts(pow2, scheme).rows, r));
      const auto rs = normalize_parts(scaled, scheme).rows;
      for (std::size_t k = 0; k < r.values.size(); ++k) CHECK(oracle::close(rs.values[k], r.values[k], 1e-15));
    }
  }
}

TEST_CASE("two-cycle seeds") {
  CHECK(two_cycle_seeds(SimilarityMatrix::from_rows({{0.9, 0.8}, {0.85, 0.1}})).pairs ==
        std::set<std::pair<std::size_t, std::size_t>>{{0, 0}});
  CHECK(two_cycle_seeds(SimilarityMatrix::from_rows({{1, 1, 1}, {1, 1, 1}})).pairs ==
        std::set<std::pair<std::size_t, std::size_t>>{{0, 0}});
  const auto diag = two_cycle_seeds(SimilarityMatrix::from_rows({{3, 1, 0}, {0, 4, 1}, {1, 0, 2}}));
  CHECK(diag.pairs == std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}});
  CHECK(diag.origin == SeedOrigin::TwoCycle);

  // Oracle: pair is both its row's and its column's first maximum.
  collate::Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_matrix(rng, 1 + rng.below(7), 1 + rng.below(7), t % 2 == 0);
    std::set<std::pair<std::size_t, std::size_t>> want;
    for (std::size_t i = 0; i < m.rows; ++i) {
      const std::size_t j = oracle::ranking(m, i).front();
      bool col_best = true;
      for (std::size_t k = 0; k < m.rows; ++k) {
        if (m.at(k, j) > m.at(i, j) || (m.at(k, j) == m.at(i, j) && k < i)) col_best = false;
      }
      if (col_best) want.insert({i, j});
    }
    CHECK(two_cycle_seeds(m).pairs == want);
  }
}

TEST_CASE("three-cycle seeds") {
  const auto id3 = SimilarityMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto all = three_cycle_seeds(id3, id3, id3);
  const std::set<std::pair<std::size_t, std::size_t>> diag{{0, 0}, {1, 1}, {2, 2}};
  CHECK(all.ab.pairs == diag);
  CHECK(all.bc.pairs == diag);
  CHECK(all.ac.pairs == diag);
  CHECK(all.ab.origin == SeedOrigin::ThreeCycle);

  // a0 -> b0 -> c0 but a0's best in C is c1: the cycle breaks for row 0.
  const auto ac = SimilarityMatrix::from_rows({{0.2, 0.9, 0}, {0.1, 0, 0.3}, {0, 0.1, 0.8}});
  const auto broken = three_cycle_seeds(id3, id3, ac);
  CHECK_FALSE(broken.ab.contains(0, 0));
  CHECK(broken.ab.contains(2, 2));

  collate::Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const auto ab = fixture::random_matrix(rng, 4, 5);
    const auto bc = fixture::random_matrix(rng, 5, 3);
    const auto ac2 = fixture::random_matrix(rng, 4, 3);
    const auto s = three_cycle_seeds(ab, bc, ac2);
    for (const auto& p : s.ab.pairs) CHECK(two_cycle_seeds(ab).pairs.count(p));
    for (const auto& p : s.bc.pairs) CHECK(two_cycle_seeds(bc).pairs.count(p));
    for (const auto& p : s.ac.pairs) CHECK(two_cycle_seeds(ac2).pairs.count(p));
  }
  try {
    three_cycle_seeds(fixture::random_matrix(rng, 2, 3), fixture::random_matrix(rng, 4, 2), fixture::random_matrix(rng, 2, 2));
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("propagate") {
  collate::Rng rng(24);
  const auto n = normalized(fixture::random_matrix(rng, 9, 11, false, -1.0, 2.0));
  SeedSet seeds;
  seeds.pairs = {{2, 3}, {6, 8}};

  SUBCASE("alpha zero is the identity, bitwise") {
    const auto p = propagate(n, seeds, {0.0, 5.0});
    CHECK(bitwise_equal(p, n));
    CHECK(p.provenance == Provenance::Propagated);
  }
  SUBCASE("single seed multiplies its own cell by 1 + alpha") {
    SeedSet one;
    one.pairs = {{4, 4}};
    const auto p = propagate(n, one, {0.25, 5.0});
    CHECK(std::abs(p.at(4, 4) - n.at(4, 4) * 1.25) <= 1e-12 * std::abs(n.at(4, 4)));
  }
  SUBCASE("two seeds against the naive double loop") {
    for (int t = 0; t < 20; ++t) {
      const auto m = normalized(fixture::random_matrix(rng, 1 + rng.below(20), 1 + rng.below(20), false, -1, 1));
      SeedSet s;
      for (int k = 0; k < 3; ++k) s.pairs.insert({rng.below(m.rows), rng.below(m.cols)});
      const double alpha = rng.uniform(), sigma = 0.5 + 6 * rng.uniform();
      const auto got = propagate(m, s, {alpha, sigma});
      const auto want = oracle::propagate(m, s.pairs, alpha, sigma);
      for (std::size_t k = 0; k < m.values.size(); ++k) CHECK(oracle::close(got.values[k], want.values[k]));
    }
  }
  SUBCASE("preserves sign and zeros, monotone in alpha at seeds") {
    auto m = n;
    m.at(0, 0) = 0.0;
    const auto lo = propagate(m, seeds, {0.1, 5.0});
    const auto hi = propagate(m, seeds, {0.2, 5.0});
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      CHECK((lo.values[k] > 0) == (m.values[k] > 0));
      CHECK((lo.values[k] < 0) == (m.values[k] < 0));
    }
    CHECK(lo.at(0, 0) == 0.0);
    for (const auto& [k, l] : seeds.pairs) {
      if (m.at(k, l) > 0) CHECK(hi.at(k, l) > lo.at(k, l));
    }
  }
  SUBCASE("separated seeds stay two-cycle consistent") {
    // Planted seeds beat their row and column by a small margin and are more
    // than 3 sigma_p apart along both axes.
    auto m = normalized(fixture::random_matrix(rng, 40, 40, false, 0.0, 0.5));
    SeedSet sep;
    for (std::size_t k = 0; k < 40; k += 16) {
      m.at(k, (k + 5) % 40) = 0.51;
      sep.pairs.insert({k, (k + 5) % 40});
    }
    for (const auto& pr : sep.pairs) REQUIRE(two_cycle_seeds(m).pairs.count(pr));
    const auto after = two_cycle_seeds(propagate(m, sep, {0.25, 5.0}));
    for (const auto& pr : sep.pairs) CHECK(after.pairs.count(pr));
  }
  SUBCASE("errors") {
    try {
      propagate(fixture::random_matrix(rng, 2, 2), seeds, {});
      FAIL("expected stage-order error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::StageOrder);
    }
    SeedSet outside;
    outside.pairs = {{100, 0}};
    try {
      propagate(n, outside, {});
      FAIL("expected out-of-range error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutOfRange);
    }
    CHECK_THROWS_AS(propagate(n, seeds, {-0.1, 5.0}), Error);
    CHECK_THROWS_AS(propagate(n, seeds, {0.1, 0.0}), Error);
  }
}

TEST_CASE("seed json round trip") {
  SeedSet s;
  s.pairs = {{1, 2}, {3, 4}};
  s.origin = SeedOrigin::Confirmed;
  const auto back = seeds_from_json(seeds_to_json(s));
  CHECK(back.pairs == s.pairs);
  CHECK(back.origin == s.origin);
}

TEST_CASE("matrix save and load") {
  fixture::TempDir dir("collate-matrix");
  collate::Rng rng(25);
  auto m = fixture::random_matrix(rng, 4, 6);
  m.method_tag = "matching";
  m.config_echo = {{"k", 1}};
  save_matrix(m, dir.path / "m.json");
  const auto back = load_matrix(dir.path / "m.json");
  CHECK(back.rows == 4);
  CHECK(back.cols == 6);
  CHECK(back.method_tag == "matching");
  CHECK(back.config_echo == m.config_echo);
  CHECK(bitwise_equal(back, rounded_to_storage(m)));
  CHECK(std::filesystem::exists(dir.path / "m.fmap"));
}
