#include "collate/matrix_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "collate/error.hpp"

namespace collate {

using nlohmann::json;

std::string_view to_string(NormalizationKind kind) noexcept {
  switch (kind) {
    case NormalizationKind::Softmax: return "softmax";
    case NormalizationKind::SoftmaxOverAvg: return "softmax_over_avg";
    case NormalizationKind::SoftmaxOverMax: return "softmax_over_max";
    case NormalizationKind::OverAvg: return "over_avg";
    case NormalizationKind::OverMax: return "over_max";
  }
  return "over_max";
}

std::string_view to_string(Combine combine) noexcept {
  return combine == Combine::Sum ? "sum" : "hadamard";
}

NormalizationKind parse_normalization_kind(std::string_view text) {
  if (text == "softmax") return NormalizationKind::Softmax;
  if (text == "softmax_over_avg") return NormalizationKind::SoftmaxOverAvg;
  if (text == "softmax_over_max") return NormalizationKind::SoftmaxOverMax;
  if (text == "over_avg") return NormalizationKind::OverAvg;
  if (text == "over_max") return NormalizationKind::OverMax;
  fail(ErrorKind::InvalidArgument, "unknown normalization '" + std::string(text) + "'");
}

Combine parse_combine(std::string_view text) {
  if (text == "sum") return Combine::Sum;
  if (text == "hadamard") return Combine::Hadamard;
  fail(ErrorKind::InvalidArgument, "unknown combine '" + std::string(text) + "'");
}

void NormalizationScheme::validate() const {
  if (is_softmax(kind)) {
    if (!lambda || !(*lambda > 0.0) || !std::isfinite(*lambda)) {
      fail(ErrorKind::InvalidArgument, "softmax normalizations need lambda > 0");
    }
  } else if (lambda) {
    fail(ErrorKind::InvalidArgument, std::string(to_string(kind)) + " takes no lambda");
  }
}

json NormalizationScheme::to_json() const {
  json j{{"kind", to_string(kind)}, {"combine", to_string(combine)}};
  if (lambda) j["lambda"] = *lambda;
  return j;
}

NormalizationScheme NormalizationScheme::from_json(const json& j) {
  NormalizationScheme s;
  s.kind = parse_normalization_kind(j.value("kind", std::string("over_max")));
  s.combine = parse_combine(j.value("combine", std::string("sum")));
  if (j.contains("lambda") && !j.at("lambda").is_null()) {
    s.lambda = j.at("lambda").get<double>();
  } else if (is_softmax(s.kind)) {
    s.lambda = 50.0;
  }
  return s;
}

namespace {

enum class Axis { Rows, Cols };

// Visits the entries of row/column `line` along `axis`.
template <typename Fn>
void for_line(SimilarityMatrix& m, Axis axis, std::size_t line, Fn&& fn) {
  if (axis == Axis::Rows) {
    for (std::size_t k = 0; k < m.cols; ++k) fn(m.at(line, k));
  } else {
    for (std::size_t k = 0; k < m.rows; ++k) fn(m.at(k, line));
  }
}

std::size_t line_count(const SimilarityMatrix& m, Axis axis) {
  return axis == Axis::Rows ? m.rows : m.cols;
}

// Divides each line by its max (or mean). Lines with a zero denominator are
// zeroed and reported.
void divide_lines(SimilarityMatrix& m, Axis axis, bool by_max, std::vector<std::size_t>& zeroed) {
  const std::size_t length = axis == Axis::Rows ? m.cols : m.rows;
  for (std::size_t line = 0; line < line_count(m, axis); ++line) {
    double denom = by_max ? -std::numeric_limits<double>::infinity() : 0.0;
    for_line(m, axis, line, [&](double v) { denom = by_max ? std::max(denom, v) : denom + v; });
    if (!by_max) denom /= static_cast<double>(length);
    if (denom == 0.0) {
      zeroed.push_back(line);
      for_line(m, axis, line, [](double& v) { v = 0.0; });
    } else {
      for_line(m, axis, line, [&](double& v) { v /= denom; });
    }
  }
}

void softmax_lines(SimilarityMatrix& m, Axis axis, double lambda) {
  for (std::size_t line = 0; line < line_count(m, axis); ++line) {
    double peak = -std::numeric_limits<double>::infinity();
    for_line(m, axis, line, [&](double v) { peak = std::max(peak, lambda * v); });
    double total = 0.0;
    for_line(m, axis, line, [&](double& v) {
      v = std::exp(lambda * v - peak);
      total += v;
    });
    for_line(m, axis, line, [&](double& v) { v /= total; });
  }
}

SimilarityMatrix normalize_along(const SimilarityMatrix& s, Axis axis,
                                 const NormalizationScheme& scheme,
                                 std::vector<std::size_t>& zeroed) {
  SimilarityMatrix out = s;
  switch (scheme.kind) {
    case NormalizationKind::OverMax: divide_lines(out, axis, true, zeroed); break;
    case NormalizationKind::OverAvg: divide_lines(out, axis, false, zeroed); break;
    case NormalizationKind::Softmax: softmax_lines(out, axis, *scheme.lambda); break;
    case NormalizationKind::SoftmaxOverMax:
      divide_lines(out, axis, true, zeroed);
      softmax_lines(out, axis, *scheme.lambda);
      break;
    case NormalizationKind::SoftmaxOverAvg:
      divide_lines(out, axis, false, zeroed);
      softmax_lines(out, axis, *scheme.lambda);
      break;
  }
  return out;
}

}  // namespace

RowColumnNormalized normalize_parts(const SimilarityMatrix& s, const NormalizationScheme& scheme) {
  scheme.validate();
  s.validate();
  RowColumnNormalized out;
  out.rows = normalize_along(s, Axis::Rows, scheme, out.zero_rows);
  out.cols = normalize_along(s, Axis::Cols, scheme, out.zero_cols);
  return out;
}

NormalizeResult normalize_with_warnings(const SimilarityMatrix& s, const NormalizationScheme& scheme) {
  if (s.provenance != Provenance::Raw) {
    fail(ErrorKind::StageOrder, "normalize expects a raw matrix, got " +
                                    std::string(to_string(s.provenance)));
  }
  RowColumnNormalized parts = normalize_parts(s, scheme);
  NormalizeResult result;
  SimilarityMatrix& out = result.matrix;
  out = std::move(parts.rows);
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    if (scheme.combine == Combine::Sum) {
      out.values[k] += parts.cols.values[k];
    } else {
      out.values[k] *= parts.cols.values[k];
    }
  }
  out.provenance = Provenance::Normalized;
  out.config_echo["normalization"] = scheme.to_json();
  for (std::size_t i : parts.zero_rows) {
    result.warnings.push_back("row " + std::to_string(i) + " has a zero denominator; zeroed");
  }
  for (std::size_t j : parts.zero_cols) {
    result.warnings.push_back("column " + std::to_string(j) + " has a zero denominator; zeroed");
  }
  return result;
}

SimilarityMatrix normalize(const SimilarityMatrix& s, const NormalizationScheme& scheme) {
  return normalize_with_warnings(s, scheme).matrix;
}

std::string_view to_string(SeedOrigin origin) noexcept {
  switch (origin) {
    case SeedOrigin::TwoCycle: return "two_cycle";
    case SeedOrigin::ThreeCycle: return "three_cycle";
    case SeedOrigin::Confirmed: return "confirmed";
    case SeedOrigin::Mixed: return "mixed";
  }
  return "mixed";
}

std::size_t row_argmax(const SimilarityMatrix& m, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < m.cols; ++j) {
    if (m.at(i, j) > m.at(i, best)) best = j;
  }
  return best;
}

std::size_t col_argmax(const SimilarityMatrix& m, std::size_t j) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.rows; ++i) {
    if (m.at(i, j) > m.at(best, j)) best = i;
  }
  return best;
}

namespace {

std::vector<std::size_t> all_row_argmax(const SimilarityMatrix& m) {
  std::vector<std::size_t> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = row_argmax(m, i);
  return out;
}

std::vector<std::size_t> all_col_argmax(const SimilarityMatrix& m) {
  std::vector<std::size_t> out(m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) out[j] = col_argmax(m, j);
  return out;
}

}  // namespace

SeedSet two_cycle_seeds(const SimilarityMatrix& n) {
  SeedSet seeds;
  seeds.origin = SeedOrigin::TwoCycle;
  if (n.rows == 0 || n.cols == 0) return seeds;
  const auto cols = all_col_argmax(n);
  for (std::size_t i = 0; i < n.rows; ++i) {
    const std::size_t j = row_argmax(n, i);
    if (cols[j] == i) seeds.pairs.emplace(i, j);
  }
  return seeds;
}

ThreeCycleSeeds three_cycle_seeds(const SimilarityMatrix& n_ab, const SimilarityMatrix& n_bc,
                                  const SimilarityMatrix& n_ac) {
  if (n_ab.cols != n_bc.rows || n_ab.rows != n_ac.rows || n_bc.cols != n_ac.cols) {
    fail(ErrorKind::DimensionMismatch, "three-cycle matrices do not chain: ab " +
                                           std::to_string(n_ab.rows) + "x" + std::to_string(n_ab.cols) +
                                           ", bc " + std::to_string(n_bc.rows) + "x" +
                                           std::to_string(n_bc.cols) + ", ac " +
                                           std::to_string(n_ac.rows) + "x" + std::to_string(n_ac.cols));
  }
  ThreeCycleSeeds out;
  out.ab.origin = out.bc.origin = out.ac.origin = SeedOrigin::ThreeCycle;
  if (n_ab.values.empty() || n_bc.values.empty() || n_ac.values.empty()) return out;
  const auto ab_rows = all_row_argmax(n_ab), ab_cols = all_col_argmax(n_ab);
  const auto bc_rows = all_row_argmax(n_bc), bc_cols = all_col_argmax(n_bc);
  const auto ac_rows = all_row_argmax(n_ac), ac_cols = all_col_argmax(n_ac);
  for (std::size_t i = 0; i < n_ab.rows; ++i) {
    const std::size_t j = ab_rows[i];
    const std::size_t k = bc_rows[j];
    if (ac_rows[i] != k) continue;
    // Each edge of the triangle must also be 2-cycle consistent.
    if (ab_cols[j] != i || bc_cols[k] != j || ac_cols[k] != i) continue;
    out.ab.pairs.emplace(i, j);
    out.bc.pairs.emplace(j, k);
    out.ac.pairs.emplace(i, k);
  }
  return out;
}

void PropagationConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be >= 0");
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) {
    fail(ErrorKind::InvalidArgument, "sigma_p must be > 0");
  }
}

json PropagationConfig::to_json() const { return {{"alpha", alpha}, {"sigma_p", sigma_p}}; }

PropagationConfig PropagationConfig::from_json(const json& j) {
  PropagationConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.sigma_p = j.value("sigma_p", cfg.sigma_p);
  return cfg;
}

SimilarityMatrix propagate(const SimilarityMatrix& n, const SeedSet& seeds,
                           const PropagationConfig& cfg) {
  cfg.validate();
  if (n.provenance != Provenance::Normalized) {
    fail(ErrorKind::StageOrder, "propagate expects a normalized matrix, got " +
                                    std::string(to_string(n.provenance)));
  }
  for (const auto& [k, l] : seeds.pairs) {
    if (k >= n.rows || l >= n.cols) {
      fail(ErrorKind::OutOfRange, "seed (" + std::to_string(k) + ", " + std::to_string(l) +
                                      ") outside " + std::to_string(n.rows) + "x" +
                                      std::to_string(n.cols));
    }
  }
  SimilarityMatrix out = n;
  out.provenance = Provenance::Propagated;
  out.config_echo["propagation"] = cfg.to_json();
  out.config_echo["seeds"] = seeds.size();
  if (seeds.pairs.empty() || n.values.empty()) return out;

  // Squared index distances are integers, so the per-seed factor is tabulated.
  const std::size_t max_d2 = (n.rows - 1) * (n.rows - 1) + (n.cols - 1) * (n.cols - 1);
  std::vector<double> factor(max_d2 + 1);
  const double two_var = 2.0 * cfg.sigma_p * cfg.sigma_p;
  for (std::size_t d2 = 0; d2 <= max_d2; ++d2) {
    factor[d2] = 1.0 + cfg.alpha * std::exp(-static_cast<double>(d2) / two_var);
  }
  for (std::size_t i = 0; i < n.rows; ++i) {
    for (std::size_t j = 0; j < n.cols; ++j) {
      double gain = 1.0;
      for (const auto& [k, l] : seeds.pairs) {
        const std::size_t di = i > k ? i - k : k - i;
        const std::size_t dj = j > l ? j - l : l - j;
        gain *= factor[di * di + dj * dj];
      }
      out.at(i, j) = n.at(i, j) * gain;
    }
  }
  return out;
}

json seeds_to_json(const SeedSet& seeds) {
  json pairs = json::array();
  for (const auto& [i, j] : seeds.pairs) pairs.push_back({i, j});
  return {{"origin", to_string(seeds.origin)}, {"pairs", pairs}};
}

SeedSet seeds_from_json(const json& j) {
  SeedSet seeds;
  try {
    const std::string origin = j.value("origin", std::string("mixed"));
    if (origin == "two_cycle") seeds.origin = SeedOrigin::TwoCycle;
    else if (origin == "three_cycle") seeds.origin = SeedOrigin::ThreeCycle;
    else if (origin == "confirmed") seeds.origin = SeedOrigin::Confirmed;
    else seeds.origin = SeedOrigin::Mixed;
    for (const auto& p : j.at("pairs")) {
      seeds.pairs.emplace(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("seed file: ") + e.what());
  }
  return seeds;
}

}  // namespace collate
