#include "collate/matrix.hpp"

#include <cmath>
#include <fstream>

#include "collate/error.hpp"
#include "collate/feature_store.hpp"

namespace collate {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Raw: return "raw";
    case Provenance::Normalized: return "normalized";
    case Provenance::Propagated: return "propagated";
  }
  return "raw";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "raw") return Provenance::Raw;
  if (text == "normalized") return Provenance::Normalized;
  if (text == "propagated") return Provenance::Propagated;
  fail(ErrorKind::Parse, "unknown provenance '" + std::string(text) + "'");
}

SimilarityMatrix SimilarityMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                             Provenance p) {
  SimilarityMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size(), p);
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (rows[i].size() != m.cols) fail(ErrorKind::DimensionMismatch, "ragged matrix rows");
    for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

void SimilarityMatrix::validate() const {
  if (values.size() != rows * cols) {
    fail(ErrorKind::DimensionMismatch, "matrix holds " + std::to_string(values.size()) +
                                           " values for " + std::to_string(rows) + "x" +
                                           std::to_string(cols));
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      fail(ErrorKind::NonFinite, "non-finite matrix entry (" + std::to_string(k / cols) + ", " +
                                     std::to_string(k % cols) + ")");
    }
  }
}

void save_matrix(const SimilarityMatrix& matrix, const fs::path& header_path) {
  matrix.validate();
  fs::path payload = header_path;
  payload.replace_extension(".fmap");
  json header;
  header["rows"] = matrix.rows;
  header["cols"] = matrix.cols;
  header["method"] = matrix.method_tag;
  header["provenance"] = to_string(matrix.provenance);
  header["config"] = matrix.config_echo;
  header["payload"] = matrix.values.empty() ? json() : json(payload.filename().string());
  if (!matrix.values.empty()) {
    FeatureMap map(static_cast<std::uint32_t>(matrix.rows), static_cast<std::uint32_t>(matrix.cols), 1);
    for (std::size_t k = 0; k < matrix.values.size(); ++k) {
      map.data[k] = static_cast<float>(matrix.values[k]);
    }
    write_feature_map_file(map, payload);
  }
  std::ofstream out(header_path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + header_path.string());
  out << header.dump(2) << '\n';
}

SimilarityMatrix load_matrix(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) fail(ErrorKind::Io, "cannot open matrix header " + header_path.string());
  SimilarityMatrix m;
  try {
    const json header = json::parse(in);
    m.rows = header.at("rows").get<std::size_t>();
    m.cols = header.at("cols").get<std::size_t>();
    m.method_tag = header.value("method", std::string());
    m.provenance = parse_provenance(header.at("provenance").get<std::string>());
    m.config_echo = header.value("config", json::object());
    m.values.assign(m.rows * m.cols, 0.0);
    if (!m.values.empty()) {
      const auto payload = header_path.parent_path() / header.at("payload").get<std::string>();
      const FeatureMap map = read_feature_map_file(payload);
      if (map.height != m.rows || map.width != m.cols || map.channels != 1) {
        fail(ErrorKind::ShapeMismatch, payload.string() + " does not match the header shape");
      }
      for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] = map.data[k];
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, header_path.string() + ": " + e.what());
  }
  return m;
}

SimilarityMatrix rounded_to_storage(SimilarityMatrix matrix) {
  for (auto& v : matrix.values) v = static_cast<float>(v);
  return matrix;
}

}  // namespace collate
