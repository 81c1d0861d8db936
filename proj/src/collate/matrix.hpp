#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace collate {

enum class Provenance { Raw, Normalized, Propagated };

std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view text);

// rows x cols scores between two manuscripts' illustrations, row-major.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  Provenance provenance = Provenance::Raw;
  std::string method_tag;
  nlohmann::json config_echo = nlohmann::json::object();

  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t r, std::size_t c, Provenance p = Provenance::Raw)
      : rows(r), cols(c), values(r * c, 0.0), provenance(p) {}

  static SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                    Provenance p = Provenance::Raw);

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }

  void validate() const;
};

// Writes the JSON header to `header_path` and the float payload (FMAP layout,
// H = rows, W = cols, C = 1) next to it with extension ".fmap".
void save_matrix(const SimilarityMatrix& matrix, const std::filesystem::path& header_path);
SimilarityMatrix load_matrix(const std::filesystem::path& header_path);

// Values as they read back from disk (float32 payload).
SimilarityMatrix rounded_to_storage(SimilarityMatrix matrix);

}  // namespace collate
