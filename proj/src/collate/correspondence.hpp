#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace collate {

enum class MatchStatus { Predicted, Confirmed, Rejected };
enum class MatchSource { Argmax, Greedy, Manual };

std::string_view to_string(MatchStatus status) noexcept;
std::string_view to_string(MatchSource source) noexcept;
MatchStatus parse_status(std::string_view text);
MatchSource parse_source(std::string_view text);

struct Correspondence {
  std::size_t i = 0;
  std::size_t j = 0;
  MatchStatus status = MatchStatus::Predicted;
  double score = 0.0;
  MatchSource source = MatchSource::Argmax;

  bool operator==(const Correspondence&) const = default;
};

// Illustration-level pairs between two manuscripts. (i, j) is unique.
struct CorrespondenceSet {
  std::pair<std::string, std::string> pair_id;
  std::vector<Correspondence> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  const Correspondence* find(std::size_t i, std::size_t j) const noexcept;
  bool contains(std::size_t i, std::size_t j) const noexcept { return find(i, j) != nullptr; }

  // Inserts or overwrites the entry for (entry.i, entry.j).
  void upsert(const Correspondence& entry);

  // First entry whose i (or j, for the column direction) matches.
  std::optional<std::size_t> prediction_for_row(std::size_t i) const noexcept;
  std::optional<std::size_t> prediction_for_col(std::size_t j) const noexcept;

  // Throws InvalidArgument on duplicate (i, j).
  void validate() const;

  bool operator==(const CorrespondenceSet&) const = default;
};

void save_correspondences_json(const CorrespondenceSet& set, const std::filesystem::path& path);
void save_correspondences_csv(const CorrespondenceSet& set, const std::filesystem::path& path);
std::string correspondences_to_json(const CorrespondenceSet& set);
std::string correspondences_to_csv(const CorrespondenceSet& set);
CorrespondenceSet correspondences_from_json(std::string_view text);
CorrespondenceSet correspondences_from_csv(std::string_view text);
// Dispatches on extension: ".csv" is CSV, anything else JSON.
CorrespondenceSet load_correspondences(const std::filesystem::path& path);

}  // namespace collate
