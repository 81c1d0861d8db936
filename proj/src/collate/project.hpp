#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "collate/collation.hpp"
#include "collate/correspondence.hpp"
#include "collate/feature_store.hpp"
#include "collate/matrix.hpp"
#include "collate/matrix_ops.hpp"
#include "collate/similarity.hpp"

namespace collate {

enum class Stage { Similarity, Normalize, Propagate, Match };
enum class SeedMode { TwoCycle, ConfirmedOnly };
enum class MatchAlgo { Argmax, Greedy };

std::string_view to_string(Stage stage) noexcept;
std::string_view to_string(SeedMode mode) noexcept;
std::string_view to_string(MatchAlgo algo) noexcept;
Stage parse_stage(std::string_view text);
SeedMode parse_seed_mode(std::string_view text);
MatchAlgo parse_match_algo(std::string_view text);
inline constexpr Stage kAllStages[] = {Stage::Similarity, Stage::Normalize, Stage::Propagate,
                                       Stage::Match};

struct PipelineConfig {
  SimilarityMethod method = SimilarityMethod::Trans;
  SimilarityConfig similarity;
  unsigned workers = 1;
  NormalizationScheme normalization;
  PropagationConfig propagation;
  SeedMode seeds = SeedMode::TwoCycle;
  MatchAlgo match = MatchAlgo::Greedy;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct PairKey {
  std::string a;
  std::string b;
  std::string dirname() const { return a + "__" + b; }
  auto operator<=>(const PairKey&) const = default;
};

struct ManuscriptRef {
  std::string id;
  std::filesystem::path manifest;  // as recorded, relative to the project directory if not absolute
  std::vector<std::string> illustration_ids;
};

struct StageRecord {
  std::string hash;
  std::string file;  // relative to the project directory
  std::uint64_t revision = 0;
};

struct StageStatus {
  Stage stage;
  bool present = false;
  bool stale = false;
  std::uint64_t revision = 0;
};

struct RunSummary {
  std::vector<Stage> ran;
  std::vector<Stage> skipped;
  std::uint64_t revision = 0;
  std::vector<std::string> warnings;
};

struct Candidate {
  std::size_t j = 0;
  std::string illustration_id;
  double score = 0.0;
  std::optional<MatchStatus> status;  // annotation state, if any
};

struct ImageRef {
  std::string full;
  std::string thumbnail;
};

// Work prepared for one pipeline run: which stages execute and the content
// hashes they will record.
struct RunPlan {
  PairKey pair;
  std::vector<Stage> execute;
  std::vector<Stage> skip;
  std::map<Stage, std::string> hashes;
  std::uint64_t target_revision = 0;
};

struct RunOutput {
  RunPlan plan;
  std::map<Stage, StageRecord> records;
  std::vector<std::string> warnings;
};

// Directory-per-project persistence: project.json holds metadata, stage
// records and annotations; matrices and matches live under pairs/<a>__<b>/.
// The class itself is not synchronized; ProjectService adds locking.
class Project {
 public:
  static Project create(const std::filesystem::path& dir, std::string project_id,
                        const std::vector<std::filesystem::path>& manifests,
                        PipelineConfig config = {});
  static Project open(const std::filesystem::path& dir);

  const std::string& id() const noexcept { return project_id_; }
  std::uint64_t revision() const noexcept { return revision_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  const PipelineConfig& config() const noexcept { return config_; }
  const std::vector<ManuscriptRef>& manuscripts() const noexcept { return manuscripts_; }
  const ManuscriptRef& manuscript(std::string_view id) const;

  void set_config(PipelineConfig config);
  void set_image(const std::string& illustration_id, ImageRef image);
  std::optional<std::filesystem::path> image_path(const std::string& illustration_id,
                                                  bool thumbnail) const;
  bool has_image(const std::string& illustration_id) const;

  // Whole pipeline run: plan, execute, commit.
  RunSummary run_pipeline(const PairKey& pair, const std::set<Stage>& stages);

  // The three phases separately, so a caller can execute without holding a
  // lock that blocks readers. plan/commit touch project state; execute only
  // writes new files.
  RunPlan plan_run(const PairKey& pair, const std::set<Stage>& stages) const;
  RunOutput execute_run(const RunPlan& plan) const;
  RunSummary commit_run(RunOutput output);

  void confirm(const PairKey& pair, std::size_t i, std::size_t j);
  void reject(const PairKey& pair, std::size_t i, std::size_t j);

  std::optional<SimilarityMatrix> matrix(const PairKey& pair, Stage stage) const;
  // Propagated if present, else normalized, else raw.
  std::optional<SimilarityMatrix> current_matrix(const PairKey& pair) const;
  std::vector<Candidate> candidates(const PairKey& pair, std::size_t i, std::size_t k,
                                    bool mask_rejected) const;
  CorrespondenceSet annotations(const PairKey& pair) const;
  // Predicted matches with annotation statuses applied, plus annotations
  // that are not among the predictions.
  CorrespondenceSet matches(const PairKey& pair) const;
  std::vector<StageStatus> status(const PairKey& pair) const;

  std::filesystem::path export_matches(const PairKey& pair, std::string_view format,
                                       const std::filesystem::path& path) const;

 private:
  struct PairState {
    std::map<Stage, StageRecord> stages;
    CorrespondenceSet annotations;
  };

  Project() = default;
  void save() const;
  void check_pair(const PairKey& pair) const;
  void annotate(const PairKey& pair, std::size_t i, std::size_t j, MatchStatus status);
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::string manuscript_fingerprint(const ManuscriptRef& ref) const;
  std::map<Stage, std::string> stage_hashes(const PairKey& pair) const;
  const PairState* pair_state(const PairKey& pair) const;

  std::filesystem::path dir_;
  std::string project_id_;
  std::uint64_t revision_ = 0;
  PipelineConfig config_;
  std::vector<ManuscriptRef> manuscripts_;
  std::map<std::string, ImageRef> images_;
  std::map<PairKey, PairState> pairs_;
};

}  // namespace collate
