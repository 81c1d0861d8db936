#include "collate/project.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "collate/error.hpp"
#include "collate/random.hpp"

namespace collate {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Similarity: return "similarity";
    case Stage::Normalize: return "normalize";
    case Stage::Propagate: return "propagate";
    case Stage::Match: return "match";
  }
  return "similarity";
}

std::string_view to_string(SeedMode mode) noexcept {
  return mode == SeedMode::TwoCycle ? "two_cycle" : "confirmed_only";
}

std::string_view to_string(MatchAlgo algo) noexcept {
  return algo == MatchAlgo::Greedy ? "greedy" : "argmax";
}

Stage parse_stage(std::string_view text) {
  for (Stage s : kAllStages) {
    if (text == to_string(s)) return s;
  }
  fail(ErrorKind::InvalidArgument, "unknown stage '" + std::string(text) + "'");
}

SeedMode parse_seed_mode(std::string_view text) {
  if (text == "two_cycle") return SeedMode::TwoCycle;
  if (text == "confirmed_only") return SeedMode::ConfirmedOnly;
  fail(ErrorKind::InvalidArgument, "unknown seed mode '" + std::string(text) + "'");
}

MatchAlgo parse_match_algo(std::string_view text) {
  if (text == "greedy") return MatchAlgo::Greedy;
  if (text == "argmax") return MatchAlgo::Argmax;
  fail(ErrorKind::InvalidArgument, "unknown match algorithm '" + std::string(text) + "'");
}

json PipelineConfig::to_json() const {
  return {{"method", to_string(method)},
          {"similarity", similarity.to_json()},
          {"workers", workers},
          {"normalization", normalization.to_json()},
          {"propagation", propagation.to_json()},
          {"seeds", to_string(seeds)},
          {"match", to_string(match)}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig cfg;
  cfg.method = parse_similarity_method(j.value("method", std::string("trans")));
  if (j.contains("similarity")) cfg.similarity = SimilarityConfig::from_json(j.at("similarity"));
  cfg.workers = j.value("workers", 1u);
  if (j.contains("normalization")) {
    cfg.normalization = NormalizationScheme::from_json(j.at("normalization"));
  }
  if (j.contains("propagation")) {
    cfg.propagation = PropagationConfig::from_json(j.at("propagation"));
  }
  cfg.seeds = parse_seed_mode(j.value("seeds", std::string("two_cycle")));
  cfg.match = parse_match_algo(j.value("match", std::string("greedy")));
  cfg.similarity.validate();
  cfg.normalization.validate();
  cfg.propagation.validate();
  return cfg;
}

namespace {

constexpr const char* kProjectFile = "project.json";

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> manifest_ids(const json& doc) {
  std::vector<std::string> ids;
  for (const auto& e : doc.at("illustrations")) ids.push_back(e.at("id").get<std::string>());
  return ids;
}

std::string match_hash(const std::map<Stage, std::string>& hashes, Stage input, MatchAlgo algo) {
  return hex(fnv1a64(hashes.at(input) + std::string(to_string(input)) + std::string(to_string(algo))));
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

void remove_stage_files(const fs::path& file) {
  std::error_code ec;
  fs::remove(file, ec);
  fs::path payload = file;
  payload.replace_extension(".fmap");
  fs::remove(payload, ec);
}

json record_to_json(const StageRecord& r) {
  return {{"hash", r.hash}, {"file", r.file}, {"revision", r.revision}};
}

StageRecord record_from_json(const json& j) {
  return {j.at("hash").get<std::string>(), j.at("file").get<std::string>(),
          j.at("revision").get<std::uint64_t>()};
}

}  // namespace

fs::path Project::resolve(const fs::path& p) const { return p.is_absolute() ? p : dir_ / p; }

Project Project::create(const fs::path& dir, std::string project_id,
                        const std::vector<fs::path>& manifests, PipelineConfig config) {
  if (fs::exists(dir / kProjectFile)) {
    fail(ErrorKind::InvalidArgument, "a project already exists in " + dir.string());
  }
  fs::create_directories(dir);
  Project p;
  p.dir_ = dir;
  p.project_id_ = std::move(project_id);
  p.config_ = std::move(config);
  for (const auto& manifest : manifests) {
    const fs::path absolute = fs::absolute(manifest);
    const json doc = read_json(absolute);
    ManuscriptRef ref;
    try {
      ref.id = doc.at("manuscript_id").get<std::string>();
      ref.illustration_ids = manifest_ids(doc);
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, manifest.string() + ": " + e.what());
    }
    ref.manifest = fs::relative(absolute, fs::absolute(dir));
    for (const auto& other : p.manuscripts_) {
      if (other.id == ref.id) fail(ErrorKind::InvalidArgument, "duplicate manuscript id " + ref.id);
    }
    p.manuscripts_.push_back(std::move(ref));
  }
  p.save();
  return p;
}

Project Project::open(const fs::path& dir) {
  const json doc = read_json(dir / kProjectFile);
  Project p;
  p.dir_ = dir;
  try {
    p.project_id_ = doc.at("project_id").get<std::string>();
    p.revision_ = doc.at("revision").get<std::uint64_t>();
    p.config_ = PipelineConfig::from_json(doc.value("config", json::object()));
    for (const auto& m : doc.at("manuscripts")) {
      ManuscriptRef ref;
      ref.id = m.at("id").get<std::string>();
      ref.manifest = m.at("manifest").get<std::string>();
      ref.illustration_ids = manifest_ids(read_json(p.resolve(ref.manifest)));
      p.manuscripts_.push_back(std::move(ref));
    }
    const json images = doc.value("images", json::object());
    for (const auto& [id, img] : images.items()) {
      p.images_[id] = {img.value("full", std::string()), img.value("thumbnail", std::string())};
    }
    const json pairs = doc.value("pairs", json::object());
    for (const auto& [key, entry] : pairs.items()) {
      PairKey pair{entry.at("a").get<std::string>(), entry.at("b").get<std::string>()};
      PairState state;
      const json stages = entry.value("stages", json::object());
      for (const auto& [stage, rec] : stages.items()) {
        state.stages[parse_stage(stage)] = record_from_json(rec);
      }
      json annotations = {{"pair", {pair.a, pair.b}},
                          {"entries", entry.value("annotations", json::array())}};
      state.annotations = correspondences_from_json(annotations.dump());
      p.pairs_[pair] = std::move(state);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / kProjectFile).string() + ": " + e.what());
  }
  return p;
}

void Project::save() const {
  json manuscripts = json::array();
  for (const auto& m : manuscripts_) {
    manuscripts.push_back({{"id", m.id}, {"manifest", m.manifest.generic_string()}});
  }
  json images = json::object();
  for (const auto& [id, img] : images_) images[id] = {{"full", img.full}, {"thumbnail", img.thumbnail}};
  json pairs = json::object();
  for (const auto& [pair, state] : pairs_) {
    json stages = json::object();
    for (const auto& [stage, rec] : state.stages) stages[std::string(to_string(stage))] = record_to_json(rec);
    const json annotations = json::parse(correspondences_to_json(state.annotations));
    pairs[pair.dirname()] = {{"a", pair.a},
                             {"b", pair.b},
                             {"stages", stages},
                             {"annotations", annotations.at("entries")}};
  }
  const json doc = {{"project_id", project_id_}, {"revision", revision_},
                    {"config", config_.to_json()}, {"manuscripts", manuscripts},
                    {"images", images},           {"pairs", pairs}};
  write_atomically(dir_ / kProjectFile, doc.dump(2) + "\n");
}

const ManuscriptRef& Project::manuscript(std::string_view id) const {
  for (const auto& m : manuscripts_) {
    if (m.id == id) return m;
  }
  fail(ErrorKind::OutOfRange, "unknown manuscript '" + std::string(id) + "'");
}

void Project::check_pair(const PairKey& pair) const {
  manuscript(pair.a);
  manuscript(pair.b);
  if (pair.a == pair.b) fail(ErrorKind::InvalidArgument, "a pair needs two different manuscripts");
}

const Project::PairState* Project::pair_state(const PairKey& pair) const {
  const auto it = pairs_.find(pair);
  return it == pairs_.end() ? nullptr : &it->second;
}

void Project::set_config(PipelineConfig config) {
  config.similarity.validate();
  config.normalization.validate();
  config.propagation.validate();
  config_ = std::move(config);
  ++revision_;
  save();
}

void Project::set_image(const std::string& illustration_id, ImageRef image) {
  images_[illustration_id] = std::move(image);
  ++revision_;
  save();
}

std::optional<fs::path> Project::image_path(const std::string& illustration_id, bool thumbnail) const {
  const auto it = images_.find(illustration_id);
  if (it == images_.end()) return std::nullopt;
  const std::string& rel = thumbnail && !it->second.thumbnail.empty() ? it->second.thumbnail
                                                                       : it->second.full;
  if (rel.empty()) return std::nullopt;
  const fs::path path = resolve(rel);
  if (!fs::exists(path)) return std::nullopt;
  return path;
}

bool Project::has_image(const std::string& illustration_id) const {
  return image_path(illustration_id, false).has_value();
}

// Manifest text plus size and mtime of every referenced map file.
std::string Project::manuscript_fingerprint(const ManuscriptRef& ref) const {
  const fs::path manifest = resolve(ref.manifest);
  std::string fp = read_text(manifest);
  json doc;
  try {
    doc = json::parse(fp);
  } catch (const json::exception&) {
    return fp;
  }
  std::vector<std::string> files;
  for (const auto& e : doc.value("illustrations", json::array())) {
    if (e.contains("fixed_map")) files.push_back(e.at("fixed_map").get<std::string>());
    const json scales = e.value("scales", json::object());
    for (const auto& [tag, path] : scales.items()) {
      files.push_back(path.get<std::string>());
    }
  }
  for (const auto& f : files) {
    const fs::path path = manifest.parent_path() / f;
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    const auto mtime = fs::last_write_time(path, ec);
    fp += "|" + f + ":" + (ec ? std::string("missing")
                              : std::to_string(size) + ":" +
                                    std::to_string(mtime.time_since_epoch().count()));
  }
  return fp;
}

std::map<Stage, std::string> Project::stage_hashes(const PairKey& pair) const {
  std::map<Stage, std::string> h;
  const std::string sim = manuscript_fingerprint(manuscript(pair.a)) + "#" +
                          manuscript_fingerprint(manuscript(pair.b)) + "#" +
                          std::string(to_string(config_.method)) + config_.similarity.to_json().dump();
  h[Stage::Similarity] = hex(fnv1a64(sim));
  h[Stage::Normalize] = hex(fnv1a64(h[Stage::Similarity] + config_.normalization.to_json().dump()));
  std::string prop = h[Stage::Normalize] + config_.propagation.to_json().dump() +
                     std::string(to_string(config_.seeds));
  if (const PairState* state = pair_state(pair)) {
    std::vector<std::string> notes;
    for (const auto& e : state->annotations.entries) {
      notes.push_back(std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                      std::string(to_string(e.status)));
    }
    std::sort(notes.begin(), notes.end());
    for (const auto& n : notes) prop += ";" + n;
  }
  h[Stage::Propagate] = hex(fnv1a64(prop));
  return h;
}

RunPlan Project::plan_run(const PairKey& pair, const std::set<Stage>& stages) const {
  check_pair(pair);
  if (stages.empty()) fail(ErrorKind::InvalidArgument, "no stages requested");
  RunPlan plan;
  plan.pair = pair;
  plan.hashes = stage_hashes(pair);
  plan.target_revision = revision_ + 1;

  const PairState* state = pair_state(pair);
  auto present = [&](Stage s) {
    if (!state) return false;
    const auto it = state->stages.find(s);
    return it != state->stages.end() && fs::exists(resolve(it->second.file));
  };
  auto available = [&](Stage s) { return stages.count(s) != 0 || present(s); };

  if (stages.count(Stage::Normalize) && !available(Stage::Similarity)) {
    fail(ErrorKind::StageOrder, "normalize needs a raw similarity matrix; run the similarity stage first");
  }
  if (stages.count(Stage::Propagate) && !available(Stage::Normalize)) {
    fail(ErrorKind::StageOrder, "propagate needs a normalized matrix; run the normalize stage first");
  }
  if (stages.count(Stage::Match)) {
    std::optional<Stage> input;
    for (Stage s : {Stage::Propagate, Stage::Normalize, Stage::Similarity}) {
      if (available(s)) {
        input = s;
        break;
      }
    }
    if (!input) fail(ErrorKind::StageOrder, "match needs a similarity matrix; run the earlier stages first");
    plan.hashes[Stage::Match] = match_hash(plan.hashes, *input, config_.match);
  }

  for (Stage s : kAllStages) {
    if (!stages.count(s)) continue;
    const bool current = present(s) && state->stages.at(s).hash == plan.hashes.at(s);
    (current ? plan.skip : plan.execute).push_back(s);
  }
  return plan;
}

RunOutput Project::execute_run(const RunPlan& plan) const {
  RunOutput out;
  out.plan = plan;
  const fs::path pair_dir = fs::path("pairs") / plan.pair.dirname();
  fs::create_directories(resolve(pair_dir));
  const std::string rev = ".r" + std::to_string(plan.target_revision);

  std::map<Stage, SimilarityMatrix> computed;
  auto input = [&](Stage s) -> SimilarityMatrix {
    if (const auto it = computed.find(s); it != computed.end()) return it->second;
    auto m = matrix(plan.pair, s);
    if (!m) fail(ErrorKind::StageOrder, std::string(to_string(s)) + " matrix is missing");
    return *std::move(m);
  };
  auto persist = [&](Stage s, SimilarityMatrix m, const char* name) {
    const fs::path file = pair_dir / (std::string(name) + rev + ".json");
    m = rounded_to_storage(std::move(m));
    m.config_echo["manuscripts"] = {plan.pair.a, plan.pair.b};
    save_matrix(m, resolve(file));
    out.records[s] = {plan.hashes.at(s), file.generic_string(), plan.target_revision};
    computed[s] = std::move(m);
  };

  for (Stage s : plan.execute) {
    switch (s) {
      case Stage::Similarity: {
        const ManuscriptFeatures a = load_manuscript(resolve(manuscript(plan.pair.a).manifest));
        const ManuscriptFeatures b = load_manuscript(resolve(manuscript(plan.pair.b).manifest));
        persist(s, similarity_matrix(a, b, config_.method, config_.similarity, config_.workers), "raw");
        break;
      }
      case Stage::Normalize: {
        NormalizeResult r = normalize_with_warnings(input(Stage::Similarity), config_.normalization);
        out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
        persist(s, std::move(r.matrix), "normalized");
        break;
      }
      case Stage::Propagate: {
        const SimilarityMatrix n = input(Stage::Normalize);
        SeedSet seeds;
        if (config_.seeds == SeedMode::TwoCycle) seeds = two_cycle_seeds(n);
        seeds.origin = SeedOrigin::Mixed;
        if (const PairState* state = pair_state(plan.pair)) {
          for (const auto& e : state->annotations.entries) {
            if (e.i >= n.rows || e.j >= n.cols) continue;
            if (e.status == MatchStatus::Confirmed) seeds.pairs.emplace(e.i, e.j);
            if (e.status == MatchStatus::Rejected) seeds.pairs.erase({e.i, e.j});
          }
        }
        persist(s, propagate(n, seeds, config_.propagation), "propagated");
        break;
      }
      case Stage::Match: {
        std::optional<SimilarityMatrix> source;
        for (Stage in : {Stage::Propagate, Stage::Normalize, Stage::Similarity}) {
          if (computed.count(in)) {
            source = computed.at(in);
            break;
          }
          if (auto m = matrix(plan.pair, in)) {
            source = std::move(m);
            break;
          }
        }
        if (!source) fail(ErrorKind::StageOrder, "match needs a similarity matrix");
        CorrespondenceSet matches = config_.match == MatchAlgo::Greedy
                                        ? greedy_one_to_one(*source)
                                        : argmax_correspondences(*source, Direction::Rows);
        matches.pair_id = {plan.pair.a, plan.pair.b};
        const fs::path file = pair_dir / ("matches" + rev + ".json");
        save_correspondences_json(matches, resolve(file));
        out.records[s] = {plan.hashes.at(s), file.generic_string(), plan.target_revision};
        break;
      }
    }
  }
  return out;
}

RunSummary Project::commit_run(RunOutput output) {
  RunSummary summary;
  summary.ran = output.plan.execute;
  summary.skipped = output.plan.skip;
  summary.warnings = std::move(output.warnings);
  if (!output.records.empty()) {
    PairState& state = pairs_[output.plan.pair];
    for (auto& [stage, record] : output.records) {
      if (const auto it = state.stages.find(stage);
          it != state.stages.end() && it->second.file != record.file) {
        remove_stage_files(resolve(it->second.file));
      }
      state.stages[stage] = std::move(record);
    }
    revision_ = output.plan.target_revision;
    save();
  }
  summary.revision = revision_;
  return summary;
}

RunSummary Project::run_pipeline(const PairKey& pair, const std::set<Stage>& stages) {
  return commit_run(execute_run(plan_run(pair, stages)));
}

void Project::annotate(const PairKey& pair, std::size_t i, std::size_t j, MatchStatus status) {
  check_pair(pair);
  const std::size_t rows = manuscript(pair.a).illustration_ids.size();
  const std::size_t cols = manuscript(pair.b).illustration_ids.size();
  if (i >= rows || j >= cols) {
    fail(ErrorKind::OutOfRange, "(" + std::to_string(i) + ", " + std::to_string(j) + ") outside " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  double score = 0.0;
  if (auto m = current_matrix(pair)) score = m->at(i, j);
  PairState& state = pairs_[pair];
  state.annotations.pair_id = {pair.a, pair.b};
  state.annotations.upsert({i, j, status, score, MatchSource::Manual});
  ++revision_;
  save();
}

void Project::confirm(const PairKey& pair, std::size_t i, std::size_t j) {
  annotate(pair, i, j, MatchStatus::Confirmed);
}

void Project::reject(const PairKey& pair, std::size_t i, std::size_t j) {
  annotate(pair, i, j, MatchStatus::Rejected);
}

std::optional<SimilarityMatrix> Project::matrix(const PairKey& pair, Stage stage) const {
  if (stage == Stage::Match) fail(ErrorKind::InvalidArgument, "the match stage has no matrix");
  const PairState* state = pair_state(pair);
  if (!state) return std::nullopt;
  const auto it = state->stages.find(stage);
  if (it == state->stages.end() || !fs::exists(resolve(it->second.file))) return std::nullopt;
  return load_matrix(resolve(it->second.file));
}

std::optional<SimilarityMatrix> Project::current_matrix(const PairKey& pair) const {
  for (Stage s : {Stage::Propagate, Stage::Normalize, Stage::Similarity}) {
    if (auto m = matrix(pair, s)) return m;
  }
  return std::nullopt;
}

CorrespondenceSet Project::annotations(const PairKey& pair) const {
  check_pair(pair);
  if (const PairState* state = pair_state(pair)) return state->annotations;
  CorrespondenceSet empty;
  empty.pair_id = {pair.a, pair.b};
  return empty;
}

std::vector<Candidate> Project::candidates(const PairKey& pair, std::size_t i, std::size_t k,
                                           bool mask_rejected) const {
  check_pair(pair);
  const auto m = current_matrix(pair);
  if (!m) fail(ErrorKind::Empty, "no similarity matrix for " + pair.a + "/" + pair.b + " yet");
  const CorrespondenceSet notes = annotations(pair);
  IndexMask mask;
  if (mask_rejected) {
    for (const auto& e : notes.entries) {
      if (e.i == i && e.status == MatchStatus::Rejected) mask.insert(e.j);
    }
  }
  const auto& ids = manuscript(pair.b).illustration_ids;
  std::vector<Candidate> out;
  for (const Ranked& r : top_k(*m, i, Direction::Rows, k, &mask)) {
    Candidate c;
    c.j = r.index;
    c.score = r.score;
    c.illustration_id = r.index < ids.size() ? ids[r.index] : std::string();
    if (const auto* e = notes.find(i, r.index)) c.status = e->status;
    out.push_back(std::move(c));
  }
  return out;
}

CorrespondenceSet Project::matches(const PairKey& pair) const {
  check_pair(pair);
  CorrespondenceSet out;
  out.pair_id = {pair.a, pair.b};
  const PairState* state = pair_state(pair);
  if (!state) return out;
  if (const auto it = state->stages.find(Stage::Match);
      it != state->stages.end() && fs::exists(resolve(it->second.file))) {
    out = load_correspondences(resolve(it->second.file));
  }
  for (const auto& note : state->annotations.entries) {
    bool merged = false;
    for (auto& e : out.entries) {
      if (e.i == note.i && e.j == note.j) {
        e.status = note.status;
        merged = true;
      }
    }
    if (!merged) out.entries.push_back(note);
  }
  return out;
}

std::vector<StageStatus> Project::status(const PairKey& pair) const {
  check_pair(pair);
  auto hashes = stage_hashes(pair);
  const PairState* state = pair_state(pair);
  if (state) {
    for (Stage in : {Stage::Propagate, Stage::Normalize, Stage::Similarity}) {
      if (state->stages.count(in)) {
        hashes[Stage::Match] = match_hash(hashes, in, config_.match);
        break;
      }
    }
  }
  std::vector<StageStatus> out;
  for (Stage s : kAllStages) {
    StageStatus st{s};
    if (state) {
      if (const auto it = state->stages.find(s); it != state->stages.end()) {
        st.present = fs::exists(resolve(it->second.file));
        st.revision = it->second.revision;
        const auto h = hashes.find(s);
        st.stale = h != hashes.end() && h->second != it->second.hash;
      }
    }
    out.push_back(st);
  }
  return out;
}

fs::path Project::export_matches(const PairKey& pair, std::string_view format,
                                 const fs::path& path) const {
  const CorrespondenceSet m = matches(pair);
  if (m.empty()) fail(ErrorKind::Empty, "nothing to export for " + pair.a + "/" + pair.b);
  if (format == "json") {
    save_correspondences_json(m, path);
  } else if (format == "csv") {
    save_correspondences_csv(m, path);
  } else {
    fail(ErrorKind::InvalidArgument, "unknown export format '" + std::string(format) + "'");
  }
  return path;
}

}  // namespace collate
