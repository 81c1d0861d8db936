#include "collate/collate.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "collate/collation.hpp"
#include "collate/error.hpp"
#include "collate/feature_store.hpp"
#include "collate/http_service.hpp"
#include "collate/matrix.hpp"
#include "collate/matrix_ops.hpp"
#include "collate/project.hpp"
#include "collate/similarity.hpp"
#include "collate/synth.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct collate_manuscript {
  collate::ManuscriptFeatures value;
};
struct collate_matrix {
  collate::SimilarityMatrix value;
};
struct collate_seeds {
  collate::SeedSet value;
  std::vector<std::pair<std::size_t, std::size_t>> ordered;
};
struct collate_correspondences {
  collate::CorrespondenceSet value;
};
struct collate_project {
  collate::Project value;
};

namespace {

thread_local std::string last_error;

collate_status status_of(collate::ErrorKind kind) {
  return static_cast<collate_status>(static_cast<int>(kind) + 1);
}

template <typename Fn>
collate_status guard(Fn&& fn) noexcept {
  try {
    fn();
    last_error.clear();
    return COLLATE_OK;
  } catch (const collate::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    last_error = e.what();
    return COLLATE_E_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return COLLATE_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return COLLATE_E_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) collate::fail(collate::ErrorKind::InvalidArgument, std::string(name) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out != nullptr) *out = dup(s);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(sep, start), text.size());
    std::string part(text.substr(start, end - start));
    while (!part.empty() && part.front() == ' ') part.erase(part.begin());
    while (!part.empty() && part.back() == ' ') part.pop_back();
    if (!part.empty()) parts.push_back(part);
    start = end + 1;
  }
  return parts;
}

collate_seeds* wrap_seeds(collate::SeedSet set) {
  auto* s = new collate_seeds{std::move(set), {}};
  s->ordered.assign(s->value.pairs.begin(), s->value.pairs.end());
  return s;
}

std::set<collate::Stage> parse_stage_list(const char* stages) {
  std::set<collate::Stage> out;
  if (stages == nullptr || *stages == '\0') {
    out.insert(std::begin(collate::kAllStages), std::end(collate::kAllStages));
    return out;
  }
  for (const auto& name : split(stages, ',')) out.insert(collate::parse_stage(name));
  return out;
}

json run_summary_json(const collate::RunSummary& s) {
  json ran = json::array(), skipped = json::array();
  for (auto st : s.ran) ran.push_back(collate::to_string(st));
  for (auto st : s.skipped) skipped.push_back(collate::to_string(st));
  return {{"ran", ran}, {"skipped", skipped}, {"revision", s.revision}, {"warnings", s.warnings}};
}

}  // namespace

extern "C" {

const char* collate_last_error(void) { return last_error.c_str(); }

const char* collate_status_name(collate_status status) {
  if (status == COLLATE_OK) return "ok";
  const int k = static_cast<int>(status) - 1;
  if (k < 0 || k > static_cast<int>(collate::ErrorKind::Internal)) return "unknown";
  return collate::to_string(static_cast<collate::ErrorKind>(k)).data();
}

void collate_string_free(char* text) { std::free(text); }

const char* collate_version(void) { return "0.1.0"; }

collate_status collate_manuscript_load(const char* manifest_path, collate_manuscript** out) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    *out = new collate_manuscript{collate::load_manuscript(manifest_path)};
  });
}

void collate_manuscript_free(collate_manuscript* manuscript) { delete manuscript; }

size_t collate_manuscript_size(const collate_manuscript* manuscript) {
  return manuscript ? manuscript->value.size() : 0;
}

const char* collate_manuscript_id(const collate_manuscript* manuscript) {
  return manuscript ? manuscript->value.manuscript_id.c_str() : "";
}

collate_status collate_manuscript_illustration_id(const collate_manuscript* manuscript, size_t index,
                                                  const char** out) {
  return guard([&] {
    need(manuscript, "manuscript");
    need(out, "out");
    if (index >= manuscript->value.size()) {
      collate::fail(collate::ErrorKind::OutOfRange, "illustration index " + std::to_string(index));
    }
    *out = manuscript->value.pyramids[index].illustration_id.c_str();
  });
}

collate_status collate_features_check(const char* manifest_path, char** report_json) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    const auto m = collate::load_manuscript(manifest_path);
    std::set<int> tags;
    std::size_t maps = 0;
    for (const auto& p : m.pyramids) {
      maps += 1 + p.scale_maps.size();
      for (const auto& s : p.scale_maps) tags.insert(s.tag);
    }
    const json report = {{"manuscript_id", m.manuscript_id},
                         {"illustrations", m.size()},
                         {"maps", maps},
                         {"channels", m.channels()},
                         {"scale_tags", tags},
                         {"fixed_side", m.pyramids.empty() ? 0u : m.pyramids.front().fixed_map.height}};
    put(report_json, report.dump());
  });
}

void collate_similarity_options_init(collate_similarity_options* options) {
  if (options == nullptr) return;
  const collate::SimilarityConfig defaults;
  options->method = "trans";
  options->sigma = defaults.sigma;
  options->ransac_iterations = defaults.ransac_iterations;
  options->seed = defaults.rng_seed;
  options->workers = 1;
  options->scale_tags = nullptr;
  options->n_scale_tags = 0;
  options->base_scale = defaults.base_scale;
}

collate_status collate_similarity_matrix(const collate_manuscript* a, const collate_manuscript* b,
                                         const collate_similarity_options* options, collate_matrix** out) {
  return guard([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    collate_similarity_options opts;
    collate_similarity_options_init(&opts);
    if (options != nullptr) opts = *options;
    collate::SimilarityConfig cfg;
    cfg.sigma = opts.sigma;
    cfg.ransac_iterations = opts.ransac_iterations;
    cfg.rng_seed = opts.seed;
    cfg.base_scale = opts.base_scale;
    if (opts.scale_tags != nullptr) cfg.scale_tags.assign(opts.scale_tags, opts.scale_tags + opts.n_scale_tags);
    cfg.validate();
    const auto method = collate::parse_similarity_method(opts.method ? opts.method : "trans");
    *out = new collate_matrix{
        collate::similarity_matrix(a->value, b->value, method, cfg, opts.workers == 0 ? 1 : opts.workers)};
  });
}

collate_status collate_matrix_create(size_t rows, size_t cols, const double* values, collate_matrix** out) {
  return guard([&] {
    need(out, "out");
    if (rows * cols > 0) need(values, "values");
    collate::SimilarityMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.assign(values, values + rows * cols);
    m.validate();
    *out = new collate_matrix{std::move(m)};
  });
}

collate_status collate_matrix_load(const char* header_path, collate_matrix** out) {
  return guard([&] {
    need(header_path, "header_path");
    need(out, "out");
    *out = new collate_matrix{collate::load_matrix(header_path)};
  });
}

collate_status collate_matrix_save(const collate_matrix* matrix, const char* header_path) {
  return guard([&] {
    need(matrix, "matrix");
    need(header_path, "header_path");
    collate::save_matrix(matrix->value, header_path);
  });
}

void collate_matrix_free(collate_matrix* matrix) { delete matrix; }

size_t collate_matrix_rows(const collate_matrix* matrix) { return matrix ? matrix->value.rows : 0; }

size_t collate_matrix_cols(const collate_matrix* matrix) { return matrix ? matrix->value.cols : 0; }

const char* collate_matrix_provenance(const collate_matrix* matrix) {
  return matrix ? collate::to_string(matrix->value.provenance).data() : "";
}

collate_status collate_matrix_get(const collate_matrix* matrix, size_t i, size_t j, double* out) {
  return guard([&] {
    need(matrix, "matrix");
    need(out, "out");
    if (i >= matrix->value.rows || j >= matrix->value.cols) {
      collate::fail(collate::ErrorKind::OutOfRange, "matrix entry out of range");
    }
    *out = matrix->value.at(i, j);
  });
}

collate_status collate_matrix_values(const collate_matrix* matrix, double* out, size_t capacity) {
  return guard([&] {
    need(matrix, "matrix");
    const auto& v = matrix->value.values;
    if (capacity < v.size()) collate::fail(collate::ErrorKind::InvalidArgument, "buffer too small");
    if (!v.empty()) need(out, "out");
    std::copy(v.begin(), v.end(), out);
  });
}

collate_status collate_normalize(const collate_matrix* matrix, const char* kind, const char* combine,
                                 double lambda, collate_matrix** out, char** warnings_json) {
  return guard([&] {
    need(matrix, "matrix");
    need(out, "out");
    collate::NormalizationScheme scheme;
    scheme.kind = collate::parse_normalization_kind(kind ? kind : "over_max");
    scheme.combine = collate::parse_combine(combine ? combine : "sum");
    if (!std::isnan(lambda)) {
      scheme.lambda = lambda;
    } else if (collate::is_softmax(scheme.kind)) {
      scheme.lambda = 50.0;
    }
    auto result = collate::normalize_with_warnings(matrix->value, scheme);
    put(warnings_json, json(result.warnings).dump());
    *out = new collate_matrix{std::move(result.matrix)};
  });
}

collate_status collate_seeds_create(const size_t* pairs, size_t n_pairs, collate_seeds** out) {
  return guard([&] {
    need(out, "out");
    if (n_pairs > 0) need(pairs, "pairs");
    collate::SeedSet set;
    for (size_t k = 0; k < n_pairs; ++k) set.pairs.insert({pairs[2 * k], pairs[2 * k + 1]});
    *out = wrap_seeds(std::move(set));
  });
}

collate_status collate_seeds_two_cycle(const collate_matrix* normalized, collate_seeds** out) {
  return guard([&] {
    need(normalized, "normalized");
    need(out, "out");
    *out = wrap_seeds(collate::two_cycle_seeds(normalized->value));
  });
}

collate_status collate_seeds_three_cycle(const collate_matrix* ab, const collate_matrix* bc,
                                         const collate_matrix* ac, collate_seeds** out_ab,
                                         collate_seeds** out_bc, collate_seeds** out_ac) {
  return guard([&] {
    need(ab, "ab");
    need(bc, "bc");
    need(ac, "ac");
    auto seeds = collate::three_cycle_seeds(ab->value, bc->value, ac->value);
    if (out_ab) *out_ab = wrap_seeds(std::move(seeds.ab));
    if (out_bc) *out_bc = wrap_seeds(std::move(seeds.bc));
    if (out_ac) *out_ac = wrap_seeds(std::move(seeds.ac));
  });
}

collate_status collate_seeds_load(const char* path, collate_seeds** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const fs::path p(path);
    if (p.extension() == ".csv") {
      const auto set = collate::load_correspondences(p);
      collate::SeedSet seeds;
      seeds.origin = collate::SeedOrigin::Confirmed;
      for (const auto& e : set.entries) {
        if (e.status != collate::MatchStatus::Rejected) seeds.pairs.insert({e.i, e.j});
      }
      *out = wrap_seeds(std::move(seeds));
      return;
    }
    std::ifstream in(p);
    if (!in) collate::fail(collate::ErrorKind::Io, "cannot open " + p.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      collate::fail(collate::ErrorKind::Parse, p.string() + ": " + e.what());
    }
    if (doc.contains("entries")) {
      const auto set = collate::correspondences_from_json(doc.dump());
      collate::SeedSet seeds;
      seeds.origin = collate::SeedOrigin::Confirmed;
      for (const auto& e : set.entries) {
        if (e.status != collate::MatchStatus::Rejected) seeds.pairs.insert({e.i, e.j});
      }
      *out = wrap_seeds(std::move(seeds));
    } else {
      *out = wrap_seeds(collate::seeds_from_json(doc));
    }
  });
}

collate_status collate_seeds_save(const collate_seeds* seeds, const char* path) {
  return guard([&] {
    need(seeds, "seeds");
    need(path, "path");
    std::ofstream out(path);
    if (!out) collate::fail(collate::ErrorKind::Io, std::string("cannot write ") + path);
    out << collate::seeds_to_json(seeds->value).dump(2) << '\n';
    if (!out) collate::fail(collate::ErrorKind::Io, std::string("cannot write ") + path);
  });
}

void collate_seeds_free(collate_seeds* seeds) { delete seeds; }

size_t collate_seeds_size(const collate_seeds* seeds) { return seeds ? seeds->ordered.size() : 0; }

collate_status collate_seeds_get(const collate_seeds* seeds, size_t k, size_t* i, size_t* j) {
  return guard([&] {
    need(seeds, "seeds");
    if (k >= seeds->ordered.size()) collate::fail(collate::ErrorKind::OutOfRange, "seed index");
    if (i) *i = seeds->ordered[k].first;
    if (j) *j = seeds->ordered[k].second;
  });
}

collate_status collate_propagate(const collate_matrix* normalized, const collate_seeds* seeds, double alpha,
                                 double sigma_p, collate_matrix** out) {
  return guard([&] {
    need(normalized, "normalized");
    need(seeds, "seeds");
    need(out, "out");
    collate::PropagationConfig cfg{alpha, sigma_p};
    *out = new collate_matrix{collate::propagate(normalized->value, seeds->value, cfg)};
  });
}

collate_status collate_match(const collate_matrix* matrix, const char* algo, collate_correspondences** out) {
  return guard([&] {
    need(matrix, "matrix");
    need(out, "out");
    const std::string a = algo ? algo : "greedy";
    collate::CorrespondenceSet set;
    if (a == "greedy") {
      set = collate::greedy_one_to_one(matrix->value);
    } else if (a == "argmax") {
      set = collate::argmax_correspondences(matrix->value, collate::Direction::Rows);
    } else if (a == "argmax_cols") {
      set = collate::argmax_correspondences(matrix->value, collate::Direction::Cols);
    } else {
      collate::fail(collate::ErrorKind::InvalidArgument, "unknown match algorithm '" + a + "'");
    }
    *out = new collate_correspondences{std::move(set)};
  });
}

collate_status collate_correspondences_load(const char* path, collate_correspondences** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new collate_correspondences{collate::load_correspondences(path)};
  });
}

collate_status collate_correspondences_save(const collate_correspondences* set, const char* path,
                                            const char* format) {
  return guard([&] {
    need(set, "set");
    need(path, "path");
    const std::string f = format ? format : (fs::path(path).extension() == ".csv" ? "csv" : "json");
    if (f == "json") {
      collate::save_correspondences_json(set->value, path);
    } else if (f == "csv") {
      collate::save_correspondences_csv(set->value, path);
    } else {
      collate::fail(collate::ErrorKind::InvalidArgument, "unknown format '" + f + "'");
    }
  });
}

void collate_correspondences_free(collate_correspondences* set) { delete set; }

size_t collate_correspondences_size(const collate_correspondences* set) { return set ? set->value.size() : 0; }

collate_status collate_correspondences_get(const collate_correspondences* set, size_t k, size_t* i, size_t* j,
                                           double* score) {
  return guard([&] {
    need(set, "set");
    if (k >= set->value.size()) collate::fail(collate::ErrorKind::OutOfRange, "entry index");
    const auto& e = set->value.entries[k];
    if (i) *i = e.i;
    if (j) *j = e.j;
    if (score) *score = e.score;
  });
}

collate_status collate_correspondences_set_pair(collate_correspondences* set, const char* a, const char* b) {
  return guard([&] {
    need(set, "set");
    need(a, "a");
    need(b, "b");
    set->value.pair_id = {a, b};
  });
}

collate_status collate_evaluate(const collate_matrix* matrix, const collate_correspondences* predicted,
                                const collate_correspondences* ground_truth, const char* metrics,
                                const char* label, char** report_json, char** report_text) {
  return guard([&] {
    need(ground_truth, "ground_truth");
    if (matrix == nullptr && predicted == nullptr) {
      collate::fail(collate::ErrorKind::InvalidArgument, "need a matrix or predicted matches");
    }
    const auto& gt = ground_truth->value;
    collate::EvalReport report;
    report.n_annotated = gt.size();
    std::string spec = metrics ? metrics : "acc,recall_n,map_r,nn:1,5,10,20";
    // "nn:" consumes the rest of the list.
    std::vector<std::size_t> nn_ks;
    if (const auto pos = spec.find("nn:"); pos != std::string::npos) {
      for (const auto& k : split(std::string_view(spec).substr(pos + 3), ',')) {
        try {
          nn_ks.push_back(std::stoul(k));
        } catch (const std::exception&) {
          collate::fail(collate::ErrorKind::InvalidArgument, "bad nn cut-off '" + k + "'");
        }
      }
      spec.erase(pos);
    }
    for (const auto& name : split(spec, ',')) {
      if (name == "acc") {
        collate::EvalReport acc;
        if (predicted != nullptr) {
          acc = collate::accuracy(predicted->value, predicted->value, gt);
        } else {
          acc = collate::accuracy(collate::argmax_correspondences(matrix->value, collate::Direction::Rows),
                                  collate::argmax_correspondences(matrix->value, collate::Direction::Cols), gt);
        }
        report.accuracy_dir1 = acc.accuracy_dir1;
        report.accuracy_dir2 = acc.accuracy_dir2;
        report.accuracy_avg = acc.accuracy_avg;
        continue;
      }
      if (matrix == nullptr) {
        collate::fail(collate::ErrorKind::InvalidArgument, "metric '" + name + "' needs a similarity matrix");
      }
      if (name == "recall_n") {
        report.recall_at_n = collate::recall_at_n(matrix->value, gt);
      } else if (name == "recall_n_greedy") {
        report.recall_at_n = collate::recall_at_n(matrix->value, gt, true);
      } else if (name == "map_r") {
        report.map_at_r = collate::map_at_r(matrix->value, gt);
      } else {
        collate::fail(collate::ErrorKind::InvalidArgument, "unknown metric '" + name + "'");
      }
    }
    if (!nn_ks.empty()) {
      if (matrix == nullptr) collate::fail(collate::ErrorKind::InvalidArgument, "nn recall needs a similarity matrix");
      report.nn_recall = collate::nn_recall(matrix->value, gt, nn_ks);
    }
    put(report_json, report.to_json().dump(2));
    put(report_text, report.to_text(label ? label : "value"));
  });
}

collate_status collate_project_create(const char* dir, const char* project_id, const char* const* manifests,
                                      size_t n_manifests, const char* config_json, collate_project** out) {
  return guard([&] {
    need(dir, "dir");
    need(project_id, "project_id");
    need(out, "out");
    if (n_manifests > 0) need(manifests, "manifests");
    std::vector<fs::path> paths;
    for (size_t k = 0; k < n_manifests; ++k) {
      need(manifests[k], "manifest");
      paths.emplace_back(manifests[k]);
    }
    collate::PipelineConfig cfg;
    if (config_json != nullptr && *config_json != '\0') {
      cfg = collate::PipelineConfig::from_json(json::parse(config_json));
    }
    *out = new collate_project{collate::Project::create(dir, project_id, paths, cfg)};
  });
}

collate_status collate_project_open(const char* dir, collate_project** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new collate_project{collate::Project::open(dir)};
  });
}

void collate_project_free(collate_project* project) { delete project; }

uint64_t collate_project_revision(const collate_project* project) {
  return project ? project->value.revision() : 0;
}

collate_status collate_project_run(collate_project* project, const char* a, const char* b, const char* stages,
                                   char** summary_json) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    const auto summary = project->value.run_pipeline({a, b}, parse_stage_list(stages));
    put(summary_json, run_summary_json(summary).dump(2));
  });
}

collate_status collate_project_confirm(collate_project* project, const char* a, const char* b, size_t i,
                                       size_t j) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    project->value.confirm({a, b}, i, j);
  });
}

collate_status collate_project_reject(collate_project* project, const char* a, const char* b, size_t i,
                                      size_t j) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    project->value.reject({a, b}, i, j);
  });
}

collate_status collate_project_candidates(const collate_project* project, const char* a, const char* b,
                                          size_t i, size_t k, int mask_rejected, char** candidates_json) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    json list = json::array();
    for (const auto& c : project->value.candidates({a, b}, i, k, mask_rejected != 0)) {
      list.push_back({{"j", c.j},
                      {"id", c.illustration_id},
                      {"score", c.score},
                      {"status", c.status ? json(collate::to_string(*c.status)) : json()}});
    }
    put(candidates_json, json{{"revision", project->value.revision()}, {"candidates", list}}.dump(2));
  });
}

collate_status collate_project_status(const collate_project* project, const char* a, const char* b,
                                      char** status_json) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    json stages = json::object();
    for (const auto& st : project->value.status({a, b})) {
      stages[std::string(collate::to_string(st.stage))] = {
          {"present", st.present}, {"stale", st.stale}, {"revision", st.revision}};
    }
    put(status_json, json{{"revision", project->value.revision()}, {"stages", stages}}.dump(2));
  });
}

collate_status collate_project_export(const collate_project* project, const char* a, const char* b,
                                      const char* format, const char* path) {
  return guard([&] {
    need(project, "project");
    need(a, "a");
    need(b, "b");
    need(path, "path");
    project->value.export_matches({a, b}, format ? format : "json", path);
  });
}

collate_status collate_project_set_image(collate_project* project, const char* illustration_id,
                                         const char* full_path, const char* thumbnail_path) {
  return guard([&] {
    need(project, "project");
    need(illustration_id, "illustration_id");
    need(full_path, "full_path");
    project->value.set_image(illustration_id, {full_path, thumbnail_path ? thumbnail_path : ""});
  });
}

collate_status collate_serve(const char* project_dir, const char* host, int port,
                             void (*on_bound)(int port, void* user), void* user) {
  return guard([&] {
    need(project_dir, "project_dir");
    collate::ProjectService service(collate::Project::open(project_dir));
    collate::HttpServer server(service);
    const int bound = server.bind(host ? host : "127.0.0.1", port);
    if (on_bound) on_bound(bound, user);
    server.listen();
  });
}

collate_status collate_synth_write(const char* options_json, const char* out_dir, char** info_json) {
  return guard([&] {
    need(out_dir, "out_dir");
    const json o = (options_json && *options_json) ? json::parse(options_json) : json::object();
    collate::synth::SynthOptions opts;
    opts.seed = o.value("seed", std::uint64_t{0});
    opts.n_illustrations = o.value("n", std::size_t{10});
    opts.channels = o.value("channels", 32u);
    opts.style_noise = o.value("style_noise", 0.0);
    opts.hub_strength = o.value("hub_strength", 0.0);
    opts.texture_side = o.value("texture_side", 12u);
    if (o.contains("scale_tags")) opts.render.scale_tags = o.at("scale_tags").get<std::vector<int>>();
    opts.render.fixed_side = o.value("fixed_side", opts.render.fixed_side);
    const std::size_t max_shift = o.value("max_shift", std::size_t{0});
    if (max_shift > 0) {
      opts.permutation = collate::synth::locality_permutation(opts.n_illustrations, max_shift, opts.seed ^ 0x5eedULL);
    }
    const auto pair = collate::synth::synth_manuscripts(opts);
    const fs::path dir(out_dir);
    const auto ma = collate::save_manuscript(pair.a, dir / pair.a.manuscript_id);
    const auto mb = collate::save_manuscript(pair.b, dir / pair.b.manuscript_id);
    const fs::path truth = dir / "truth.json";
    collate::save_correspondences_json(pair.truth, truth);
    put(info_json, json{{"manifest_a", ma.string()},
                        {"manifest_b", mb.string()},
                        {"truth", truth.string()},
                        {"n", opts.n_illustrations}}
                       .dump(2));
  });
}

}  // extern "C"
