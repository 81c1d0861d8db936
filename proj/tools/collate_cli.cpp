// Command-line front end over the C API.
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "collate/collate.h"

namespace {

struct Failure {
  collate_status status;
};

void check(collate_status st) {
  if (st != COLLATE_OK) throw Failure{st};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Manuscript = std::unique_ptr<collate_manuscript, Deleter<collate_manuscript, collate_manuscript_free>>;
using Matrix = std::unique_ptr<collate_matrix, Deleter<collate_matrix, collate_matrix_free>>;
using Seeds = std::unique_ptr<collate_seeds, Deleter<collate_seeds, collate_seeds_free>>;
using Matches =
    std::unique_ptr<collate_correspondences, Deleter<collate_correspondences, collate_correspondences_free>>;
using ProjectHandle = std::unique_ptr<collate_project, Deleter<collate_project, collate_project_free>>;

// Takes ownership of a library string and prints it.
void emit(char* text, std::FILE* to = stdout) {
  if (text == nullptr) return;
  std::fputs(text, to);
  const std::size_t n = std::char_traits<char>::length(text);
  if (n == 0 || text[n - 1] != '\n') std::fputc('\n', to);
  collate_string_free(text);
}

Matrix load_matrix(const std::string& path) {
  collate_matrix* m = nullptr;
  check(collate_matrix_load(path.c_str(), &m));
  return Matrix(m);
}

ProjectHandle open_project(const std::string& dir) {
  collate_project* p = nullptr;
  check(collate_project_open(dir.c_str(), &p));
  return ProjectHandle(p);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Illustration collation across manuscripts", "collate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", collate_version());

  std::string manifest;
  auto* features_check = app.add_subcommand("features-check", "Load and validate a manuscript manifest");
  features_check->add_option("manifest", manifest, "Manifest JSON")->required();

  std::string sim_a, sim_b, sim_out, sim_method = "trans", sim_tags;
  std::uint64_t sim_seed = 0;
  unsigned sim_workers = 1;
  int sim_iterations = 100;
  auto* sim = app.add_subcommand("sim", "Compute the similarity matrix between two manuscripts");
  sim->add_option("A", sim_a, "Manifest of manuscript A")->required();
  sim->add_option("B", sim_b, "Manifest of manuscript B")->required();
  sim->add_option("--method", sim_method, "features | matching | trans")
      ->check(CLI::IsMember({"features", "matching", "trans"}));
  sim->add_option("--seed", sim_seed, "RANSAC seed");
  sim->add_option("--workers", sim_workers, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--ransac-iterations", sim_iterations, "RANSAC iterations");
  sim->add_option("--scales", sim_tags, "Comma-separated scale tags (default 18..22)");
  sim->add_option("-o,--output", sim_out, "Output matrix header (JSON)")->required();

  std::string norm_in, norm_out, norm_scheme = "over_max", norm_combine = "sum";
  double norm_lambda = NAN;
  auto* normalize = app.add_subcommand("normalize", "Normalize a raw similarity matrix");
  normalize->add_option("matrix", norm_in)->required();
  normalize->add_option("--scheme", norm_scheme,
                        "softmax | softmax_over_avg | softmax_over_max | over_avg | over_max");
  normalize->add_option("--combine", norm_combine, "sum | hadamard");
  normalize->add_option("--lambda", norm_lambda, "Softmax temperature (default 50)");
  normalize->add_option("-o,--output", norm_out)->required();

  std::string prop_in, prop_out, prop_mode = "2cycle", prop_seeds_file, prop_bc, prop_ac, prop_seeds_out;
  double prop_alpha = 0.25, prop_sigma = 5.0;
  auto* propagate = app.add_subcommand("propagate", "Boost entries near confident seeds");
  propagate->add_option("matrix", prop_in, "Normalized matrix (A-B)")->required();
  propagate->add_option("--seeds", prop_mode, "2cycle | 3cycle | file")
      ->check(CLI::IsMember({"2cycle", "3cycle", "file"}));
  propagate->add_option("--seeds-file", prop_seeds_file, "Seed or correspondence file for --seeds file");
  propagate->add_option("--bc", prop_bc, "Normalized B-C matrix for --seeds 3cycle");
  propagate->add_option("--ac", prop_ac, "Normalized A-C matrix for --seeds 3cycle");
  propagate->add_option("--alpha", prop_alpha);
  propagate->add_option("--sigma-p", prop_sigma);
  propagate->add_option("--save-seeds", prop_seeds_out, "Also write the seed set used");
  propagate->add_option("-o,--output", prop_out)->required();

  std::string match_in, match_out, match_algo = "greedy";
  auto* match = app.add_subcommand("match", "Extract correspondences from a matrix");
  match->add_option("matrix", match_in)->required();
  match->add_option("--algo", match_algo, "argmax | greedy")->check(CLI::IsMember({"argmax", "argmax_cols", "greedy"}));
  match->add_option("-o,--output", match_out, "Output .json or .csv (stdout JSON if omitted)");

  std::string eval_in, eval_gt, eval_metrics = "acc,recall_n,map_r,nn:1,5,10,20", eval_label = "value";
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a matrix or a match file against ground truth");
  eval->add_option("input", eval_in, "Matrix header or correspondence file")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth correspondence file")->required();
  eval->add_option("--metrics", eval_metrics, "acc,recall_n,recall_n_greedy,map_r,nn:K1,K2,...");
  eval->add_option("--label", eval_label, "Column label of the text table");
  eval->add_flag("--json", eval_json, "Print JSON instead of the table");

  std::string serve_dir, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve a project over HTTP");
  serve->add_option("--project", serve_dir)->required();
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);

  std::string init_dir, init_id, init_config;
  std::vector<std::string> init_manifests;
  auto* init = app.add_subcommand("init", "Create a project");
  init->add_option("dir", init_dir)->required();
  init->add_option("--id", init_id, "Project id")->required();
  init->add_option("--manifest", init_manifests, "Manuscript manifest (repeat)")->required();
  init->add_option("--config", init_config, "Pipeline config JSON file");

  std::string run_dir, run_a, run_b, run_stages;
  auto* run = app.add_subcommand("run", "Run pipeline stages of a project pair");
  run->add_option("--project", run_dir)->required();
  run->add_option("a", run_a)->required();
  run->add_option("b", run_b)->required();
  run->add_option("--stages", run_stages, "Comma list; default all");

  std::string ann_dir, ann_a, ann_b;
  std::size_t ann_i = 0, ann_j = 0;
  auto* confirm = app.add_subcommand("confirm", "Confirm a correspondence");
  auto* reject = app.add_subcommand("reject", "Reject a correspondence");
  for (auto* cmd : {confirm, reject}) {
    cmd->add_option("--project", ann_dir)->required();
    cmd->add_option("a", ann_a)->required();
    cmd->add_option("b", ann_b)->required();
    cmd->add_option("i", ann_i)->required();
    cmd->add_option("j", ann_j)->required();
  }

  std::string cand_dir, cand_a, cand_b;
  std::size_t cand_i = 0, cand_k = 5;
  bool cand_mask = false;
  auto* candidates = app.add_subcommand("candidates", "Top-k candidates of a query");
  candidates->add_option("--project", cand_dir)->required();
  candidates->add_option("a", cand_a)->required();
  candidates->add_option("b", cand_b)->required();
  candidates->add_option("i", cand_i)->required();
  candidates->add_option("-k", cand_k);
  candidates->add_flag("--mask-rejected", cand_mask);

  std::string exp_dir, exp_a, exp_b, exp_out, exp_format;
  auto* export_cmd = app.add_subcommand("export", "Export matches of a project pair");
  export_cmd->add_option("--project", exp_dir)->required();
  export_cmd->add_option("a", exp_a)->required();
  export_cmd->add_option("b", exp_b)->required();
  export_cmd->add_option("--format", exp_format, "json | csv (default from extension)");
  export_cmd->add_option("-o,--output", exp_out)->required();

  std::string synth_out, synth_options = "{}";
  auto* synth = app.add_subcommand("synth", "Write a synthetic manuscript pair with ground truth");
  synth->add_option("out", synth_out)->required();
  synth->add_option("--options", synth_options, "JSON options: seed, n, channels, style_noise, ...");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*features_check) {
      char* report = nullptr;
      check(collate_features_check(manifest.c_str(), &report));
      emit(report);
    } else if (*sim) {
      collate_manuscript *a = nullptr, *b = nullptr;
      check(collate_manuscript_load(sim_a.c_str(), &a));
      Manuscript ma(a);
      check(collate_manuscript_load(sim_b.c_str(), &b));
      Manuscript mb(b);
      collate_similarity_options opts;
      collate_similarity_options_init(&opts);
      opts.method = sim_method.c_str();
      opts.seed = sim_seed;
      opts.workers = sim_workers;
      opts.ransac_iterations = sim_iterations;
      std::vector<int> tags;
      if (!sim_tags.empty()) {
        for (const auto& t : CLI::detail::split(sim_tags, ',')) tags.push_back(std::stoi(t));
        opts.scale_tags = tags.data();
        opts.n_scale_tags = tags.size();
        opts.base_scale = tags[tags.size() / 2];
      }
      collate_matrix* m = nullptr;
      check(collate_similarity_matrix(ma.get(), mb.get(), &opts, &m));
      Matrix out(m);
      check(collate_matrix_save(out.get(), sim_out.c_str()));
      std::printf("%zu x %zu %s matrix written to %s\n", collate_matrix_rows(m), collate_matrix_cols(m),
                  sim_method.c_str(), sim_out.c_str());
    } else if (*normalize) {
      auto in = load_matrix(norm_in);
      collate_matrix* m = nullptr;
      char* warnings = nullptr;
      check(collate_normalize(in.get(), norm_scheme.c_str(), norm_combine.c_str(), norm_lambda, &m, &warnings));
      Matrix out(m);
      check(collate_matrix_save(out.get(), norm_out.c_str()));
      if (warnings != nullptr && std::string(warnings) != "[]") emit(warnings, stderr);
      else collate_string_free(warnings);
    } else if (*propagate) {
      auto in = load_matrix(prop_in);
      collate_seeds* s = nullptr;
      if (prop_mode == "2cycle") {
        check(collate_seeds_two_cycle(in.get(), &s));
      } else if (prop_mode == "3cycle") {
        if (prop_bc.empty() || prop_ac.empty()) throw CLI::ValidationError("--seeds 3cycle needs --bc and --ac");
        auto bc = load_matrix(prop_bc);
        auto ac = load_matrix(prop_ac);
        check(collate_seeds_three_cycle(in.get(), bc.get(), ac.get(), &s, nullptr, nullptr));
      } else {
        if (prop_seeds_file.empty()) throw CLI::ValidationError("--seeds file needs --seeds-file");
        check(collate_seeds_load(prop_seeds_file.c_str(), &s));
      }
      Seeds seeds(s);
      if (!prop_seeds_out.empty()) check(collate_seeds_save(seeds.get(), prop_seeds_out.c_str()));
      collate_matrix* m = nullptr;
      check(collate_propagate(in.get(), seeds.get(), prop_alpha, prop_sigma, &m));
      Matrix out(m);
      check(collate_matrix_save(out.get(), prop_out.c_str()));
      std::printf("%zu seeds, propagated matrix written to %s\n", collate_seeds_size(seeds.get()),
                  prop_out.c_str());
    } else if (*match) {
      auto in = load_matrix(match_in);
      collate_correspondences* c = nullptr;
      check(collate_match(in.get(), match_algo.c_str(), &c));
      Matches set(c);
      if (match_out.empty()) {
        check(collate_correspondences_save(set.get(), "/dev/stdout", "json"));
      } else {
        check(collate_correspondences_save(set.get(), match_out.c_str(), nullptr));
      }
    } else if (*eval) {
      collate_correspondences* g = nullptr;
      check(collate_correspondences_load(eval_gt.c_str(), &g));
      Matches gt(g);
      Matrix matrix;
      Matches predicted;
      // A correspondence file has "entries" or is CSV; anything else is a matrix header.
      bool is_matches = ends_with(eval_in, ".csv");
      if (!is_matches) {
        collate_matrix* m = nullptr;
        if (collate_matrix_load(eval_in.c_str(), &m) == COLLATE_OK) {
          matrix.reset(m);
        } else {
          is_matches = true;
        }
      }
      if (is_matches) {
        collate_correspondences* p = nullptr;
        check(collate_correspondences_load(eval_in.c_str(), &p));
        predicted.reset(p);
        if (eval_metrics == "acc,recall_n,map_r,nn:1,5,10,20") eval_metrics = "acc";
      }
      char *json = nullptr, *text = nullptr;
      check(collate_evaluate(matrix.get(), predicted.get(), gt.get(), eval_metrics.c_str(), eval_label.c_str(),
                             eval_json ? &json : nullptr, eval_json ? nullptr : &text));
      emit(eval_json ? json : text);
    } else if (*serve) {
      check(collate_serve(
          serve_dir.c_str(), serve_host.c_str(), serve_port,
          [](int port, void*) {
            std::printf("listening on port %d\n", port);
            std::fflush(stdout);
          },
          nullptr));
    } else if (*init) {
      std::string config;
      if (!init_config.empty()) {
        std::FILE* f = std::fopen(init_config.c_str(), "rb");
        if (f == nullptr) throw CLI::ValidationError("cannot read " + init_config);
        char buf[4096];
        std::size_t n = 0;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) config.append(buf, n);
        std::fclose(f);
      }
      std::vector<const char*> paths;
      for (const auto& m : init_manifests) paths.push_back(m.c_str());
      collate_project* p = nullptr;
      check(collate_project_create(init_dir.c_str(), init_id.c_str(), paths.data(), paths.size(), config.c_str(),
                                   &p));
      ProjectHandle project(p);
      std::printf("project %s created at revision %llu\n", init_id.c_str(),
                  static_cast<unsigned long long>(collate_project_revision(p)));
    } else if (*run) {
      auto project = open_project(run_dir);
      char* summary = nullptr;
      check(collate_project_run(project.get(), run_a.c_str(), run_b.c_str(), run_stages.c_str(), &summary));
      emit(summary);
    } else if (*confirm || *reject) {
      auto project = open_project(ann_dir);
      if (*confirm) {
        check(collate_project_confirm(project.get(), ann_a.c_str(), ann_b.c_str(), ann_i, ann_j));
      } else {
        check(collate_project_reject(project.get(), ann_a.c_str(), ann_b.c_str(), ann_i, ann_j));
      }
      std::printf("revision %llu\n", static_cast<unsigned long long>(collate_project_revision(project.get())));
    } else if (*candidates) {
      auto project = open_project(cand_dir);
      char* list = nullptr;
      check(collate_project_candidates(project.get(), cand_a.c_str(), cand_b.c_str(), cand_i, cand_k,
                                       cand_mask ? 1 : 0, &list));
      emit(list);
    } else if (*export_cmd) {
      auto project = open_project(exp_dir);
      const std::string format = !exp_format.empty() ? exp_format : (ends_with(exp_out, ".csv") ? "csv" : "json");
      check(collate_project_export(project.get(), exp_a.c_str(), exp_b.c_str(), format.c_str(), exp_out.c_str()));
    } else if (*synth) {
      char* info = nullptr;
      check(collate_synth_write(synth_options.c_str(), synth_out.c_str(), &info));
      emit(info);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", collate_status_name(f.status), collate_last_error());
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
