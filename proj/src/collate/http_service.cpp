#include "collate/http_service.hpp"

#include <condition_variable>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "collate/error.hpp"

namespace collate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json entry_json(const Correspondence& e) {
  return {{"i", e.i},
          {"j", e.j},
          {"status", to_string(e.status)},
          {"score", e.score},
          {"source", to_string(e.source)}};
}

json summary_json(const RunSummary& s) {
  json ran = json::array(), skipped = json::array();
  for (Stage st : s.ran) ran.push_back(to_string(st));
  for (Stage st : s.skipped) skipped.push_back(to_string(st));
  return {{"ran", ran}, {"skipped", skipped}, {"revision", s.revision}, {"warnings", s.warnings}};
}

}  // namespace

std::set<Stage> parse_stages(const json& list) {
  std::set<Stage> stages;
  if (!list.is_array()) fail(ErrorKind::InvalidArgument, "stages must be a list");
  for (const auto& s : list) {
    if (!s.is_string()) fail(ErrorKind::InvalidArgument, "stage names must be strings");
    stages.insert(parse_stage(s.get<std::string>()));
  }
  return stages;
}

ProjectService::ProjectService(Project project) : project_(std::move(project)) {}

ProjectService::~ProjectService() { wait_idle(); }

std::uint64_t ProjectService::revision() const {
  std::shared_lock lock(state_mutex_);
  return project_.revision();
}

json ProjectService::manuscripts_json() const {
  std::shared_lock lock(state_mutex_);
  json list = json::array();
  for (const auto& m : project_.manuscripts()) {
    json illustrations = json::array();
    for (std::size_t i = 0; i < m.illustration_ids.size(); ++i) {
      illustrations.push_back({{"index", i},
                               {"id", m.illustration_ids[i]},
                               {"image", project_.has_image(m.illustration_ids[i])}});
    }
    list.push_back({{"id", m.id}, {"count", m.illustration_ids.size()}, {"illustrations", illustrations}});
  }
  return {{"revision", project_.revision()}, {"project_id", project_.id()}, {"manuscripts", list}};
}

json ProjectService::candidates_json(const PairKey& pair, std::size_t i, std::size_t k,
                                     bool mask_rejected) const {
  std::shared_lock lock(state_mutex_);
  json list = json::array();
  for (const auto& c : project_.candidates(pair, i, k, mask_rejected)) {
    list.push_back({{"j", c.j},
                    {"id", c.illustration_id},
                    {"score", c.score},
                    {"status", c.status ? json(to_string(*c.status)) : json()}});
  }
  const auto& ids = project_.manuscript(pair.a).illustration_ids;
  return {{"revision", project_.revision()},
          {"pair", {pair.a, pair.b}},
          {"query", {{"i", i}, {"id", i < ids.size() ? ids[i] : std::string()}}},
          {"k", k},
          {"candidates", list}};
}

json ProjectService::matches_json(const PairKey& pair) const {
  std::shared_lock lock(state_mutex_);
  json entries = json::array();
  for (const auto& e : project_.matches(pair).entries) entries.push_back(entry_json(e));
  return {{"revision", project_.revision()}, {"pair", {pair.a, pair.b}}, {"entries", entries}};
}

json ProjectService::status_json(const PairKey& pair) const {
  json stages = json::object();
  std::uint64_t revision = 0;
  {
    std::shared_lock lock(state_mutex_);
    for (const auto& st : project_.status(pair)) {
      stages[std::string(to_string(st.stage))] = {
          {"present", st.present}, {"stale", st.stale}, {"revision", st.revision}};
    }
    revision = project_.revision();
  }
  json run = {{"state", "idle"}};
  {
    std::lock_guard lock(runs_mutex_);
    if (const auto it = runs_.find(pair); it != runs_.end()) {
      run = {{"state", it->second.state},
             {"message", it->second.message},
             {"run_id", it->second.run_id},
             {"summary", summary_json(it->second.summary)}};
    }
  }
  return {{"revision", revision}, {"pair", {pair.a, pair.b}}, {"stages", stages}, {"run", run}};
}

std::optional<fs::path> ProjectService::image(const std::string& illustration_id, bool thumbnail) const {
  std::shared_lock lock(state_mutex_);
  return project_.image_path(illustration_id, thumbnail);
}

json ProjectService::annotate(const PairKey& pair, std::size_t i, std::size_t j, MatchStatus status) {
  std::lock_guard writer(writer_mutex_);
  std::unique_lock lock(state_mutex_);
  if (status == MatchStatus::Confirmed) {
    project_.confirm(pair, i, j);
  } else {
    project_.reject(pair, i, j);
  }
  const auto notes = project_.annotations(pair);
  const Correspondence* e = notes.find(i, j);
  return {{"revision", project_.revision()}, {"entry", e ? entry_json(*e) : json()}};
}

json ProjectService::confirm(const PairKey& pair, std::size_t i, std::size_t j) {
  return annotate(pair, i, j, MatchStatus::Confirmed);
}

json ProjectService::reject(const PairKey& pair, std::size_t i, std::size_t j) {
  return annotate(pair, i, j, MatchStatus::Rejected);
}

RunSummary ProjectService::run_locked(const PairKey& pair, const std::set<Stage>& stages) {
  RunPlan plan;
  {
    std::shared_lock lock(state_mutex_);
    plan = project_.plan_run(pair, stages);
  }
  // Only this thread mutates while writer_mutex_ is held, so executing
  // without the state lock is safe; it writes new revision-stamped files.
  RunOutput output = project_.execute_run(plan);
  std::unique_lock lock(state_mutex_);
  return project_.commit_run(std::move(output));
}

RunSummary ProjectService::run(const PairKey& pair, const std::set<Stage>& stages) {
  std::lock_guard writer(writer_mutex_);
  return run_locked(pair, stages);
}

json ProjectService::start_run(const PairKey& pair, const std::set<Stage>& stages) {
  {
    // Surface stage-order and argument errors synchronously.
    std::shared_lock lock(state_mutex_);
    project_.plan_run(pair, stages);
  }
  std::uint64_t run_id = 0;
  {
    std::lock_guard lock(runs_mutex_);
    if (running_) fail(ErrorKind::Conflict, "a pipeline run is already in progress");
    running_ = true;
    run_id = next_run_id_++;
    RunStatus& st = runs_[pair];
    st = RunStatus{};
    st.state = "running";
    st.run_id = run_id;
  }
  if (worker_.joinable()) worker_.join();
  worker_ = std::jthread([this, pair, stages, run_id] {
    RunStatus result;
    result.run_id = run_id;
    try {
      std::lock_guard writer(writer_mutex_);
      result.summary = run_locked(pair, stages);
      result.state = "done";
    } catch (const std::exception& e) {
      result.state = "failed";
      result.message = e.what();
    }
    std::lock_guard lock(runs_mutex_);
    runs_[pair] = std::move(result);
    running_ = false;
  });
  return {{"revision", revision()}, {"run", {{"state", "running"}, {"run_id", run_id}}}};
}

void ProjectService::wait_idle() {
  if (worker_.joinable()) worker_.join();
}

namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfRange: return 404;
    case ErrorKind::Empty:
    case ErrorKind::StageOrder:
    case ErrorKind::Conflict: return 409;
    case ErrorKind::InvalidArgument:
    case ErrorKind::Parse:
    case ErrorKind::DimensionMismatch: return 400;
    default: return 500;
  }
}

std::string content_type(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  return "application/octet-stream";
}

std::size_t parse_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "bad index '" + text + "'");
  }
}

std::pair<std::size_t, std::size_t> parse_ij(const std::string& body) {
  try {
    const json doc = json::parse(body);
    return {doc.at("i").get<std::size_t>(), doc.at("j").get<std::size_t>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("request body needs integer i and j: ") + e.what());
  }
}

}  // namespace

struct HttpServer::Impl {
  ProjectService& service;
  httplib::Server server;

  explicit Impl(ProjectService& s) : service(s) { routes(); }

  void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_header("X-Collate-Revision", std::to_string(service.revision()));
    res.set_content(body.dump(), "application/json");
  }

  // Runs a handler and converts library errors into JSON error responses.
  template <typename Fn>
  httplib::Server::Handler wrap(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply(res, {{"error", to_string(e.kind())}, {"message", e.what()}, {"revision", service.revision()}},
              http_status(e.kind()));
      } catch (const std::exception& e) {
        reply(res, {{"error", "internal"}, {"message", e.what()}, {"revision", service.revision()}}, 500);
      }
    };
  }

  static PairKey pair_of(const httplib::Request& req) {
    return {req.matches[1].str(), req.matches[2].str()};
  }

  void routes() {
    server.Get("/manuscripts", wrap([this](const httplib::Request&, httplib::Response& res) {
                 reply(res, service.manuscripts_json());
               }));
    server.Get(R"(/pairs/([^/]+)/([^/]+)/candidates/(\d+))",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const std::size_t k = req.has_param("k") ? parse_index(req.get_param_value("k")) : 5;
                 const bool mask = req.has_param("mask") && req.get_param_value("mask") == "rejected";
                 reply(res, service.candidates_json(pair_of(req), parse_index(req.matches[3].str()), k, mask));
               }));
    server.Post(R"(/pairs/([^/]+)/([^/]+)/confirm)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const auto [i, j] = parse_ij(req.body);
                  reply(res, service.confirm(pair_of(req), i, j));
                }));
    server.Post(R"(/pairs/([^/]+)/([^/]+)/reject)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  const auto [i, j] = parse_ij(req.body);
                  reply(res, service.reject(pair_of(req), i, j));
                }));
    server.Post(R"(/pairs/([^/]+)/([^/]+)/run)",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  json body;
                  try {
                    body = req.body.empty() ? json::object() : json::parse(req.body);
                  } catch (const json::exception& e) {
                    fail(ErrorKind::InvalidArgument, e.what());
                  }
                  json stages = body.value("stages", json::array({"similarity", "normalize", "propagate", "match"}));
                  reply(res, service.start_run(pair_of(req), parse_stages(stages)), 202);
                }));
    server.Get(R"(/pairs/([^/]+)/([^/]+)/status)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.status_json(pair_of(req)));
               }));
    server.Get(R"(/pairs/([^/]+)/([^/]+)/matches)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.matches_json(pair_of(req)));
               }));
    server.Get(R"(/images/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const bool thumb = req.has_param("size") && req.get_param_value("size") == "thumb";
                 const auto path = service.image(req.matches[1].str(), thumb);
                 if (!path) {
                   reply(res, {{"error", "image-missing"}, {"id", req.matches[1].str()},
                               {"revision", service.revision()}}, 404);
                   return;
                 }
                 std::ifstream in(*path, std::ios::binary);
                 std::stringstream buffer;
                 buffer << in.rdbuf();
                 res.set_header("X-Collate-Revision", std::to_string(service.revision()));
                 res.set_content(buffer.str(), content_type(*path));
               }));
  }
};

HttpServer::HttpServer(ProjectService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void serve_project(const fs::path& project_dir, const std::string& host, int port) {
  ProjectService service(Project::open(project_dir));
  HttpServer server(service);
  server.bind(host, port);
  server.listen();
}

}  // namespace collate
