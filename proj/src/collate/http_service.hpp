#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "collate/project.hpp"

namespace collate {

struct RunStatus {
  std::string state = "idle";  // idle | running | done | failed
  std::string message;
  RunSummary summary;
  std::uint64_t run_id = 0;
};

// Thread-safe front of a Project. Reads share a lock; every mutation goes
// through one writer mutex. Pipeline runs execute on a background thread and
// only take the exclusive state lock to commit, so readers keep seeing the
// previous revision while a run computes.
class ProjectService {
 public:
  explicit ProjectService(Project project);
  ~ProjectService();

  ProjectService(const ProjectService&) = delete;
  ProjectService& operator=(const ProjectService&) = delete;

  std::uint64_t revision() const;

  nlohmann::json manuscripts_json() const;
  nlohmann::json candidates_json(const PairKey& pair, std::size_t i, std::size_t k,
                                 bool mask_rejected) const;
  nlohmann::json matches_json(const PairKey& pair) const;
  nlohmann::json status_json(const PairKey& pair) const;
  std::optional<std::filesystem::path> image(const std::string& illustration_id, bool thumbnail) const;

  nlohmann::json confirm(const PairKey& pair, std::size_t i, std::size_t j);
  nlohmann::json reject(const PairKey& pair, std::size_t i, std::size_t j);

  // Validates the request, then runs it in the background. Only one run per
  // project executes at a time; a second request fails with Conflict.
  nlohmann::json start_run(const PairKey& pair, const std::set<Stage>& stages);
  RunSummary run(const PairKey& pair, const std::set<Stage>& stages);
  // Blocks until no run is in flight.
  void wait_idle();

 private:
  nlohmann::json annotate(const PairKey& pair, std::size_t i, std::size_t j, MatchStatus status);
  RunSummary run_locked(const PairKey& pair, const std::set<Stage>& stages);

  mutable std::shared_mutex state_mutex_;
  std::mutex writer_mutex_;
  Project project_;

  mutable std::mutex runs_mutex_;
  std::map<PairKey, RunStatus> runs_;
  bool running_ = false;
  std::uint64_t next_run_id_ = 1;
  std::jthread worker_;
};

std::set<Stage> parse_stages(const nlohmann::json& list);

class HttpServer {
 public:
  explicit HttpServer(ProjectService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Opens the project in `project_dir` and serves it until the process exits.
void serve_project(const std::filesystem::path& project_dir, const std::string& host, int port);

}  // namespace collate
