#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace usagelog {

using ApiParams = std::multimap<std::string, std::string>;

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Read-only JSON views over one published artifacts directory. Requests see
/// a consistent snapshot; reload() swaps in a new one atomically.
class ApiService {
 public:
  explicit ApiService(std::filesystem::path artifacts_dir);
  ~ApiService();

  /// Paths: /api/recommend, /api/rankings, /api/map, /api/agents, /api/stats.
  ApiResponse handle(std::string_view path, const ApiParams& params) const;

  /// Re-reads the artifacts. Returns false (keeping the old snapshot) when
  /// they cannot be read.
  bool reload();
  bool ready() const;
  const std::filesystem::path& artifacts_dir() const { return dir_; }

  struct Snapshot;

 private:
  std::shared_ptr<const Snapshot> current() const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

/// GET-only HTTP front end for an ApiService.
class ApiHttpServer {
 public:
  explicit ApiHttpServer(ApiService& service);
  ~ApiHttpServer();
  ApiHttpServer(const ApiHttpServer&) = delete;
  ApiHttpServer& operator=(const ApiHttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace usagelog
