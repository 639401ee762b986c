#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "evalsys/error.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/session_engine.hpp"
#include "evalsys/store.hpp"

namespace httplib {
class Server;
}

namespace evalsys {

struct ApiErrorInfo {
  std::string_view code;
  int http_status;
};

/// The stable wire code and status for each engine/store error.
ApiErrorInfo api_error(ErrorCode code);

struct ServiceConfig {
  std::chrono::seconds session_ttl = kDefaultSessionTtl;
  /// Take the client address from X-Forwarded-For instead of the TCP peer.
  bool trust_proxy = false;
  /// Directory with the built UI bundle, served at "/". Empty: no static files.
  std::string ui_dir;
};

using Clock = std::function<Timestamp()>;

/// HTTP/JSON surface over the store, the session engine and aggregation.
class ApiService {
 public:
  ApiService(Store& store, const QuestionBank& bank, EntropySource& entropy,
             ServiceConfig config = {}, Clock clock = now_utc);
  ~ApiService();

  void register_routes(httplib::Server& server);

  SessionEngine& engine() { return engine_; }

 private:
  struct Handlers;

  Store& store_;
  const QuestionBank& bank_;
  EntropySource& entropy_;
  ServiceConfig config_;
  Clock clock_;
  SessionEngine engine_;
};

/// Owns an httplib::Server bound to one address; used by `serve`, the
/// simulator and the HTTP tests.
class HttpServer {
 public:
  HttpServer(ApiService& api);
  ~HttpServer();

  /// port 0 picks a free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// listen() on a background thread; returns once the socket accepts.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace evalsys
