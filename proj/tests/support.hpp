#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evalsys/api_service.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/store.hpp"

namespace evalsys::testing {

// Six items, every competence present, both polarities in two competences.
inline QuestionBank small_bank() {
  return QuestionBank::from_items({
      {1, "s1", Competence::Scientific, Polarity::Direct},
      {2, "s2", Competence::Scientific, Polarity::Reverse},
      {3, "p1", Competence::PsychoPedagogical, Polarity::Reverse},
      {4, "o1", Competence::Psychosocial, Polarity::Direct},
      {5, "m1", Competence::Managerial, Polarity::Direct},
      {6, "m2", Competence::Managerial, Polarity::Reverse},
  });
}

inline StoreOptions fast_options() {
  StoreOptions o;
  o.password_params = PasswordHashParams::minimal();
  o.durable = false;
  return o;
}

inline Timestamp t0() { return *parse_utc("2026-06-26T08:00:00Z"); }

inline std::vector<ResponseValue> responses(const std::vector<int>& raw) {
  std::vector<ResponseValue> out;
  for (int v : raw) out.emplace_back(v);
  return out;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "evalsys-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Teachers T1, T2 (chair C1 of faculty F1) and T3 (chair C2 of faculty F2),
// evaluation active on T1 for loopback.
inline void seed_three(Store& store, const std::string& selected = "T1") {
  store.put_teacher({"T1", "Teacher One", "C1", "F1", std::nullopt});
  store.put_teacher({"T2", "Teacher Two", "C1", "F1", std::nullopt});
  store.put_teacher({"T3", "Teacher Three", "C2", "F2", std::nullopt});
  StateChanges s;
  s.active = true;
  s.selected_teacher = std::optional<std::string>(selected);
  s.allowlist = std::vector<IpAddress>{*IpAddress::parse("127.0.0.1")};
  store.set_state(s);
}

inline std::string basic_auth(const std::string& user, const std::string& pass) {
  const std::string raw = user + ":" + pass;
  return "Basic " + httplib::detail::base64_encode(raw);
}

// A live service on 127.0.0.1 with an adjustable clock.
struct LiveService {
  explicit LiveService(const QuestionBank& bank, std::unique_ptr<Store> s = nullptr,
                       ServiceConfig config = {})
      : store(s ? std::move(s) : Store::open_in_memory(fast_options())),
        bank_ref(bank),
        entropy(7),
        api(*store, bank_ref, entropy, config, [this] { return now.load(); }),
        server(api) {
    port = server.bind("127.0.0.1", 0);
    server.start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(30, 0);
  }
  ~LiveService() { server.stop(); }

  nlohmann::json body(const httplib::Result& r) const {
    return nlohmann::json::parse(r->body);
  }

  std::unique_ptr<Store> store;
  const QuestionBank& bank_ref;
  SeededEntropy entropy;
  std::atomic<Timestamp> now{t0()};
  ApiService api;
  HttpServer server;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

}  // namespace evalsys::testing
