// evalsys: operator entry point for the teaching-staff evaluation service.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <httplib.h>

#include "evalsys/api_service.hpp"
#include "evalsys/error.hpp"
#include "evalsys/ops.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/store.hpp"

namespace {

using namespace evalsys;

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct BankOptions {
  std::string path;

  QuestionBank load() const {
    return path.empty() ? default_bank() : load_bank_file(path);
  }
};

struct HashOptions {
  std::uint64_t ops = PasswordHashParams{}.ops_limit;
  std::size_t mem_kib = PasswordHashParams{}.mem_limit / 1024;

  StoreOptions store_options() const {
    StoreOptions o;
    o.password_params = {ops, mem_kib * 1024};
    return o;
  }
};

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) {
    throw CLI::ValidationError("--addr", "expected HOST:PORT, got " + addr);
  }
  std::string host = addr.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  return {host, std::stoi(addr.substr(colon + 1))};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Blocks SIGINT/SIGTERM in every thread and stops the server from a waiter.
void serve_until_signal(HttpServer& server) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teaching-staff evaluation service"};
  app.require_subcommand(1);

  std::string data_dir = "./data";
  BankOptions bank_opts;
  HashOptions hash_opts;

  auto add_data_dir = [&](CLI::App* cmd) {
    cmd->add_option("--data-dir", data_dir, "Store directory")
        ->envname("EVALSYS_DATA_DIR")
        ->capture_default_str();
  };
  auto add_bank = [&](CLI::App* cmd) {
    cmd->add_option("--bank", bank_opts.path,
                    "Question bank file (default: built-in 58-item bank)")
        ->envname("EVALSYS_BANK");
  };
  auto add_hash = [&](CLI::App* cmd) {
    cmd->add_option("--pwhash-ops", hash_opts.ops, "Argon2id operations limit")
        ->capture_default_str();
    cmd->add_option("--pwhash-mem-kib", hash_opts.mem_kib, "Argon2id memory in KiB")
        ->capture_default_str();
  };

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string addr = "127.0.0.1:8080";
  std::string org_map_path;
  std::string ui_dir;
  long ttl_minutes = 120;
  bool trust_proxy = false;
  serve->add_option("--addr", addr, "Listen address HOST:PORT")
      ->envname("EVALSYS_ADDR")
      ->capture_default_str();
  add_data_dir(serve);
  add_bank(serve);
  add_hash(serve);
  serve->add_option("--org-map", org_map_path, "Org map file applied at startup")
      ->envname("EVALSYS_ORG_MAP");
  serve->add_option("--session-ttl-minutes", ttl_minutes, "Abandoned-session timeout")
      ->envname("EVALSYS_SESSION_TTL_MINUTES")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_flag("--trusted-proxy", trust_proxy,
                  "Take the client address from X-Forwarded-For")
      ->envname("EVALSYS_TRUSTED_PROXY");
  serve->add_option("--ui-dir", ui_dir, "Static UI bundle served at /")
      ->envname("EVALSYS_UI_DIR");

  // init-admin
  auto* init_admin = app.add_subcommand("init-admin", "Create the administrator credential");
  std::string username, password;
  bool force = false;
  add_data_dir(init_admin);
  add_hash(init_admin);
  init_admin->add_option("--username", username)->required();
  init_admin->add_option("--password", password, "Password (read from stdin if omitted)");
  init_admin->add_flag("--force", force, "Replace an existing credential");

  // seed-demo
  auto* seed = app.add_subcommand("seed-demo", "Load demo teachers and open an evaluation");
  add_data_dir(seed);
  add_bank(seed);

  // issue-key
  auto* issue = app.add_subcommand("issue-key", "Issue a dean/rector/teacher access key");
  std::string role_name, key_teacher;
  add_data_dir(issue);
  issue->add_option("--role", role_name)
      ->required()
      ->check(CLI::IsMember({"dean", "rector", "teacher"}));
  issue->add_option("--teacher", key_teacher, "Teacher id for --role teacher");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Drive a synthetic cohort through the HTTP API");
  SimulationSpec spec;
  std::string model = "uniform";
  std::string url;
  add_data_dir(sim);
  add_bank(sim);
  sim->add_option("--seed", spec.seed)->capture_default_str();
  sim->add_option("--cohort", spec.cohort_size)->check(CLI::PositiveNumber)->required();
  sim->add_option("--model", model, "uniform or all_1..all_5")->capture_default_str();
  sim->add_option("--url", url,
                  "HOST:PORT of a running service; default starts one in-process "
                  "on the data dir");

  // export
  auto* exp = app.add_subcommand("export", "Dump anonymized results for a privileged viewer");
  std::string format = "csv", key, out_path;
  add_data_dir(exp);
  add_bank(exp);
  exp->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  exp->add_option("--key", key, "Dean/rector/teacher access key")->envname("EVALSYS_ACCESS_KEY");
  exp->add_option("--out", out_path, "Output file (default stdout)");

  // dump-bank
  auto* dump = app.add_subcommand("dump-bank", "Print the effective question bank");
  add_bank(dump);

  // check
  auto* check = app.add_subcommand("check", "Report store integrity");
  add_data_dir(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*serve) {
      const QuestionBank bank = bank_opts.load();
      auto store = Store::open(data_dir, hash_opts.store_options());
      if (!org_map_path.empty()) {
        apply_org_map(*store, OrgMap::parse(read_file(org_map_path)));
      }
      SystemEntropy entropy;
      ServiceConfig config;
      config.session_ttl = std::chrono::minutes(ttl_minutes);
      config.trust_proxy = trust_proxy;
      config.ui_dir = ui_dir;
      ApiService api(*store, bank, entropy, config);
      if (auto n = api.engine().recover(now_utc())) {
        spdlog::warn("finalized {} interrupted questionnaire(s)", n);
      }
      if (!store->has_admin()) {
        spdlog::warn("no administrator configured; run `evalsys init-admin`");
      }
      HttpServer server(api);
      const auto [host, port] = split_addr(addr);
      const int bound = server.bind(host, port);
      spdlog::info("bank {} ({} items), listening on {}:{}", bank.digest().substr(0, 12),
                   bank.size(), host, bound);
      serve_until_signal(server);
      spdlog::info("stopped");
      return 0;
    }

    if (*init_admin) {
      if (password.empty()) std::getline(std::cin, password);
      auto store = Store::open(data_dir, hash_opts.store_options());
      SystemEntropy entropy;
      store->init_admin(username, password, force, entropy);
      std::cout << "administrator " << username << " stored\n";
      return 0;
    }

    if (*seed) {
      auto store = Store::open(data_dir);
      store->register_bank(bank_opts.load().digest());
      seed_demo(*store);
      std::cout << "demo data loaded; evaluation active for T1\n";
      return 0;
    }

    if (*issue) {
      auto store = Store::open(data_dir);
      SystemEntropy entropy;
      ViewerRole role{*parse_role_kind(role_name), key_teacher};
      std::cout << store->issue_access_key(role, entropy) << "\n";
      return 0;
    }

    if (*sim) {
      spec.model = AnswerModel::parse(model);
      SimulationSummary summary;
      if (!url.empty()) {
        const auto [host, port] = split_addr(url);
        summary = simulate(spec, host, port);
      } else {
        const QuestionBank bank = bank_opts.load();
        auto store = Store::open(data_dir);
        SystemEntropy entropy;
        ApiService api(*store, bank, entropy);
        HttpServer server(api);
        const int port = server.bind("127.0.0.1", 0);
        server.start();
        summary = simulate(spec, "127.0.0.1", port);
        server.stop();
      }
      std::cout << summary.to_json_text();
      return 0;
    }

    if (*exp) {
      const QuestionBank bank = bank_opts.load();
      auto store = Store::open(data_dir);
      ViewerRole role = ViewerRole::anyone();
      if (!key.empty()) {
        auto resolved = store->resolve_access_key(key);
        if (!resolved) fail(ErrorCode::AccessDenied, "unknown access key");
        role = *resolved;
      }
      const std::string text = export_results(
          *store, role, format == "json" ? ExportFormat::Json : ExportFormat::Csv,
          bank.size());
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream(out_path, std::ios::binary) << text;
      }
      return 0;
    }

    if (*dump) {
      std::cout << dump_bank(bank_opts.load());
      return 0;
    }

    if (*check) {
      auto store = Store::open(data_dir);
      const IntegrityReport r = store->check_integrity();
      std::cout << "results: " << r.results << "\ncompleted sessions: "
                << r.completed_sessions << "\norphan results: " << r.orphan_results
                << "\ncompleted without result: " << r.completed_without_result
                << "\nresults on unknown banks: " << r.unknown_bank_results << "\n";
      return r.ok() ? 0 : kRuntimeError;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << api_error(e.code()).code << ": " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
