// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// non-zero when any criterion fails.

#include <sqlite3.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evalsys/aggregation.hpp"
#include "evalsys/api_service.hpp"
#include "evalsys/error.hpp"
#include "evalsys/json_io.hpp"
#include "evalsys/ops.hpp"
#include "evalsys/scoring.hpp"
#include "evalsys/session_engine.hpp"
#include "evalsys/store.hpp"
#include "support.hpp"

namespace {

using namespace evalsys;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Thrown by a check to fail the current criterion with a reason.
struct Violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Violation(what);
}

struct Criterion {
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<std::string()> run;  // returns a short detail line
};

int g_failures = 0;

void run_criterion(const Criterion& c) {
  const auto start = Clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = c.run();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (ok && c.limit_seconds > 0 && secs >= c.limit_seconds) {
    ok = false;
    detail += "; exceeded " + std::to_string(c.limit_seconds) + " s";
  }
  if (!ok) ++g_failures;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(3);
  line << (ok ? "PASS " : "FAIL ") << c.name << " [" << secs << " s] " << detail;
  std::cout << line.str() << std::endl;
}

// ---- oracles ---------------------------------------------------------------

// Mark by integer comparison of 2*mean against the odd half-points 3,5,7,9.
CategoryMark oracle_mark(std::int64_t num, std::int64_t den) {
  static const CategoryMark marks[] = {CategoryMark::VeryPoor, CategoryMark::Poor,
                                       CategoryMark::Medium, CategoryMark::Good,
                                       CategoryMark::VeryGood};
  int bin = 0;
  for (int half : {3, 5, 7, 9}) {
    if (2 * num >= half * den) ++bin;
  }
  return marks[bin];
}

struct OracleMeans {
  std::map<Competence, std::pair<std::int64_t, std::int64_t>> per;  // sum, count
  std::pair<std::int64_t, std::int64_t> overall{0, 0};
};

// Flat loop over raw answers with the reversal written out as 6 - v.
OracleMeans oracle_means(const std::vector<std::vector<int>>& questionnaires,
                         const QuestionBank& bank) {
  OracleMeans o;
  for (const auto& answers : questionnaires) {
    for (std::size_t i = 0; i < answers.size(); ++i) {
      const QuestionItem& item = bank.items()[i];
      const int s = item.polarity == Polarity::Reverse ? 6 - answers[i] : answers[i];
      o.per[item.competence].first += s;
      o.per[item.competence].second += 1;
      o.overall.first += s;
      o.overall.second += 1;
    }
  }
  return o;
}

// Independent regeneration of the simulator's answer stream.
std::vector<int> oracle_answers(std::uint64_t seed, int student, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(student)};
  std::mt19937_64 rng(seq);
  std::vector<int> out(n);
  for (auto& v : out) v = 1 + static_cast<int>(rng() % 5);
  return out;
}

// ---- criteria --------------------------------------------------------------

std::string scoring_exhaustive() {
  const int table[2][5] = {{1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}};
  int checked = 0;
  for (Polarity p : {Polarity::Direct, Polarity::Reverse}) {
    for (int v = 1; v <= 5; ++v) {
      const int s = score_item(p, ResponseValue(v)).value();
      require(s == table[p == Polarity::Reverse][v - 1],
              "score_item mismatch at response " + std::to_string(v));
      const int back = score_item(p, ResponseValue(s)).value();
      require(back == v, "reversal is not an involution at " + std::to_string(v));
      ++checked;
    }
  }
  return std::to_string(checked) + " pairs match the table; involution holds";
}

std::string small_bank_brute_force() {
  const QuestionBank bank = testing::small_bank();
  std::vector<int> raw(6, 1);
  int vectors = 0;
  for (int code = 0; code < 15625; ++code) {
    int c = code;
    for (int i = 0; i < 6; ++i) {
      raw[static_cast<std::size_t>(i)] = 1 + c % 5;
      c /= 5;
    }
    const QuestionnaireReport r = questionnaire_report(testing::responses(raw), bank);
    const OracleMeans o = oracle_means({raw}, bank);
    for (Competence comp : kAllCompetences) {
      const auto [sum, n] = o.per.at(comp);
      const CompetenceScore& got = r.per_competence.at(comp);
      require(got.mean.num() * n == sum * got.mean.den(), "category mean differs");
      require(got.mark == oracle_mark(sum, n), "category mark differs");
    }
    require(r.overall.mean.num() * o.overall.second == o.overall.first * r.overall.mean.den(),
            "overall mean differs");
    require(r.overall.mark == oracle_mark(o.overall.first, o.overall.second),
            "overall mark differs");
    ++vectors;
  }
  return std::to_string(vectors) + " answer vectors equal the flat-loop oracle exactly";
}

std::string mark_grid() {
  std::set<CategoryMark> seen;
  CategoryMark prev = CategoryMark::VeryPoor;
  for (int k = 100; k <= 500; ++k) {
    const CategoryMark m = mark_from_mean(Rational(k, 100));
    require(static_cast<int>(m) >= static_cast<int>(prev),
            "not monotone at " + std::to_string(k) + "/100");
    require(m == mark_from_mean(k / 100.0), "double overload disagrees at " + std::to_string(k));
    prev = m;
    seen.insert(m);
  }
  require(seen.size() == 5, "grid does not hit all five marks");
  const std::pair<int, CategoryMark> bounds[] = {{150, CategoryMark::Poor},
                                                 {250, CategoryMark::Medium},
                                                 {350, CategoryMark::Good},
                                                 {450, CategoryMark::VeryGood}};
  for (auto [k, want] : bounds) {
    require(mark_from_mean(Rational(k, 100)) == want,
            "boundary " + std::to_string(k) + "/100 not in upper bin");
    require(mark_from_mean(Rational(k - 1, 100)) != want, "bin below boundary wrong");
  }
  return "401 grid points monotone, 5 marks hit, boundaries in upper bin";
}

std::string session_fuzz() {
  const QuestionBank bank = testing::small_bank();
  const int n = static_cast<int>(bank.size());
  auto store = Store::open_in_memory(testing::fast_options());
  store->register_bank(bank.digest());
  testing::seed_three(*store);
  SeededEntropy entropy(2024);
  SessionEngine engine(*store, bank, entropy, std::chrono::hours(1));
  const IpAddress ip = *IpAddress::parse("127.0.0.1");
  const Timestamp now = testing::t0();
  const Timestamp far = now + std::chrono::hours(5);

  std::mt19937_64 master(7);
  std::size_t completed = 0;
  std::atomic<std::size_t> ops{0}, rejected_out_of_order{0};
  for (int seq = 0; seq < 10000; ++seq) {
    const EvaluationSession s = engine.start(ip, now);
    const std::string token = s.token;
    const std::uint64_t seeds[2] = {master(), master()};
    const bool solo = seq % 4 == 0;  // one driver whose cursor is known exactly

    // Accepted submits as (index, value), appended under a lock in the
    // order the engine acknowledged them.
    std::mutex log_mu;
    std::vector<std::pair<int, int>> accepted;
    std::vector<std::optional<std::int64_t>> result_ids;
    std::atomic<bool> bad{false};
    std::string bad_what;
    auto violation = [&](const std::string& what) {
      std::lock_guard lock(log_mu);
      if (!bad.exchange(true)) bad_what = what;
    };

    auto driver = [&](int id) {
      std::mt19937_64 rng(seeds[id]);
      int seen_cursor = 1;
      int phase_rank = 0;  // 0 active, 1 terminal
      for (int step = 0; step < 14 && !bad; ++step) {
        const int dice = static_cast<int>(rng() % 100);
        int expected = 0;
        if (solo) {
          auto cur = store->find_session(token);
          expected = cur->cursor();
        }
        try {
          if (dice < 75) {
            // Mostly near the cursor, sometimes anywhere.
            const auto cur = store->find_session(token);
            int index = cur->is_active() ? cur->cursor() : n;
            const int jitter = static_cast<int>(rng() % 10);
            if (jitter < 2) index -= 1;
            else if (jitter < 4) index += 1;
            else if (jitter == 4) index = static_cast<int>(rng() % (n + 3)) - 1;
            const int value = rng() % 20 == 0 ? static_cast<int>(rng() % 8) - 1
                                              : 1 + static_cast<int>(rng() % 5);
            const SubmitOutcome o = engine.submit(token, index, value, now);
            {
              std::lock_guard lock(log_mu);
              accepted.emplace_back(index, value);
              if (o.finished) result_ids.push_back(o.result_id);
            }
            if (solo && index != expected) violation("out-of-order submit accepted");
          } else if (dice < 85) {
            const ResultRecord r = engine.finalize(token, now);
            std::lock_guard lock(log_mu);
            result_ids.push_back(r.result_id);
          } else if (dice < 95) {
            engine.current_question(token, now);
          } else {
            engine.abort_stale(token, far);
          }
        } catch (const Error& e) {
          if (e.code() == ErrorCode::OutOfOrder) ++rejected_out_of_order;
          const bool expected_error =
              e.code() == ErrorCode::OutOfOrder || e.code() == ErrorCode::InvalidValue ||
              e.code() == ErrorCode::SessionNotActive ||
              e.code() == ErrorCode::IncompleteAnswers;
          if (!expected_error) violation(std::string("unexpected error ") + e.what());
        }
        ++ops;

        // Per-driver observations must be monotone and prefix-complete.
        const auto cur = store->find_session(token);
        if (cur->is_active()) {
          if (phase_rank != 0) violation("session returned to Active");
          if (cur->cursor() < seen_cursor) violation("cursor moved backwards");
          seen_cursor = cur->cursor();
          if (static_cast<int>(cur->answers.size()) != cur->cursor() - 1) {
            violation("answers are not the prefix before the cursor");
          }
        } else {
          phase_rank = 1;
          if (cur->is_completed()) {
            if (static_cast<int>(cur->answers.size()) != n || !cur->result_id) {
              violation("completed session without full answers and result");
            }
          } else if (!cur->answers.empty()) {
            violation("aborted session kept answers");
          }
        }
      }
    };

    std::thread a(driver, 0);
    if (solo) {
      a.join();
    } else {
      std::thread b(driver, 1);
      a.join();
      b.join();
    }
    if (bad) throw Violation("sequence " + std::to_string(seq) + ": " + bad_what);

    // Accepted indices form exactly 1..k in acknowledgement order.
    // The lock is taken after the engine call, so reorder by index first;
    // duplicates or gaps still show up.
    std::vector<std::pair<int, int>> sorted = accepted;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      require(sorted[i].first == static_cast<int>(i) + 1,
              "sequence " + std::to_string(seq) + ": accepted indices are not 1..k");
    }

    const auto final_state = store->find_session(token);
    if (final_state->is_active()) {
      engine.abort_stale(token, far);
    } else if (final_state->is_completed()) {
      ++completed;
      require(sorted.size() == static_cast<std::size_t>(n), "completed without N accepts");
      const auto r = store->find_result(*final_state->result_id);
      require(r.has_value(), "completed session has no result");
      for (int i = 0; i < n; ++i) {
        require(r->answers[static_cast<std::size_t>(i)].value() ==
                    sorted[static_cast<std::size_t>(i)].second,
                "stored answers differ from accepted submits");
      }
      for (const auto& id : result_ids) {
        require(id == final_state->result_id, "two different results for one session");
      }
    }
  }
  const IntegrityReport integrity = store->check_integrity();
  require(integrity.ok(), "integrity check failed after fuzzing");
  require(integrity.results == completed && integrity.completed_sessions == completed,
          "result count differs from completed sessions");
  return "10000 sequences, " + std::to_string(ops.load()) + " ops, " + std::to_string(completed) +
         " completed, " + std::to_string(rejected_out_of_order.load()) +
         " out-of-order submits rejected";
}

// Shared 200-questionnaire corpus for the cohort and aggregation criteria.
struct Corpus {
  std::vector<ResultRecord> results;
  std::vector<TeacherRecord> teachers;
};
Corpus g_corpus;

struct CohortRun {
  std::string summary_text;
  std::size_t count = 0;
  UnitReport report;
  json http_report;
  Corpus corpus;
};

CohortRun run_cohort(const std::filesystem::path& dir) {
  const QuestionBank& bank = default_bank();
  auto store = Store::open(dir);
  seed_demo(*store);
  SystemEntropy entropy;
  ApiService api(*store, bank, entropy);
  HttpServer server(api);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  const SimulationSpec spec{42, 200, AnswerModel::parse("uniform")};
  const SimulationSummary summary = simulate(spec, "127.0.0.1", port);
  server.stop();

  CohortRun run;
  run.summary_text = summary.to_json_text();
  run.count = store->count_results(summary.teacher_id);
  run.corpus.results = store->list_results(ViewerRole::rector());
  run.corpus.teachers = store->list_teachers();
  run.report = teacher_report(summary.teacher_id, run.corpus.results, bank);
  run.http_report = summary.report["unit_report"];
  return run;
}

std::string end_to_end_cohort() {
  const QuestionBank& bank = default_bank();
  require(bank.size() == 58, "default bank is not 58 items");
  testing::TempDir first, second;
  const CohortRun a = run_cohort(first.path());
  require(a.count == 200, "count_results is " + std::to_string(a.count));

  std::vector<std::vector<int>> answers;
  for (int s = 0; s < 200; ++s) answers.push_back(oracle_answers(42, s, bank.size()));
  const OracleMeans o = oracle_means(answers, bank);
  double worst = 0.0;
  auto compare = [&](double got, std::pair<std::int64_t, std::int64_t> sc, const char* what) {
    const double want = static_cast<double>(sc.first) / static_cast<double>(sc.second);
    worst = std::max(worst, std::abs(got - want));
    require(std::abs(got - want) <= 1e-9, std::string(what) + " differs from oracle");
  };
  for (Competence c : kAllCompetences) {
    const std::string name(to_string(c));
    compare(a.report.per_competence.at(c)->mean.to_double(), o.per.at(c), "store mean");
    compare(a.http_report["per_competence"][name]["mean"]["value"].get<double>(), o.per.at(c),
            "HTTP mean");
    require(a.report.per_competence.at(c)->mark == oracle_mark(o.per.at(c).first, o.per.at(c).second),
            "mark differs from oracle");
  }
  compare(a.report.overall->mean.to_double(), o.overall, "overall mean");

  const CohortRun b = run_cohort(second.path());
  require(a.summary_text == b.summary_text, "rerun with the same seed is not byte-identical");
  g_corpus = a.corpus;

  std::ostringstream out;
  out << "200 sessions over HTTP, count 200, max |diff| " << worst
      << ", rerun identical (" << a.summary_text.size() << " bytes)";
  return out.str();
}

std::string pooled_vs_mean_of_means() {
  require(g_corpus.results.size() == 200, "cohort corpus unavailable");
  const QuestionBank& bank = default_bank();
  const OrgMap org = OrgMap::from_teachers(g_corpus.teachers);
  std::vector<Scope> scopes = {Scope::university()};
  for (const auto& f : org.faculties()) {
    scopes.push_back(Scope::faculty(f));
    for (const auto& c : org.chairs_in_faculty(f)) {
      scopes.push_back(Scope::chair(c));
      for (const auto& t : org.teachers_in_chair(c)) scopes.push_back(Scope::teacher(t));
    }
  }
  double worst = 0.0;
  for (const Scope& s : scopes) {
    const UnitReport pooled = unit_report(s, org, g_corpus.results, bank);
    const MeanOfMeans mom = mean_of_questionnaire_means(s, org, g_corpus.results, bank);
    require(pooled.questionnaire_count == mom.questionnaire_count, "counts differ");
    if (pooled.questionnaire_count == 0) continue;
    for (Competence c : kAllCompetences) {
      const double d = std::abs(pooled.per_competence.at(c)->mean.to_double() -
                                mom.per_competence.at(c));
      worst = std::max(worst, d);
      require(d <= 1e-12, "formulations disagree at " + std::string(to_string(s.kind)) + " " +
                              s.id);
    }
    worst = std::max(worst, std::abs(pooled.overall->mean.to_double() - *mom.overall));
    require(worst <= 1e-12, "overall formulations disagree");
  }

  // Rollup conservation: children sum to the parent at every level.
  auto count = [&](const Scope& s) {
    return unit_report(s, org, g_corpus.results, bank).questionnaire_count;
  };
  std::int64_t faculties_total = 0;
  for (const auto& f : org.faculties()) {
    std::int64_t chairs_total = 0;
    for (const auto& c : org.chairs_in_faculty(f)) {
      std::int64_t teachers_total = 0;
      for (const auto& t : org.teachers_in_chair(c)) teachers_total += count(Scope::teacher(t));
      require(teachers_total == count(Scope::chair(c)), "chair " + c + " does not conserve");
      chairs_total += teachers_total;
    }
    require(chairs_total == count(Scope::faculty(f)), "faculty " + f + " does not conserve");
    faculties_total += chairs_total;
  }
  require(faculties_total == count(Scope::university()), "university does not conserve");
  require(faculties_total == 200, "rollup total is not 200");

  std::ostringstream out;
  out << scopes.size() << " scopes, max |diff| " << worst << ", counts conserve to 200";
  return out.str();
}

std::string gate_matrix() {
  const QuestionBank bank = testing::small_bank();
  int successes = 0;
  std::string success_cell;
  for (bool active : {true, false}) {
    for (bool listed : {true, false}) {
      for (bool existing : {true, false}) {
        testing::LiveService svc(bank);
        svc.store->put_teacher({"T1", "One", "", "", std::nullopt});
        StateChanges s;
        s.selected_teacher = std::optional<std::string>("T1");
        s.active = active;
        s.allowlist = std::vector<IpAddress>{
            *IpAddress::parse(listed ? "127.0.0.1" : "10.20.30.40")};
        svc.store->set_state(s);
        if (existing) {
          EvaluationSession held;
          held.token = "held-session";
          held.teacher_id = "T1";
          held.bank_digest = bank.digest();
          held.client_ip = *IpAddress::parse("127.0.0.1");
          held.started_at = svc.now.load();
          svc.store->transact([&](WriteTxn& txn) { txn.insert_session(held); });
        }
        auto r = svc.client->Post("/api/session", "", "application/json");
        require(r, "no HTTP response");
        const std::string cell = std::string(active ? "active" : "inactive") + "/" +
                                 (listed ? "allowlisted" : "not-allowlisted") + "/" +
                                 (existing ? "existing-session" : "no-session");
        if (r->status == 200) {
          ++successes;
          success_cell = cell;
        } else {
          const std::string code = json::parse(r->body)["error"]["code"];
          const std::string want = !active  ? "evaluation_inactive"
                                   : !listed ? "ip_not_allowed"
                                             : "session_active_for_ip";
          require(code == want, cell + " gave " + code + ", expected " + want);
        }
      }
    }
  }
  require(successes == 1 && success_cell == "active/allowlisted/no-session",
          "creation succeeded in " + std::to_string(successes) + " cells");
  return "8 cells over HTTP from 127.0.0.1; only " + success_cell + " creates a session";
}

std::set<std::string> table_columns(const std::filesystem::path& db_path,
                                    const std::string& table) {
  sqlite3* db = nullptr;
  sqlite3_open_v2(db_path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
  sqlite3_stmt* q = nullptr;
  const std::string sql = "SELECT name FROM pragma_table_info('" + table + "')";
  sqlite3_prepare_v2(db, sql.c_str(), -1, &q, nullptr);
  std::set<std::string> out;
  while (sqlite3_step(q) == SQLITE_ROW) {
    out.insert(reinterpret_cast<const char*>(sqlite3_column_text(q, 0)));
  }
  sqlite3_finalize(q);
  sqlite3_close(db);
  return out;
}

std::string confidentiality() {
  const QuestionBank bank = testing::small_bank();
  testing::TempDir dir;
  auto store = Store::open(dir.path(), testing::fast_options());
  const auto db_path = dir.path() / "evaluation.db";

  // Schema: the results table and the record type carry no IP or token.
  const auto cols = table_columns(db_path, "results");
  require(!cols.empty(), "results table missing");
  for (const auto& c : cols) {
    require(c.find("ip") == std::string::npos && c.find("token") == std::string::npos &&
                c.find("addr") == std::string::npos && c.find("session") == std::string::npos,
            "results column " + c + " may identify a student");
  }
  ResultRecord sample;
  const json sample_json = json_io::to_json(sample);
  for (const auto& [key, _] : sample_json.items()) {
    require(key != "token" && key != "client_ip", "ResultRecord serializes " + key);
  }

  testing::LiveService svc(bank, std::move(store));
  testing::seed_three(*svc.store);
  SeededEntropy e(5);
  svc.store->init_admin("admin", "secret", false, e);
  auto complete_one = [&] {
    auto r = svc.client->Post("/api/session", "", "application/json");
    const std::string token = json::parse(r->body)["token"];
    for (int i = 1; i <= 6; ++i) {
      svc.client->Post("/api/session/" + token + "/answer",
                       json{{"index", i}, {"value", 4}}.dump(), "application/json");
    }
    return token;
  };
  const std::string tok1 = complete_one();
  StateChanges pick;
  pick.selected_teacher = std::optional<std::string>("T2");
  svc.store->set_state(pick);
  complete_one();

  // The finalized session row no longer holds the client address.
  require(!svc.store->find_session(tok1)->client_ip, "completed session kept the client IP");

  auto r = svc.client->Get("/api/results");
  require(r->status == 403 && json::parse(r->body)["error"]["code"] == "access_denied",
          "public raw-results request was not denied");

  const std::string t1 = svc.store->issue_access_key(ViewerRole::teacher("T1"), e);
  const httplib::Headers t1h = {{"Authorization", "Bearer " + t1}};
  r = svc.client->Get("/api/results?teacher=T2", t1h);
  require(r->status == 403, "teacher T1 could read T2 results");
  r = svc.client->Get("/api/admin/report?scope=teacher&id=T2", t1h);
  require(r->status == 403, "teacher T1 could read the T2 report");
  r = svc.client->Get("/api/results", t1h);
  const json own = json::parse(r->body)["results"];
  require(r->status == 200 && own.size() == 1 && own[0]["teacher_id"] == "T1",
          "teacher T1 does not see exactly their own result");
  require(r->body.find("127.0.0.1") == std::string::npos && r->body.find(tok1) == std::string::npos,
          "results payload leaks an address or token");

  const std::pair<const char*, const char*> admin_endpoints[] = {
      {"GET", "/api/admin/state"},       {"PUT", "/api/admin/state"},
      {"GET", "/api/admin/teachers"},    {"POST", "/api/admin/teachers"},
      {"PUT", "/api/admin/teachers/T1"}, {"DELETE", "/api/admin/teachers/T3"},
      {"GET", "/api/admin/results"},     {"GET", "/api/admin/report?scope=university"},
      {"POST", "/api/admin/keys"},       {"GET", "/api/admin/orgmap"},
      {"PUT", "/api/admin/orgmap"}};
  for (auto [method, path] : admin_endpoints) {
    const std::string m = method;
    httplib::Result res = m == "GET"    ? svc.client->Get(path)
                          : m == "PUT"  ? svc.client->Put(path, "{}", "application/json")
                          : m == "POST" ? svc.client->Post(path, "{}", "application/json")
                                        : svc.client->Delete(path);
    require(res && res->status == 401, m + " " + path + " did not answer 401");
  }
  require(svc.store->find_teacher("T3").has_value(), "unauthenticated delete took effect");
  return "results schema has no IP/token; public 403; T1 cannot read T2; " +
         std::to_string(std::size(admin_endpoints)) + " admin endpoints answer 401";
}

std::string crash_coupling() {
  const QuestionBank bank = testing::small_bank();
  testing::TempDir dir;
  {
    auto store = Store::open(dir.path());
    store->register_bank(bank.digest());
    testing::seed_three(*store);
  }
  const char* points[] = {"submit:before_finalize", "finalize:after_result_insert",
                          "finalize:before_commit"};
  std::size_t recovered = 0;
  for (int run = 0; run < 100; ++run) {
    const std::string point = points[run % 3];
    std::cout.flush();
    const pid_t pid = fork();
    if (pid == 0) {
      StoreOptions opts;
      opts.fault_hook = [&](std::string_view p) {
        if (p == point) _exit(77);
      };
      try {
        auto store = Store::open(dir.path(), opts);
        SeededEntropy entropy(static_cast<std::uint64_t>(run) + 1);
        SessionEngine engine(*store, bank, entropy);
        const auto s = engine.start(*IpAddress::parse("127.0.0.1"), testing::t0());
        for (int i = 1; i <= 6; ++i) engine.submit(s.token, i, 1 + (i + run) % 5, testing::t0());
      } catch (...) {
        _exit(3);
      }
      _exit(0);  // the fault never fired
    }
    int status = 0;
    waitpid(pid, &status, 0);
    require(WIFEXITED(status) && WEXITSTATUS(status) == 77,
            "run " + std::to_string(run) + ": child did not die at " + point);

    auto store = Store::open(dir.path());
    const IntegrityReport before = store->check_integrity();
    require(before.orphan_results == 0 && before.completed_without_result == 0,
            "run " + std::to_string(run) + ": torn state on disk after crash");
    SystemEntropy entropy;
    SessionEngine engine(*store, bank, entropy);
    recovered += engine.recover(testing::t0());
    const IntegrityReport after = store->check_integrity();
    require(after.ok(), "run " + std::to_string(run) + ": integrity failed after recovery");
    require(after.results == static_cast<std::size_t>(run) + 1,
            "run " + std::to_string(run) + ": expected one result per run, have " +
                std::to_string(after.results));
  }
  return "100 killed runs across 3 fault points; 0 orphan results, 0 completed without "
         "result; " +
         std::to_string(recovered) + " finalized by recovery";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"scoring-exhaustive", 1.0, scoring_exhaustive},
      {"small-bank-brute-force", 10.0, small_bank_brute_force},
      {"mark-mapping-grid", 1.0, mark_grid},
      {"session-fsm-fuzz", 60.0, session_fuzz},
      {"end-to-end-cohort", 60.0, end_to_end_cohort},
      {"pooled-vs-mean-of-means", 0.0, pooled_vs_mean_of_means},
      {"gate-matrix", 0.0, gate_matrix},
      {"confidentiality", 0.0, confidentiality},
      {"crash-coupling", 0.0, crash_coupling},
  };
  for (const auto& c : criteria) run_criterion(c);
  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
