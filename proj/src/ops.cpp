#include "evalsys/ops.hpp"

#include <random>
#include <sstream>

#include <httplib.h>

#include "evalsys/api_service.hpp"
#include "evalsys/error.hpp"
#include "evalsys/json_io.hpp"

namespace evalsys {

using nlohmann::json;

AnswerModel AnswerModel::parse(std::string_view text) {
  if (text == "uniform") return {Kind::Uniform, 0};
  if (text.size() == 5 && text.substr(0, 4) == "all_" && text[4] >= '1' &&
      text[4] <= '5') {
    return {Kind::Constant, text[4] - '0'};
  }
  fail(ErrorCode::ValidationError,
       "answer model must be \"uniform\" or all_1..all_5, got " + std::string(text));
}

std::string AnswerModel::name() const {
  return kind == Kind::Uniform ? "uniform" : "all_" + std::to_string(constant);
}

std::vector<int> simulated_answers(const SimulationSpec& spec, int student,
                                   std::size_t bank_size) {
  std::vector<int> out(bank_size, spec.model.constant);
  if (spec.model.kind == AnswerModel::Kind::Constant) return out;
  // seed_seq and mt19937_64 are fully specified by the standard, and the
  // modulo mapping avoids implementation-defined distributions, so streams
  // are identical across platforms.
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(student)};
  std::mt19937_64 rng(seq);
  for (auto& v : out) v = 1 + static_cast<int>(rng() % 5);
  return out;
}

std::string SimulationSummary::to_json_text() const {
  json j = {{"completed", completed},
            {"teacher_id", teacher_id},
            {"result_ids", result_ids},
            {"report", report}};
  return j.dump(2) + "\n";
}

namespace {

ErrorCode code_from_wire(std::string_view wire) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::StorageError); ++c) {
    const auto code = static_cast<ErrorCode>(c);
    if (api_error(code).code == wire) return code;
  }
  return ErrorCode::StorageError;
}

json call(httplib::Client& cli, const char* method, const std::string& path,
          const json* body = nullptr) {
  httplib::Result res = std::string_view(method) == "POST"
                            ? cli.Post(path, body ? body->dump() : "{}", "application/json")
                            : cli.Get(path);
  if (!res) {
    fail(ErrorCode::StorageError,
         "request " + path + " failed: " + httplib::to_string(res.error()));
  }
  json out = json::parse(res->body, nullptr, false);
  if (res->status >= 400) {
    if (out.is_object() && out.contains("error")) {
      fail(code_from_wire(out["error"]["code"].get<std::string>()),
           out["error"]["message"].get<std::string>());
    }
    fail(ErrorCode::StorageError, "HTTP " + std::to_string(res->status) + " on " + path);
  }
  return out;
}

}  // namespace

SimulationSummary simulate(const SimulationSpec& spec, const std::string& host,
                           int port) {
  if (spec.cohort_size < 1) fail(ErrorCode::ValidationError, "cohort size must be >= 1");
  httplib::Client cli(host, port);
  cli.set_read_timeout(30, 0);

  SimulationSummary summary;
  for (int student = 0; student < spec.cohort_size; ++student) {
    const json started = call(cli, "POST", "/api/session");
    const std::string token = started["token"].get<std::string>();
    const int total = started["question"]["total"].get<int>();
    const std::vector<int> answers =
        simulated_answers(spec, student, static_cast<std::size_t>(total));

    json last;
    for (int i = 1; i <= total; ++i) {
      const json body = {{"index", i}, {"value", answers[static_cast<std::size_t>(i - 1)]}};
      last = call(cli, "POST", "/api/session/" + token + "/answer", &body);
    }
    if (!last.value("finished", false)) {
      fail(ErrorCode::IncompleteAnswers, "session did not finish after all answers");
    }
    summary.result_ids.push_back(last["result_id"].get<std::int64_t>());
    ++summary.completed;
    if (summary.teacher_id.empty()) {
      const json own = call(cli, "GET", "/api/results/own/" + token);
      summary.teacher_id = own["teacher"]["id"].get<std::string>();
    }
  }
  summary.report = call(cli, "GET", "/api/stats/" + summary.teacher_id);
  return summary;
}

std::string export_results(Store& store, const ViewerRole& role,
                           ExportFormat format, std::size_t bank_size) {
  const auto results = store.list_results(role);
  if (format == ExportFormat::Json) {
    json rows = json::array();
    for (const auto& r : results) rows.push_back(json_io::to_json(r));
    return json{{"results", rows}}.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "result_id,teacher_id,completed_at";
  for (std::size_t i = 1; i <= bank_size; ++i) out << ",q" << i;
  out << "\n";
  for (const auto& r : results) {
    out << r.result_id << ',' << r.teacher_id << ',' << format_utc(r.completed_at);
    for (auto a : r.answers) out << ',' << a.value();
    out << "\n";
  }
  return out.str();
}

void seed_demo(Store& store) {
  const TeacherInput teachers[] = {
      {"T1", "Demo Teacher One", "C-INF", "F-CSA", std::nullopt},
      {"T2", "Demo Teacher Two", "C-INF", "F-CSA", std::nullopt},
      {"T3", "Demo Teacher Three", "C-ECO", "F-ECO", std::nullopt},
  };
  for (const auto& t : teachers) {
    if (!store.find_teacher(t.teacher_id)) store.put_teacher(t);
  }
  StateChanges s;
  s.active = true;
  s.selected_teacher = std::optional<std::string>("T1");
  s.allowlist = std::vector<IpAddress>{*IpAddress::parse("127.0.0.1"),
                                       *IpAddress::parse("::1")};
  store.set_state(s);
}

void apply_org_map(Store& store, const OrgMap& org) {
  auto teachers = store.list_teachers();
  for (const auto& [teacher, chair] : org.teacher_chairs()) {
    if (std::ranges::none_of(teachers, [&](const TeacherRecord& t) {
          return t.teacher_id == teacher;
        })) {
      fail(ErrorCode::NotFound, "org map names unknown teacher " + teacher);
    }
  }
  // Check the merged hierarchy before touching any record.
  std::erase_if(teachers, [&](const TeacherRecord& t) { return org.has_teacher(t.teacher_id); });
  OrgMap merged = OrgMap::from_teachers(teachers);
  for (const auto& [teacher, chair] : org.teacher_chairs()) {
    merged.assign(teacher, chair, chair.empty() ? "" : *org.faculty_of_chair(chair));
  }
  for (const auto& [teacher, chair] : org.teacher_chairs()) {
    TeacherChanges ch;
    ch.chair_id = chair;
    ch.faculty_id = chair.empty() ? std::string() : *org.faculty_of_chair(chair);
    store.update_teacher(teacher, ch);
  }
}

}  // namespace evalsys
