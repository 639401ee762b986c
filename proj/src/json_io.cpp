#include "evalsys/json_io.hpp"

#include "evalsys/error.hpp"

namespace evalsys::json_io {

json to_json(const Rational& r) {
  return {{"num", r.num()}, {"den", r.den()}, {"value", r.to_double()}};
}

json to_json(const CompetenceScore& s) {
  return {{"mean", to_json(s.mean)}, {"mark", to_string(s.mark)}};
}

json to_json(const QuestionnaireReport& r) {
  json per = json::object();
  for (const auto& [c, s] : r.per_competence) per[std::string(to_string(c))] = to_json(s);
  return {{"per_competence", per}, {"overall", to_json(r.overall)}};
}

json to_json(const Scope& s) {
  json j = {{"kind", to_string(s.kind)}};
  if (s.kind != Scope::Kind::University) j["id"] = s.id;
  return j;
}

json to_json(const UnitReport& r) {
  json per = json::object();
  for (const auto& [c, s] : r.per_competence) {
    per[std::string(to_string(c))] = s ? to_json(*s) : json(nullptr);
  }
  return {{"scope", to_json(r.scope)},
          {"questionnaire_count", r.questionnaire_count},
          {"per_competence", per},
          {"overall", r.overall ? to_json(*r.overall) : json(nullptr)}};
}

json to_json(const ItemDistribution& d) {
  json counts = json::object();
  for (int v = 1; v <= 5; ++v) {
    counts[std::to_string(v)] = d.counts[static_cast<std::size_t>(v - 1)];
  }
  return {{"item_index", d.item_index}, {"counts", counts}};
}

json to_json(const ResultRecord& r) {
  return {{"result_id", r.result_id},
          {"teacher_id", r.teacher_id},
          {"bank_digest", r.bank_digest},
          {"completed_at", format_utc(r.completed_at)},
          {"answers", answers_to_json(r.answers)}};
}

json to_json(const TeacherRecord& t) {
  return {{"id", t.teacher_id},
          {"full_name", t.full_name},
          {"has_photo", t.photo.has_value()},
          {"chair_id", t.chair_id},
          {"faculty_id", t.faculty_id}};
}

json to_json(const AppStateRecord& s) {
  json ips = json::array();
  for (const auto& ip : s.allowlist) ips.push_back(ip.str());
  return {{"active", s.active},
          {"selected_teacher",
           s.selected_teacher ? json(*s.selected_teacher) : json(nullptr)},
          {"bank_digest", s.bank_digest},
          {"allowlist", ips}};
}

json question_json(int index, const QuestionItem& item, const QuestionBank& bank) {
  json options = json::array();
  for (int v = 1; v <= 5; ++v) {
    options.push_back(
        {{"value", v}, {"label", bank.scale_labels()[static_cast<std::size_t>(v - 1)]}});
  }
  return {{"index", index},
          {"total", bank.size()},
          {"text", item.text},
          {"options", options}};
}

std::vector<ResponseValue> answers_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "answers must be a list");
  std::vector<ResponseValue> out;
  out.reserve(j.size());
  for (const json& v : j) {
    if (!v.is_number_integer()) fail(ErrorCode::InvalidValue, "answers must be integers");
    out.emplace_back(v.get<int>());
  }
  return out;
}

json answers_to_json(const std::vector<ResponseValue>& answers) {
  json out = json::array();
  for (auto a : answers) out.push_back(a.value());
  return out;
}

}  // namespace evalsys::json_io
