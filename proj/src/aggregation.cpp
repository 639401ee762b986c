#include "evalsys/aggregation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "evalsys/error.hpp"

namespace evalsys {

using nlohmann::json;

void OrgMap::assign(const std::string& teacher_id, const std::string& chair_id,
                    const std::string& faculty_id) {
  if (teacher_id.empty()) fail(ErrorCode::OrgConflict, "empty teacher id");
  if (chair_id.empty()) {
    teacher_chair_.try_emplace(teacher_id, "");
    return;
  }
  if (faculty_id.empty()) {
    fail(ErrorCode::OrgConflict, "chair " + chair_id + " has no faculty");
  }
  auto [cit, cnew] = chair_faculty_.try_emplace(chair_id, faculty_id);
  if (!cnew && cit->second != faculty_id) {
    fail(ErrorCode::OrgConflict, "chair " + chair_id + " belongs to faculty " +
                                     cit->second + ", not " + faculty_id);
  }
  auto [tit, tnew] = teacher_chair_.try_emplace(teacher_id, chair_id);
  if (!tnew && !tit->second.empty() && tit->second != chair_id) {
    fail(ErrorCode::OrgConflict, "teacher " + teacher_id + " is already in chair " +
                                     tit->second);
  }
  tit->second = chair_id;
}

OrgMap OrgMap::from_teachers(std::span<const TeacherRecord> teachers,
                             std::string university) {
  OrgMap org(std::move(university));
  for (const auto& t : teachers) org.assign(t.teacher_id, t.chair_id, t.faculty_id);
  return org;
}

OrgMap OrgMap::parse(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("org map: ") + e.what());
  }
  try {
    OrgMap org(doc.value("university", std::string("university")));
    for (const json& f : doc.at("faculties")) {
      const std::string faculty = f.at("id").get<std::string>();
      if (faculty.empty()) fail(ErrorCode::ParseError, "empty faculty id");
      if (org.has_faculty(faculty)) {
        fail(ErrorCode::OrgConflict, "faculty " + faculty + " listed twice");
      }
      for (const json& c : f.value("chairs", json::array())) {
        const std::string chair = c.at("id").get<std::string>();
        if (chair.empty()) fail(ErrorCode::ParseError, "empty chair id");
        if (org.has_chair(chair)) {
          fail(ErrorCode::OrgConflict, "chair " + chair + " listed twice");
        }
        org.chair_faculty_[chair] = faculty;
        for (const json& t : c.value("teachers", json::array())) {
          const std::string teacher = t.get<std::string>();
          if (org.has_teacher(teacher)) {
            fail(ErrorCode::OrgConflict, "teacher " + teacher + " listed twice");
          }
          org.assign(teacher, chair, faculty);
        }
      }
    }
    return org;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("org map: ") + e.what());
  }
}

std::string OrgMap::dump() const {
  json faculties = json::array();
  for (const auto& f : this->faculties()) {
    json chairs = json::array();
    for (const auto& c : chairs_in_faculty(f)) {
      chairs.push_back({{"id", c}, {"teachers", teachers_in_chair(c)}});
    }
    faculties.push_back({{"id", f}, {"chairs", chairs}});
  }
  return json{{"university", university_}, {"faculties", faculties}}.dump(2);
}

std::optional<std::string> OrgMap::chair_of(const std::string& teacher_id) const {
  auto it = teacher_chair_.find(teacher_id);
  if (it == teacher_chair_.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::optional<std::string> OrgMap::faculty_of_chair(const std::string& chair_id) const {
  auto it = chair_faculty_.find(chair_id);
  if (it == chair_faculty_.end()) return std::nullopt;
  return it->second;
}

bool OrgMap::has_teacher(const std::string& id) const {
  return teacher_chair_.contains(id);
}
bool OrgMap::has_chair(const std::string& id) const {
  return chair_faculty_.contains(id);
}
bool OrgMap::has_faculty(const std::string& id) const {
  return std::ranges::any_of(chair_faculty_,
                             [&](const auto& kv) { return kv.second == id; });
}

std::vector<std::string> OrgMap::teachers_in_chair(const std::string& chair_id) const {
  std::vector<std::string> out;
  for (const auto& [t, c] : teacher_chair_) {
    if (c == chair_id) out.push_back(t);
  }
  return out;
}

std::vector<std::string> OrgMap::chairs_in_faculty(const std::string& faculty_id) const {
  std::vector<std::string> out;
  for (const auto& [c, f] : chair_faculty_) {
    if (f == faculty_id) out.push_back(c);
  }
  return out;
}

std::vector<std::string> OrgMap::faculties() const {
  std::set<std::string> out;
  for (const auto& kv : chair_faculty_) out.insert(kv.second);
  return {out.begin(), out.end()};
}

std::string_view to_string(Scope::Kind kind) {
  switch (kind) {
    case Scope::Kind::Teacher: return "teacher";
    case Scope::Kind::Chair: return "chair";
    case Scope::Kind::Faculty: return "faculty";
    case Scope::Kind::University: return "university";
  }
  return "?";
}

std::optional<Scope::Kind> parse_scope_kind(std::string_view name) {
  for (auto k : {Scope::Kind::Teacher, Scope::Kind::Chair, Scope::Kind::Faculty,
                 Scope::Kind::University}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::int64_t ItemDistribution::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

namespace {

void require_bank(std::span<const ResultRecord> results, const QuestionBank& bank) {
  for (const auto& r : results) {
    if (r.bank_digest != bank.digest() || r.answers.size() != bank.size()) {
      fail(ErrorCode::BankMismatch,
           "questionnaire " + std::to_string(r.result_id) +
               " was answered on a different question bank");
    }
  }
}

UnitReport pooled_report(Scope scope, std::span<const ResultRecord> results,
                         const QuestionBank& bank) {
  require_bank(results, bank);
  UnitReport report;
  report.scope = std::move(scope);
  report.questionnaire_count = static_cast<std::int64_t>(results.size());

  std::map<Competence, std::int64_t> sum;
  std::int64_t total = 0;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < bank.size(); ++i) {
      const QuestionItem& item = bank.items()[i];
      const int s = score_item(item.polarity, r.answers[i]).value();
      sum[item.competence] += s;
      total += s;
    }
  }
  const std::int64_t n = report.questionnaire_count;
  for (Competence c : kAllCompetences) {
    if (n == 0) {
      report.per_competence[c] = std::nullopt;
      continue;
    }
    Rational mean(sum[c], n * static_cast<std::int64_t>(bank.count(c)));
    report.per_competence[c] = CompetenceScore{mean, mark_from_mean(mean)};
  }
  if (n > 0) {
    Rational mean(total, n * static_cast<std::int64_t>(bank.size()));
    report.overall = CompetenceScore{mean, mark_from_mean(mean)};
  }
  return report;
}

bool in_scope(const Scope& scope, const OrgMap& org, const std::string& teacher) {
  switch (scope.kind) {
    case Scope::Kind::University: return true;
    case Scope::Kind::Teacher: return teacher == scope.id;
    case Scope::Kind::Chair: return org.chair_of(teacher) == scope.id;
    case Scope::Kind::Faculty: {
      auto chair = org.chair_of(teacher);
      return chair && org.faculty_of_chair(*chair) == scope.id;
    }
  }
  return false;
}

void require_unit(const Scope& scope, const OrgMap& org) {
  bool known = true;
  switch (scope.kind) {
    case Scope::Kind::University: break;
    case Scope::Kind::Teacher: known = org.has_teacher(scope.id); break;
    case Scope::Kind::Chair: known = org.has_chair(scope.id); break;
    case Scope::Kind::Faculty: known = org.has_faculty(scope.id); break;
  }
  if (!known) {
    fail(ErrorCode::UnknownUnit,
         "unknown " + std::string(to_string(scope.kind)) + " " + scope.id);
  }
}

}  // namespace

std::vector<ResultRecord> results_in_scope(const Scope& scope, const OrgMap& org,
                                           std::span<const ResultRecord> all_results) {
  require_unit(scope, org);
  std::vector<ResultRecord> out;
  for (const auto& r : all_results) {
    if (in_scope(scope, org, r.teacher_id)) out.push_back(r);
  }
  return out;
}

UnitReport teacher_report(const std::string& teacher_id,
                          std::span<const ResultRecord> results,
                          const QuestionBank& bank) {
  return pooled_report(Scope::teacher(teacher_id), results, bank);
}

UnitReport unit_report(const Scope& scope, const OrgMap& org,
                       std::span<const ResultRecord> all_results,
                       const QuestionBank& bank) {
  const auto selected = results_in_scope(scope, org, all_results);
  return pooled_report(scope, selected, bank);
}

MeanOfMeans mean_of_questionnaire_means(const Scope& scope, const OrgMap& org,
                                        std::span<const ResultRecord> all_results,
                                        const QuestionBank& bank) {
  const auto selected = results_in_scope(scope, org, all_results);
  require_bank(selected, bank);
  MeanOfMeans out;
  out.questionnaire_count = static_cast<std::int64_t>(selected.size());
  if (selected.empty()) return out;

  std::map<Competence, double> acc;
  double overall = 0.0;
  for (const auto& r : selected) {
    const QuestionnaireReport q = questionnaire_report(r.answers, bank);
    for (const auto& [c, s] : q.per_competence) acc[c] += s.mean.to_double();
    overall += q.overall.mean.to_double();
  }
  const double n = static_cast<double>(selected.size());
  for (const auto& [c, v] : acc) out.per_competence[c] = v / n;
  out.overall = overall / n;
  return out;
}

ItemDistribution item_distribution(std::span<const ResultRecord> results,
                                   const QuestionBank& bank, int item_index) {
  bank.item_at(item_index);  // range check
  require_bank(results, bank);
  ItemDistribution d;
  d.item_index = item_index;
  for (const auto& r : results) {
    ++d.counts[static_cast<std::size_t>(
        r.answers[static_cast<std::size_t>(item_index) - 1].value() - 1)];
  }
  return d;
}

}  // namespace evalsys
