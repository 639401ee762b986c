#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalsys/question_bank.hpp"
#include "evalsys/records.hpp"
#include "evalsys/scoring.hpp"

namespace evalsys {

/// teacher -> chair -> faculty -> university (single root).
class OrgMap {
 public:
  explicit OrgMap(std::string university = "university")
      : university_(std::move(university)) {}

  /// Throws OrgConflict if the teacher already sits in another chair or the
  /// chair already belongs to another faculty.
  void assign(const std::string& teacher_id, const std::string& chair_id,
              const std::string& faculty_id);

  /// Teachers without a chair are left out of chair/faculty scopes.
  static OrgMap from_teachers(std::span<const TeacherRecord> teachers,
                              std::string university = "university");

  /// Org map file:
  ///   {"university": "...",
  ///    "faculties": [{"id": "F", "chairs": [{"id": "C", "teachers": ["T"]}]}]}
  static OrgMap parse(std::string_view document);
  std::string dump() const;

  const std::string& university() const { return university_; }
  std::optional<std::string> chair_of(const std::string& teacher_id) const;
  std::optional<std::string> faculty_of_chair(const std::string& chair_id) const;
  bool has_teacher(const std::string& id) const;
  bool has_chair(const std::string& id) const;
  bool has_faculty(const std::string& id) const;
  std::vector<std::string> teachers_in_chair(const std::string& chair_id) const;
  std::vector<std::string> chairs_in_faculty(const std::string& faculty_id) const;
  std::vector<std::string> faculties() const;
  const std::map<std::string, std::string>& teacher_chairs() const {
    return teacher_chair_;
  }

 private:
  std::string university_;
  std::map<std::string, std::string> teacher_chair_;
  std::map<std::string, std::string> chair_faculty_;
};

struct Scope {
  enum class Kind { Teacher, Chair, Faculty, University };

  Kind kind = Kind::University;
  std::string id;

  static Scope teacher(std::string id) { return {Kind::Teacher, std::move(id)}; }
  static Scope chair(std::string id) { return {Kind::Chair, std::move(id)}; }
  static Scope faculty(std::string id) { return {Kind::Faculty, std::move(id)}; }
  static Scope university() { return {Kind::University, {}}; }

  bool operator==(const Scope&) const = default;
};

std::string_view to_string(Scope::Kind kind);
std::optional<Scope::Kind> parse_scope_kind(std::string_view name);

struct UnitReport {
  Scope scope;
  std::int64_t questionnaire_count = 0;
  // Every competence is present as a key; the value is empty when count is 0.
  std::map<Competence, std::optional<CompetenceScore>> per_competence;
  std::optional<CompetenceScore> overall;

  bool operator==(const UnitReport&) const = default;
};

struct ItemDistribution {
  int item_index = 0;
  std::array<std::int64_t, 5> counts{};  // counts[v-1] = answers equal to v

  std::int64_t total() const;
};

/// Pools every item score of every questionnaire (each questionnaire weighs
/// equally). Throws BankMismatch if a result carries another digest.
UnitReport teacher_report(const std::string& teacher_id,
                          std::span<const ResultRecord> results,
                          const QuestionBank& bank);

/// Selects the results whose teacher falls under the scope, then pools as
/// teacher_report does. Throws UnknownUnit, BankMismatch.
UnitReport unit_report(const Scope& scope, const OrgMap& org,
                       std::span<const ResultRecord> all_results,
                       const QuestionBank& bank);

/// Second formulation: the plain average of per-questionnaire means. Agrees
/// with the pooled means whenever questionnaires are complete.
struct MeanOfMeans {
  std::int64_t questionnaire_count = 0;
  std::map<Competence, double> per_competence;
  std::optional<double> overall;
};

MeanOfMeans mean_of_questionnaire_means(const Scope& scope, const OrgMap& org,
                                        std::span<const ResultRecord> all_results,
                                        const QuestionBank& bank);

/// Raw (pre-reversal) response histogram for one item. Throws
/// IndexOutOfRange.
ItemDistribution item_distribution(std::span<const ResultRecord> results,
                                   const QuestionBank& bank, int item_index);

/// The results that fall under a scope. Throws UnknownUnit.
std::vector<ResultRecord> results_in_scope(const Scope& scope, const OrgMap& org,
                                           std::span<const ResultRecord> all_results);

}  // namespace evalsys
