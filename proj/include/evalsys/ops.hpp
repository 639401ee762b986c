#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalsys/aggregation.hpp"
#include "evalsys/store.hpp"

namespace evalsys {

struct AnswerModel {
  enum class Kind { Uniform, Constant };

  Kind kind = Kind::Uniform;
  int constant = 3;  // for Constant: every answer equals this (1..5)

  /// "uniform" or "all_k" with k in 1..5.
  static AnswerModel parse(std::string_view text);
  std::string name() const;
};

struct SimulationSpec {
  std::uint64_t seed = 42;
  int cohort_size = 1;
  AnswerModel model;
};

/// Answers for student `student` (0-based) of the cohort. Depends only on
/// (seed, student, bank_size, model): the same spec always yields the same
/// stream.
std::vector<int> simulated_answers(const SimulationSpec& spec, int student,
                                   std::size_t bank_size);

struct SimulationSummary {
  int completed = 0;
  std::vector<std::int64_t> result_ids;
  std::string teacher_id;
  nlohmann::json report;  // the teacher's public stats after the run

  /// Deterministic text (no timestamps).
  std::string to_json_text() const;
};

/// Drives cohort_size complete questionnaires through the HTTP API at
/// host:port, one session at a time. Gate errors propagate as Error.
SimulationSummary simulate(const SimulationSpec& spec, const std::string& host,
                           int port);

enum class ExportFormat { Csv, Json };

/// Anonymized result dump for a privileged viewer. Throws AccessDenied.
std::string export_results(Store& store, const ViewerRole& role,
                           ExportFormat format, std::size_t bank_size);

/// Demo data: three teachers in two chairs of two faculties, loopback in
/// the allowlist, evaluation active on the first teacher.
void seed_demo(Store& store);

/// Applies an org map file to teacher records: chair and faculty of every
/// listed teacher are overwritten. Unknown teachers are rejected.
void apply_org_map(Store& store, const OrgMap& org);

}  // namespace evalsys
