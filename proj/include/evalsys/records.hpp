#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "evalsys/net.hpp"
#include "evalsys/scoring.hpp"

namespace evalsys {

struct TeacherRecord {
  std::string teacher_id;
  std::string full_name;
  std::optional<std::string> photo;  // blob name in the photo area
  std::string chair_id;              // empty when unassigned
  std::string faculty_id;

  bool operator==(const TeacherRecord&) const = default;
};

struct AppStateRecord {
  bool active = false;
  std::optional<std::string> selected_teacher;
  std::string bank_digest;
  std::set<IpAddress> allowlist;

  bool allows(const IpAddress& ip) const { return allowlist.contains(ip); }
};

/// Anonymized, finalized questionnaire. Deliberately has no slot for a
/// token, an address or any student identifier.
struct ResultRecord {
  std::int64_t result_id = 0;
  std::string teacher_id;
  std::string bank_digest;
  Timestamp completed_at{};
  std::vector<ResponseValue> answers;
};

struct ActivePhase {
  int cursor = 1;  // next index to answer, 1..N+1
  bool operator==(const ActivePhase&) const = default;
};
struct CompletedPhase {
  bool operator==(const CompletedPhase&) const = default;
};
struct AbortedPhase {
  bool operator==(const AbortedPhase&) const = default;
};

using SessionPhase = std::variant<ActivePhase, CompletedPhase, AbortedPhase>;

struct EvaluationSession {
  std::string token;
  std::string teacher_id;
  std::string bank_digest;
  std::optional<IpAddress> client_ip;  // cleared once the session leaves Active
  Timestamp started_at{};
  SessionPhase phase = ActivePhase{};
  std::vector<ResponseValue> answers;
  std::optional<std::int64_t> result_id;  // set on completion, for the own view

  bool is_active() const { return std::holds_alternative<ActivePhase>(phase); }
  bool is_completed() const {
    return std::holds_alternative<CompletedPhase>(phase);
  }
  int cursor() const;  // 0 unless Active
};

struct ViewerRole {
  enum class Kind { Admin, Dean, Rector, EvaluatedTeacher, Public };

  Kind kind = Kind::Public;
  std::string teacher_id;  // only for EvaluatedTeacher

  static ViewerRole admin() { return {Kind::Admin, {}}; }
  static ViewerRole dean() { return {Kind::Dean, {}}; }
  static ViewerRole rector() { return {Kind::Rector, {}}; }
  static ViewerRole teacher(std::string id) {
    return {Kind::EvaluatedTeacher, std::move(id)};
  }
  static ViewerRole anyone() { return {Kind::Public, {}}; }

  bool privileged() const {
    return kind == Kind::Admin || kind == Kind::Dean || kind == Kind::Rector;
  }
  bool operator==(const ViewerRole&) const = default;
};

std::string_view to_string(ViewerRole::Kind kind);
std::optional<ViewerRole::Kind> parse_role_kind(std::string_view name);

}  // namespace evalsys
