#include "evalsys/records.hpp"

namespace evalsys {

int EvaluationSession::cursor() const {
  if (const auto* a = std::get_if<ActivePhase>(&phase)) return a->cursor;
  return 0;
}

std::string_view to_string(ViewerRole::Kind kind) {
  switch (kind) {
    case ViewerRole::Kind::Admin: return "admin";
    case ViewerRole::Kind::Dean: return "dean";
    case ViewerRole::Kind::Rector: return "rector";
    case ViewerRole::Kind::EvaluatedTeacher: return "teacher";
    case ViewerRole::Kind::Public: return "public";
  }
  return "?";
}

std::optional<ViewerRole::Kind> parse_role_kind(std::string_view name) {
  for (auto k : {ViewerRole::Kind::Admin, ViewerRole::Kind::Dean,
                 ViewerRole::Kind::Rector, ViewerRole::Kind::EvaluatedTeacher,
                 ViewerRole::Kind::Public}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

}  // namespace evalsys
