#include "evalsys/error.hpp"

namespace evalsys {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::IncompleteAnswers: return "IncompleteAnswers";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::EvaluationInactive: return "EvaluationInactive";
    case ErrorCode::IpNotAllowed: return "IpNotAllowed";
    case ErrorCode::SessionAlreadyActiveForIp: return "SessionAlreadyActiveForIp";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::BankMismatch: return "BankMismatch";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::TeacherInUse: return "TeacherInUse";
    case ErrorCode::InvalidPhoto: return "InvalidPhoto";
    case ErrorCode::NoTeacherSelected: return "NoTeacherSelected";
    case ErrorCode::UnknownTeacher: return "UnknownTeacher";
    case ErrorCode::AccessDenied: return "AccessDenied";
    case ErrorCode::Unauthenticated: return "Unauthenticated";
    case ErrorCode::UnknownUnit: return "UnknownUnit";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
    case ErrorCode::OrgConflict: return "OrgConflict";
    case ErrorCode::StoreLocked: return "StoreLocked";
    case ErrorCode::StorageError: return "StorageError";
  }
  return "Unknown";
}

}  // namespace evalsys
