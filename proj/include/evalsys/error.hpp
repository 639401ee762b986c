#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evalsys {

// Every failure the core library reports. The HTTP layer maps each code to
// exactly one (wire code, status) pair; see api_service.cpp.
enum class ErrorCode {
  ParseError,
  ValidationError,
  IndexOutOfRange,
  IncompleteAnswers,
  OutOfRange,
  InvalidValue,
  EvaluationInactive,
  IpNotAllowed,
  SessionAlreadyActiveForIp,
  SessionNotActive,
  BankMismatch,
  OutOfOrder,
  UnknownToken,
  NotFound,
  TeacherInUse,
  InvalidPhoto,
  NoTeacherSelected,
  UnknownTeacher,
  AccessDenied,
  Unauthenticated,
  UnknownUnit,
  AlreadyExists,
  OrgConflict,
  StoreLocked,
  StorageError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace evalsys
