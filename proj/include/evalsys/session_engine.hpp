#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>

#include "evalsys/crypto.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/records.hpp"

namespace evalsys {

class Store;

inline constexpr std::chrono::seconds kDefaultSessionTtl = std::chrono::hours(2);

// Pure transitions over a single session value. They hold no locks and touch
// no storage; SessionEngine composes them with Store transactions.

/// Throws EvaluationInactive, IpNotAllowed or SessionAlreadyActiveForIp, in
/// that order of precedence.
void check_gate(const AppStateRecord& state, const IpAddress& client_ip,
                bool ip_has_active_session);

EvaluationSession start_session(const AppStateRecord& state,
                                const IpAddress& client_ip, Timestamp now,
                                EntropySource& entropy,
                                bool ip_has_active_session);

std::pair<int, const QuestionItem&> current_question(
    const EvaluationSession& session, const QuestionBank& bank);

struct Progress {
  int next_index = 0;
  bool operator==(const Progress&) const = default;
};
struct Finished {
  bool operator==(const Finished&) const = default;
};
using SubmitResult = std::variant<Progress, Finished>;

/// Accepts the answer only for the cursor position. Throws SessionNotActive,
/// OutOfOrder or InvalidValue.
SubmitResult submit_answer(EvaluationSession& session, int index, int value,
                           std::size_t bank_size);

/// Moves an Active(N+1) session to Completed and returns the result row to
/// persist (result_id left at 0 for the store to assign).
ResultRecord finalize(EvaluationSession& session, Timestamp now,
                      std::size_t bank_size);

/// Returns true when the session was aborted for exceeding ttl.
bool abort_stale(EvaluationSession& session, Timestamp now,
                 std::chrono::seconds ttl);

/// Unconditional Active -> Aborted; partial answers are discarded.
void abort_session(EvaluationSession& session);

struct SubmitOutcome {
  bool finished = false;
  int next_index = 0;
  std::optional<std::int64_t> result_id;
};

/// Runs the questionnaire protocol against a Store. Every call is one
/// serialized store transaction (two for the final answer: the answer, then
/// finalization).
class SessionEngine {
 public:
  SessionEngine(Store& store, const QuestionBank& bank, EntropySource& entropy,
                std::chrono::seconds ttl = kDefaultSessionTtl);

  EvaluationSession start(const IpAddress& client_ip, Timestamp now);
  std::pair<int, QuestionItem> current_question(const std::string& token,
                                                Timestamp now);
  SubmitOutcome submit(const std::string& token, int index, int value,
                       Timestamp now);
  ResultRecord finalize(const std::string& token, Timestamp now);
  EvaluationSession abort_stale(const std::string& token, Timestamp now);

  /// Aborts every Active session older than the ttl.
  std::size_t sweep_stale(Timestamp now);

  /// Finalizes sessions that hold all N answers but never committed their
  /// result (interrupted between the last answer and finalization).
  std::size_t recover(Timestamp now);

  const QuestionBank& bank() const { return bank_; }
  std::chrono::seconds ttl() const { return ttl_; }

 private:
  Store& store_;
  const QuestionBank& bank_;
  EntropySource& entropy_;
  std::chrono::seconds ttl_;
};

}  // namespace evalsys
