#include "evalsys/session_engine.hpp"

#include "evalsys/error.hpp"
#include "evalsys/store.hpp"

namespace evalsys {

void check_gate(const AppStateRecord& state, const IpAddress& client_ip,
                bool ip_has_active_session) {
  if (!state.active) {
    fail(ErrorCode::EvaluationInactive, "the evaluation is not open");
  }
  if (!state.allows(client_ip)) {
    fail(ErrorCode::IpNotAllowed, "this station is not authorized");
  }
  if (ip_has_active_session) {
    fail(ErrorCode::SessionAlreadyActiveForIp,
         "a questionnaire is already in progress on this station");
  }
}

EvaluationSession start_session(const AppStateRecord& state,
                                const IpAddress& client_ip, Timestamp now,
                                EntropySource& entropy,
                                bool ip_has_active_session) {
  check_gate(state, client_ip, ip_has_active_session);
  EvaluationSession s;
  s.token = new_token(entropy);
  s.teacher_id = *state.selected_teacher;
  s.bank_digest = state.bank_digest;
  s.client_ip = client_ip;
  s.started_at = now;
  s.phase = ActivePhase{1};
  return s;
}

std::pair<int, const QuestionItem&> current_question(
    const EvaluationSession& session, const QuestionBank& bank) {
  if (session.bank_digest != bank.digest()) {
    fail(ErrorCode::BankMismatch, "session was started on another bank");
  }
  const int cursor = session.cursor();
  if (cursor < 1 || static_cast<std::size_t>(cursor) > bank.size()) {
    fail(ErrorCode::SessionNotActive, "no question is awaiting an answer");
  }
  return {cursor, bank.item_at(cursor)};
}

SubmitResult submit_answer(EvaluationSession& session, int index, int value,
                           std::size_t bank_size) {
  if (!session.is_active()) {
    fail(ErrorCode::SessionNotActive, "session is no longer active");
  }
  const int cursor = session.cursor();
  if (index != cursor || static_cast<std::size_t>(cursor) > bank_size) {
    fail(ErrorCode::OutOfOrder, "expected an answer for question " +
                                    std::to_string(cursor) + ", got " +
                                    std::to_string(index));
  }
  session.answers.push_back(ResponseValue(value));
  session.phase = ActivePhase{cursor + 1};
  if (static_cast<std::size_t>(cursor) == bank_size) return Finished{};
  return Progress{cursor + 1};
}

ResultRecord finalize(EvaluationSession& session, Timestamp now,
                      std::size_t bank_size) {
  if (!session.is_active()) {
    fail(ErrorCode::SessionNotActive, "session is no longer active");
  }
  if (session.answers.size() != bank_size) {
    fail(ErrorCode::IncompleteAnswers,
         std::to_string(session.answers.size()) + " of " +
             std::to_string(bank_size) + " questions answered");
  }
  ResultRecord r;
  r.teacher_id = session.teacher_id;
  r.bank_digest = session.bank_digest;
  r.completed_at = now;
  r.answers = session.answers;
  session.phase = CompletedPhase{};
  session.client_ip.reset();
  return r;
}

bool abort_stale(EvaluationSession& session, Timestamp now,
                 std::chrono::seconds ttl) {
  if (!session.is_active()) {
    fail(ErrorCode::SessionNotActive, "session is no longer active");
  }
  if (now - session.started_at <= ttl) return false;
  abort_session(session);
  return true;
}

void abort_session(EvaluationSession& session) {
  session.phase = AbortedPhase{};
  session.answers.clear();
  session.client_ip.reset();
}

SessionEngine::SessionEngine(Store& store, const QuestionBank& bank,
                             EntropySource& entropy, std::chrono::seconds ttl)
    : store_(store), bank_(bank), entropy_(entropy), ttl_(ttl) {}

namespace {

EvaluationSession require_session(WriteTxn& txn, const std::string& token) {
  auto s = txn.session(token);
  if (!s) fail(ErrorCode::UnknownToken, "unknown session token");
  return *std::move(s);
}

// Expires the session in place when it has outlived the ttl.
void expire_if_stale(WriteTxn& txn, EvaluationSession& s, Timestamp now,
                     std::chrono::seconds ttl) {
  if (s.is_active() && abort_stale(s, now, ttl)) txn.update_session(s);
}

}  // namespace

EvaluationSession SessionEngine::start(const IpAddress& client_ip,
                                       Timestamp now) {
  // A stale session would otherwise block its station forever.
  sweep_stale(now);
  return store_.transact([&](WriteTxn& txn) {
    AppStateRecord state = txn.state();
    if (state.active && state.bank_digest != bank_.digest()) {
      fail(ErrorCode::BankMismatch, "service bank differs from the active one");
    }
    EvaluationSession s = start_session(state, client_ip, now, entropy_,
                                        txn.ip_has_active_session(client_ip));
    txn.insert_session(s);
    return s;
  });
}

std::pair<int, QuestionItem> SessionEngine::current_question(
    const std::string& token, Timestamp now) {
  EvaluationSession s = store_.transact([&](WriteTxn& txn) {
    EvaluationSession s = require_session(txn, token);
    expire_if_stale(txn, s, now, ttl_);
    return s;
  });
  auto [index, item] = evalsys::current_question(s, bank_);
  return {index, item};
}

SubmitOutcome SessionEngine::submit(const std::string& token, int index,
                                    int value, Timestamp now) {
  store_.transact([&](WriteTxn& txn) {
    EvaluationSession s = require_session(txn, token);
    expire_if_stale(txn, s, now, ttl_);
  });
  SubmitResult step = store_.transact([&](WriteTxn& txn) {
    EvaluationSession s = require_session(txn, token);
    if (s.is_active() && s.bank_digest != bank_.digest()) {
      fail(ErrorCode::BankMismatch, "session was started on another bank");
    }
    SubmitResult r = submit_answer(s, index, value, bank_.size());
    txn.update_session(s);
    return r;
  });
  if (const auto* p = std::get_if<Progress>(&step)) {
    return {false, p->next_index, std::nullopt};
  }
  store_.transact([](WriteTxn& txn) { txn.fault_point("submit:before_finalize"); });
  try {
    ResultRecord r = finalize(token, now);
    return {true, 0, r.result_id};
  } catch (const Error& e) {
    // A concurrent caller may have finalized between our two transactions.
    if (e.code() != ErrorCode::SessionNotActive) throw;
    auto s = store_.find_session(token);
    if (!s || !s->is_completed()) throw;
    return {true, 0, s->result_id};
  }
}

ResultRecord SessionEngine::finalize(const std::string& token, Timestamp now) {
  return store_.transact([&](WriteTxn& txn) {
    EvaluationSession s = require_session(txn, token);
    ResultRecord r = evalsys::finalize(s, now, bank_.size());
    s.result_id = txn.insert_result(r);
    txn.fault_point("finalize:after_result_insert");
    txn.update_session(s);
    txn.fault_point("finalize:before_commit");
    return r;
  });
}

EvaluationSession SessionEngine::abort_stale(const std::string& token,
                                             Timestamp now) {
  return store_.transact([&](WriteTxn& txn) {
    EvaluationSession s = require_session(txn, token);
    if (evalsys::abort_stale(s, now, ttl_)) txn.update_session(s);
    return s;
  });
}

std::size_t SessionEngine::sweep_stale(Timestamp now) {
  return store_.transact([&](WriteTxn& txn) {
    std::size_t n = 0;
    for (auto& s : txn.active_sessions()) {
      if (evalsys::abort_stale(s, now, ttl_)) {
        txn.update_session(s);
        ++n;
      }
    }
    return n;
  });
}

std::size_t SessionEngine::recover(Timestamp now) {
  std::vector<std::string> pending = store_.transact([&](WriteTxn& txn) {
    std::vector<std::string> tokens;
    for (const auto& s : txn.active_sessions()) {
      if (s.answers.size() == bank_.size() && s.bank_digest == bank_.digest()) {
        tokens.push_back(s.token);
      }
    }
    return tokens;
  });
  for (const auto& token : pending) finalize(token, now);
  return pending.size();
}

}  // namespace evalsys
