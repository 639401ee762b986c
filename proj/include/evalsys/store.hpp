#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <type_traits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalsys/crypto.hpp"
#include "evalsys/records.hpp"

struct sqlite3;

namespace evalsys {

inline constexpr std::size_t kMaxPhotoBytes = 2u * 1024u * 1024u;

/// True for a payload that starts with the JPEG SOI marker FF D8 FF.
bool looks_like_jpeg(std::span<const std::uint8_t> bytes);

struct StoreOptions {
  PasswordHashParams password_params;
  /// Called at named points inside multi-step transactions. Tests use it to
  /// throw or to kill the process mid-commit.
  std::function<void(std::string_view point)> fault_hook;
  /// synchronous=FULL when true; tests on throwaway stores may turn it off.
  bool durable = true;
};

struct TeacherInput {
  std::string teacher_id;  // empty: store assigns one
  std::string full_name;
  std::string chair_id;
  std::string faculty_id;
  std::optional<std::vector<std::uint8_t>> photo;
};

struct TeacherChanges {
  std::optional<std::string> full_name;
  std::optional<std::string> chair_id;
  std::optional<std::string> faculty_id;
  std::optional<std::vector<std::uint8_t>> photo;
  bool remove_photo = false;
};

/// One atomic "apply" of the parameter form. Unset fields keep their value.
struct StateChanges {
  std::optional<bool> active;
  std::optional<std::optional<std::string>> selected_teacher;
  std::optional<std::vector<IpAddress>> allowlist;
};

struct IntegrityReport {
  std::size_t results = 0;
  std::size_t completed_sessions = 0;
  std::size_t orphan_results = 0;              // no Completed session points at it
  std::size_t completed_without_result = 0;    // Completed but result missing
  std::size_t unknown_bank_results = 0;        // digest never registered

  bool ok() const {
    return orphan_results == 0 && completed_without_result == 0 &&
           unknown_bank_results == 0;
  }
};

class Store;

/// A serialized read-write transaction. Rolls back unless commit() runs.
class WriteTxn {
 public:
  WriteTxn(const WriteTxn&) = delete;
  WriteTxn& operator=(const WriteTxn&) = delete;
  ~WriteTxn();

  AppStateRecord state();
  void save_state(const AppStateRecord& state);

  std::optional<EvaluationSession> session(const std::string& token);
  bool ip_has_active_session(const IpAddress& ip);
  std::vector<EvaluationSession> active_sessions();
  void insert_session(const EvaluationSession& session);
  void update_session(const EvaluationSession& session);

  /// Assigns and returns the next result_id.
  std::int64_t insert_result(ResultRecord& record);

  std::optional<TeacherRecord> teacher(const std::string& id);

  /// Aborts every Active session; returns how many.
  std::size_t abort_active_sessions();

  void fault_point(std::string_view name);
  void commit();

 private:
  friend class Store;
  explicit WriteTxn(Store& store);

  Store& store_;
  std::unique_lock<std::mutex> lock_;
  bool done_ = false;
};

/// Single-file embedded store (SQLite) plus a photos/ blob directory. All
/// access goes through one connection guarded by one mutex, so every
/// operation observes a consistent snapshot and writers serialize.
class Store {
 public:
  /// Opens or creates <data_dir>/evaluation.db and takes an exclusive lock on
  /// the directory. Throws StoreLocked when another handle holds it.
  static std::unique_ptr<Store> open(const std::filesystem::path& data_dir,
                                     StoreOptions options = {});
  /// Transient store with in-memory photos; for tests and the Python module.
  static std::unique_ptr<Store> open_in_memory(StoreOptions options = {});

  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  WriteTxn begin();

  template <class F>
  auto transact(F&& f) {
    WriteTxn txn = begin();
    if constexpr (std::is_void_v<decltype(f(txn))>) {
      f(txn);
      txn.commit();
    } else {
      auto out = f(txn);
      txn.commit();
      return out;
    }
  }

  // Teachers.
  std::string put_teacher(const TeacherInput& input);
  TeacherRecord update_teacher(const std::string& id,
                               const TeacherChanges& changes);
  void delete_teacher(const std::string& id);
  std::optional<TeacherRecord> find_teacher(const std::string& id);
  std::vector<TeacherRecord> list_teachers();
  std::optional<std::vector<std::uint8_t>> teacher_photo(const std::string& id);

  // Evaluation state.
  AppStateRecord get_state();
  /// Applies the batch atomically. Activation, deactivation or a teacher
  /// switch aborts every Active session in the same transaction.
  AppStateRecord set_state(const StateChanges& changes);
  /// Records the bank digest as known and makes it the current one. Throws
  /// BankMismatch when the state is active under a different digest.
  void register_bank(const std::string& digest);
  bool bank_known(const std::string& digest);

  // Results.
  std::vector<ResultRecord> list_results(
      const ViewerRole& role,
      const std::optional<std::string>& teacher_id = std::nullopt);
  std::optional<ResultRecord> find_result(std::int64_t result_id);
  std::size_t count_results(const std::string& teacher_id);

  std::optional<EvaluationSession> find_session(const std::string& token);

  // Credentials.
  void init_admin(const std::string& username, const std::string& password,
                  bool force, EntropySource& entropy);
  bool has_admin();
  bool verify_admin(std::string_view username, std::string_view password);

  std::string issue_access_key(const ViewerRole& role, EntropySource& entropy);
  std::optional<ViewerRole> resolve_access_key(std::string_view key);

  IntegrityReport check_integrity();

 private:
  friend class WriteTxn;
  class Impl;

  explicit Store(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
};

}  // namespace evalsys
