#include "evalsys/store.hpp"

#include <fcntl.h>
#include <sqlite3.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "evalsys/error.hpp"
#include "evalsys/session_engine.hpp"

namespace evalsys {

namespace fs = std::filesystem;

bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 &&
         bytes[2] == 0xFF;
}

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS teachers (
  id TEXT PRIMARY KEY,
  full_name TEXT NOT NULL,
  photo TEXT,
  chair_id TEXT NOT NULL DEFAULT '',
  faculty_id TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS state (
  id INTEGER PRIMARY KEY CHECK (id = 1),
  active INTEGER NOT NULL,
  selected_teacher TEXT,
  bank_digest TEXT NOT NULL
);
INSERT OR IGNORE INTO state (id, active, selected_teacher, bank_digest)
  VALUES (1, 0, NULL, '');
CREATE TABLE IF NOT EXISTS ip_allowlist (ip TEXT PRIMARY KEY);
CREATE TABLE IF NOT EXISTS admin (
  id INTEGER PRIMARY KEY CHECK (id = 1),
  username TEXT NOT NULL,
  password_digest BLOB NOT NULL,
  salt BLOB NOT NULL,
  ops_limit INTEGER NOT NULL,
  mem_limit INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS results (
  result_id INTEGER PRIMARY KEY AUTOINCREMENT,
  teacher_id TEXT NOT NULL,
  bank_digest TEXT NOT NULL,
  completed_at INTEGER NOT NULL,
  answers TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS results_by_teacher ON results (teacher_id);
CREATE TABLE IF NOT EXISTS eval_sessions (
  token TEXT PRIMARY KEY,
  teacher_id TEXT NOT NULL,
  bank_digest TEXT NOT NULL,
  client_ip TEXT,
  started_at INTEGER NOT NULL,
  phase TEXT NOT NULL,
  cursor INTEGER NOT NULL,
  answers TEXT NOT NULL,
  result_id INTEGER
);
CREATE INDEX IF NOT EXISTS sessions_by_phase ON eval_sessions (phase, client_ip);
CREATE TABLE IF NOT EXISTS banks (digest TEXT PRIMARY KEY);
CREATE TABLE IF NOT EXISTS access_keys (
  key_digest TEXT PRIMARY KEY,
  role TEXT NOT NULL,
  teacher_id TEXT
);
CREATE TABLE IF NOT EXISTS counters (name TEXT PRIMARY KEY, value INTEGER NOT NULL);
)sql";

[[noreturn]] void sql_fail(sqlite3* db, const std::string& what) {
  fail(ErrorCode::StorageError, what + ": " + sqlite3_errmsg(db));
}

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    fail(ErrorCode::StorageError, msg);
  }
}

// Idle prepared statements per (connection, SQL text). Every statement
// runs under its store's mutex, so a checked-out statement has one user.
class StmtCache {
 public:
  static sqlite3_stmt* take(sqlite3* db, const char* sql) {
    std::lock_guard lock(mu());
    auto it = idle().find(Key{db, sql});
    if (it == idle().end() || it->second.empty()) return nullptr;
    sqlite3_stmt* s = it->second.back();
    it->second.pop_back();
    return s;
  }
  static void give_back(sqlite3* db, std::string sql, sqlite3_stmt* s) {
    sqlite3_reset(s);
    sqlite3_clear_bindings(s);
    std::lock_guard lock(mu());
    idle()[{db, std::move(sql)}].push_back(s);
  }
  static void drop(sqlite3* db) {
    std::lock_guard lock(mu());
    for (auto it = idle().begin(); it != idle().end();) {
      if (it->first.first != db) {
        ++it;
        continue;
      }
      for (sqlite3_stmt* s : it->second) sqlite3_finalize(s);
      it = idle().erase(it);
    }
  }

 private:
  using Key = std::pair<sqlite3*, std::string>;
  static std::mutex& mu() {
    static std::mutex m;
    return m;
  }
  static std::map<Key, std::vector<sqlite3_stmt*>, std::less<>>& idle() {
    static std::map<Key, std::vector<sqlite3_stmt*>, std::less<>> m;
    return m;
  }
};

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db), sql_(sql) {
    stmt_ = StmtCache::take(db, sql);
    if (!stmt_ && sqlite3_prepare_v3(db, sql, -1, SQLITE_PREPARE_PERSISTENT, &stmt_,
                                     nullptr) != SQLITE_OK) {
      sql_fail(db, std::string("prepare ") + sql);
    }
  }
  ~Stmt() { StmtCache::give_back(db_, std::move(sql_), stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::string_view v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()),
                      SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, const char* v) { return bind(i, std::string_view(v)); }
  Stmt& bind(int i, const std::string& v) { return bind(i, std::string_view(v)); }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
  Stmt& bind(int i, std::span<const std::uint8_t> v) {
    sqlite3_bind_blob(stmt_, i, v.data(), static_cast<int>(v.size()),
                      SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, const std::optional<std::string>& v) {
    if (v) return bind(i, *v);
    sqlite3_bind_null(stmt_, i);
    return *this;
  }
  Stmt& bind(int i, const std::optional<std::int64_t>& v) {
    if (v) return bind(i, *v);
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    sql_fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  bool is_null(int col) const {
    return sqlite3_column_type(stmt_, col) == SQLITE_NULL;
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::optional<std::string> opt_text(int col) const {
    if (is_null(col)) return std::nullopt;
    return text(col);
  }
  std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::vector<std::uint8_t> blob(int col) const {
    const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, col));
    return {p, p + sqlite3_column_bytes(stmt_, col)};
  }

 private:
  sqlite3* db_;
  std::string sql_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string encode_answers(const std::vector<ResponseValue>& answers) {
  std::string out;
  out.reserve(answers.size());
  for (auto a : answers) out.push_back(static_cast<char>('0' + a.value()));
  return out;
}

std::vector<ResponseValue> decode_answers(const std::string& s) {
  std::vector<ResponseValue> out;
  out.reserve(s.size());
  for (char c : s) out.emplace_back(c - '0');
  return out;
}

bool valid_id(std::string_view id) {
  return !id.empty() && id.size() <= 64 &&
         std::ranges::all_of(id, [](unsigned char c) {
           return std::isalnum(c) || c == '-' || c == '_' || c == '.';
         });
}

bool blank(std::string_view s) {
  return std::ranges::all_of(
      s, [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_photo(const std::vector<std::uint8_t>& photo) {
  if (photo.size() > kMaxPhotoBytes) {
    fail(ErrorCode::InvalidPhoto, "photo exceeds 2 MiB");
  }
  if (!looks_like_jpeg(photo)) {
    fail(ErrorCode::InvalidPhoto, "photo is not a JPEG image");
  }
}

}  // namespace

class Store::Impl {
 public:
  sqlite3* db = nullptr;
  std::mutex mutex;
  StoreOptions options;
  int lock_fd = -1;
  std::optional<fs::path> photo_dir;                          // on-disk mode
  std::map<std::string, std::vector<std::uint8_t>> mem_photos;  // in-memory mode

  ~Impl() {
    if (db) {
      StmtCache::drop(db);
      sqlite3_close(db);
    }
    if (lock_fd >= 0) {
      flock(lock_fd, LOCK_UN);
      close(lock_fd);
    }
  }

  void open_db(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE |
                            SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
      std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
      fail(ErrorCode::StorageError, "cannot open store: " + msg);
    }
    exec(db, "PRAGMA foreign_keys = ON;");
    if (path != ":memory:") exec(db, "PRAGMA journal_mode = WAL;");
    exec(db, options.durable ? "PRAGMA synchronous = FULL;"
                             : "PRAGMA synchronous = OFF;");
    exec(db, kSchema);
  }

  std::string put_photo(const std::vector<std::uint8_t>& bytes) {
    const std::string name =
        sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                    bytes.size())) +
        ".jpg";
    if (!photo_dir) {
      mem_photos[name] = bytes;
      return name;
    }
    const fs::path target = *photo_dir / name;
    if (!fs::exists(target)) {
      const fs::path tmp = *photo_dir / (name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::StorageError, "cannot write photo");
      }
      fs::rename(tmp, target);
    }
    return name;
  }

  std::optional<std::vector<std::uint8_t>> get_photo(const std::string& name) {
    if (!photo_dir) {
      auto it = mem_photos.find(name);
      if (it == mem_photos.end()) return std::nullopt;
      return it->second;
    }
    std::ifstream in(*photo_dir / name, std::ios::binary);
    if (!in) return std::nullopt;
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
  }

  // Removes a blob no teacher references any more. Called after commit.
  void drop_photo_if_unused(const std::string& name) {
    Stmt q(db, "SELECT COUNT(*) FROM teachers WHERE photo = ?");
    q.bind(1, name).step();
    if (q.i64(0) != 0) return;
    if (!photo_dir) {
      mem_photos.erase(name);
    } else {
      std::error_code ec;
      fs::remove(*photo_dir / name, ec);
    }
  }
};

// --- WriteTxn -------------------------------------------------------------

WriteTxn::WriteTxn(Store& store)
    : store_(store), lock_(store.impl_->mutex) {
  exec(store_.impl_->db, "BEGIN IMMEDIATE;");
}

WriteTxn::~WriteTxn() {
  if (!done_) {
    sqlite3_exec(store_.impl_->db, "ROLLBACK;", nullptr, nullptr, nullptr);
  }
}

void WriteTxn::commit() {
  exec(store_.impl_->db, "COMMIT;");
  done_ = true;
}

void WriteTxn::fault_point(std::string_view name) {
  if (store_.impl_->options.fault_hook) store_.impl_->options.fault_hook(name);
}

AppStateRecord WriteTxn::state() {
  sqlite3* db = store_.impl_->db;
  AppStateRecord s;
  Stmt q(db, "SELECT active, selected_teacher, bank_digest FROM state WHERE id = 1");
  if (q.step()) {
    s.active = q.i64(0) != 0;
    s.selected_teacher = q.opt_text(1);
    s.bank_digest = q.text(2);
  }
  Stmt ips(db, "SELECT ip FROM ip_allowlist");
  while (ips.step()) {
    if (auto ip = IpAddress::parse(ips.text(0))) s.allowlist.insert(*ip);
  }
  return s;
}

void WriteTxn::save_state(const AppStateRecord& s) {
  sqlite3* db = store_.impl_->db;
  Stmt u(db,
         "UPDATE state SET active = ?, selected_teacher = ?, bank_digest = ? "
         "WHERE id = 1");
  u.bind(1, s.active ? 1 : 0).bind(2, s.selected_teacher).bind(3, s.bank_digest).run();
  exec(db, "DELETE FROM ip_allowlist;");
  for (const auto& ip : s.allowlist) {
    Stmt i(db, "INSERT INTO ip_allowlist (ip) VALUES (?)");
    i.bind(1, ip.str()).run();
  }
}

namespace {

constexpr const char* kSessionColumns =
    "token, teacher_id, bank_digest, client_ip, started_at, phase, cursor, "
    "answers, result_id";

EvaluationSession read_session(const Stmt& q) {
  EvaluationSession s;
  s.token = q.text(0);
  s.teacher_id = q.text(1);
  s.bank_digest = q.text(2);
  if (auto ip = q.opt_text(3)) s.client_ip = IpAddress::parse(*ip);
  s.started_at = Timestamp(std::chrono::seconds(q.i64(4)));
  const std::string phase = q.text(5);
  if (phase == "active") {
    s.phase = ActivePhase{static_cast<int>(q.i64(6))};
  } else if (phase == "completed") {
    s.phase = CompletedPhase{};
  } else {
    s.phase = AbortedPhase{};
  }
  s.answers = decode_answers(q.text(7));
  if (!q.is_null(8)) s.result_id = q.i64(8);
  return s;
}

const char* phase_name(const SessionPhase& p) {
  if (std::holds_alternative<ActivePhase>(p)) return "active";
  if (std::holds_alternative<CompletedPhase>(p)) return "completed";
  return "aborted";
}

std::optional<std::string> ip_text(const std::optional<IpAddress>& ip) {
  if (!ip) return std::nullopt;
  return ip->str();
}

ResultRecord read_result(const Stmt& q) {
  ResultRecord r;
  r.result_id = q.i64(0);
  r.teacher_id = q.text(1);
  r.bank_digest = q.text(2);
  r.completed_at = Timestamp(std::chrono::seconds(q.i64(3)));
  r.answers = decode_answers(q.text(4));
  return r;
}

TeacherRecord read_teacher(const Stmt& q) {
  return {q.text(0), q.text(1), q.opt_text(2), q.text(3), q.text(4)};
}

}  // namespace

std::optional<EvaluationSession> WriteTxn::session(const std::string& token) {
  Stmt q(store_.impl_->db,
         (std::string("SELECT ") + kSessionColumns +
          " FROM eval_sessions WHERE token = ?")
             .c_str());
  q.bind(1, token);
  if (!q.step()) return std::nullopt;
  return read_session(q);
}

bool WriteTxn::ip_has_active_session(const IpAddress& ip) {
  Stmt q(store_.impl_->db,
         "SELECT 1 FROM eval_sessions WHERE phase = 'active' AND client_ip = ? "
         "LIMIT 1");
  q.bind(1, ip.str());
  return q.step();
}

std::vector<EvaluationSession> WriteTxn::active_sessions() {
  Stmt q(store_.impl_->db,
         (std::string("SELECT ") + kSessionColumns +
          " FROM eval_sessions WHERE phase = 'active' ORDER BY started_at, token")
             .c_str());
  std::vector<EvaluationSession> out;
  while (q.step()) out.push_back(read_session(q));
  return out;
}

void WriteTxn::insert_session(const EvaluationSession& s) {
  Stmt q(store_.impl_->db,
         "INSERT INTO eval_sessions (token, teacher_id, bank_digest, client_ip, "
         "started_at, phase, cursor, answers, result_id) "
         "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)");
  q.bind(1, s.token)
      .bind(2, s.teacher_id)
      .bind(3, s.bank_digest)
      .bind(4, ip_text(s.client_ip))
      .bind(5, static_cast<std::int64_t>(s.started_at.time_since_epoch().count()))
      .bind(6, phase_name(s.phase))
      .bind(7, s.cursor())
      .bind(8, encode_answers(s.answers))
      .bind(9, s.result_id)
      .run();
}

void WriteTxn::update_session(const EvaluationSession& s) {
  Stmt q(store_.impl_->db,
         "UPDATE eval_sessions SET client_ip = ?, phase = ?, cursor = ?, "
         "answers = ?, result_id = ? WHERE token = ?");
  q.bind(1, ip_text(s.client_ip))
      .bind(2, phase_name(s.phase))
      .bind(3, s.cursor())
      .bind(4, encode_answers(s.answers))
      .bind(5, s.result_id)
      .bind(6, s.token)
      .run();
  if (sqlite3_changes(store_.impl_->db) != 1) {
    fail(ErrorCode::UnknownToken, "session vanished during update");
  }
}

std::int64_t WriteTxn::insert_result(ResultRecord& r) {
  sqlite3* db = store_.impl_->db;
  Stmt q(db,
         "INSERT INTO results (teacher_id, bank_digest, completed_at, answers) "
         "VALUES (?, ?, ?, ?)");
  q.bind(1, r.teacher_id)
      .bind(2, r.bank_digest)
      .bind(3, static_cast<std::int64_t>(r.completed_at.time_since_epoch().count()))
      .bind(4, encode_answers(r.answers))
      .run();
  r.result_id = sqlite3_last_insert_rowid(db);
  return r.result_id;
}

std::optional<TeacherRecord> WriteTxn::teacher(const std::string& id) {
  Stmt q(store_.impl_->db,
         "SELECT id, full_name, photo, chair_id, faculty_id FROM teachers "
         "WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return read_teacher(q);
}

std::size_t WriteTxn::abort_active_sessions() {
  auto sessions = active_sessions();
  for (auto& s : sessions) {
    abort_session(s);
    update_session(s);
  }
  return sessions.size();
}

// --- Store ----------------------------------------------------------------

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::~Store() = default;

std::unique_ptr<Store> Store::open(const fs::path& data_dir,
                                   StoreOptions options) {
  std::error_code ec;
  fs::create_directories(data_dir / "photos", ec);
  if (ec) {
    fail(ErrorCode::StorageError,
         "cannot create data directory " + data_dir.string() + ": " + ec.message());
  }
  auto impl = std::make_unique<Impl>();
  impl->options = std::move(options);
  const fs::path lock_path = data_dir / "LOCK";
  impl->lock_fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (impl->lock_fd < 0) {
    fail(ErrorCode::StorageError, "cannot open " + lock_path.string());
  }
  if (flock(impl->lock_fd, LOCK_EX | LOCK_NB) != 0) {
    fail(ErrorCode::StoreLocked,
         "data directory " + data_dir.string() + " is in use by another process");
  }
  impl->photo_dir = data_dir / "photos";
  impl->open_db((data_dir / "evaluation.db").string());
  return std::unique_ptr<Store>(new Store(std::move(impl)));
}

std::unique_ptr<Store> Store::open_in_memory(StoreOptions options) {
  auto impl = std::make_unique<Impl>();
  impl->options = std::move(options);
  impl->open_db(":memory:");
  return std::unique_ptr<Store>(new Store(std::move(impl)));
}

WriteTxn Store::begin() { return WriteTxn(*this); }

std::string Store::put_teacher(const TeacherInput& input) {
  if (blank(input.full_name)) {
    fail(ErrorCode::ValidationError, "teacher name must not be empty");
  }
  if (!input.teacher_id.empty() && !valid_id(input.teacher_id)) {
    fail(ErrorCode::ValidationError,
         "teacher id may only use letters, digits, '-', '_' and '.'");
  }
  if (input.photo) check_photo(*input.photo);
  std::optional<std::string> photo;
  if (input.photo) {
    std::lock_guard lock(impl_->mutex);
    photo = impl_->put_photo(*input.photo);
  }

  return transact([&](WriteTxn& txn) {
    sqlite3* db = impl_->db;
    std::string id = input.teacher_id;
    if (id.empty()) {
      do {
        exec(db,
             "INSERT INTO counters (name, value) VALUES ('teacher', 1) "
             "ON CONFLICT(name) DO UPDATE SET value = value + 1;");
        Stmt c(db, "SELECT value FROM counters WHERE name = 'teacher'");
        c.step();
        id = "t" + std::to_string(c.i64(0));
      } while (txn.teacher(id));
    } else if (txn.teacher(id)) {
      fail(ErrorCode::AlreadyExists, "teacher " + id + " already exists");
    }
    Stmt q(db,
           "INSERT INTO teachers (id, full_name, photo, chair_id, faculty_id) "
           "VALUES (?, ?, ?, ?, ?)");
    q.bind(1, id)
        .bind(2, input.full_name)
        .bind(3, photo)
        .bind(4, input.chair_id)
        .bind(5, input.faculty_id)
        .run();
    return id;
  });
}

TeacherRecord Store::update_teacher(const std::string& id,
                                    const TeacherChanges& changes) {
  if (changes.full_name && blank(*changes.full_name)) {
    fail(ErrorCode::ValidationError, "teacher name must not be empty");
  }
  if (changes.photo) check_photo(*changes.photo);
  std::optional<std::string> new_photo;
  if (changes.photo) {
    std::lock_guard lock(impl_->mutex);
    new_photo = impl_->put_photo(*changes.photo);
  }

  std::optional<std::string> old_photo;
  TeacherRecord updated = transact([&](WriteTxn& txn) {
    auto t = txn.teacher(id);
    if (!t) fail(ErrorCode::NotFound, "no teacher " + id);
    old_photo = t->photo;
    if (changes.full_name) t->full_name = *changes.full_name;
    if (changes.chair_id) t->chair_id = *changes.chair_id;
    if (changes.faculty_id) t->faculty_id = *changes.faculty_id;
    if (changes.remove_photo) t->photo.reset();
    if (new_photo) t->photo = new_photo;
    Stmt q(impl_->db,
           "UPDATE teachers SET full_name = ?, photo = ?, chair_id = ?, "
           "faculty_id = ? WHERE id = ?");
    q.bind(1, t->full_name)
        .bind(2, t->photo)
        .bind(3, t->chair_id)
        .bind(4, t->faculty_id)
        .bind(5, id)
        .run();
    return *t;
  });
  if (old_photo && old_photo != updated.photo) {
    std::lock_guard lock(impl_->mutex);
    impl_->drop_photo_if_unused(*old_photo);
  }
  return updated;
}

void Store::delete_teacher(const std::string& id) {
  std::optional<std::string> photo = transact([&](WriteTxn& txn) {
    auto t = txn.teacher(id);
    if (!t) fail(ErrorCode::NotFound, "no teacher " + id);
    AppStateRecord s = txn.state();
    if (s.selected_teacher == id) {
      if (s.active) {
        fail(ErrorCode::TeacherInUse,
             "teacher " + id + " is being evaluated right now");
      }
      s.selected_teacher.reset();
      txn.save_state(s);
    }
    Stmt q(impl_->db, "DELETE FROM teachers WHERE id = ?");
    q.bind(1, id).run();
    Stmt k(impl_->db, "DELETE FROM access_keys WHERE teacher_id = ?");
    k.bind(1, id).run();
    return t->photo;
  });
  if (photo) {
    std::lock_guard lock(impl_->mutex);
    impl_->drop_photo_if_unused(*photo);
  }
}

std::optional<TeacherRecord> Store::find_teacher(const std::string& id) {
  return transact([&](WriteTxn& txn) { return txn.teacher(id); });
}

std::vector<TeacherRecord> Store::list_teachers() {
  return transact([&](WriteTxn&) {
    Stmt q(impl_->db,
           "SELECT id, full_name, photo, chair_id, faculty_id FROM teachers "
           "ORDER BY id");
    std::vector<TeacherRecord> out;
    while (q.step()) out.push_back(read_teacher(q));
    return out;
  });
}

std::optional<std::vector<std::uint8_t>> Store::teacher_photo(
    const std::string& id) {
  auto t = find_teacher(id);
  if (!t) fail(ErrorCode::NotFound, "no teacher " + id);
  if (!t->photo) return std::nullopt;
  std::lock_guard lock(impl_->mutex);
  return impl_->get_photo(*t->photo);
}

AppStateRecord Store::get_state() {
  return transact([](WriteTxn& txn) { return txn.state(); });
}

AppStateRecord Store::set_state(const StateChanges& changes) {
  return transact([&](WriteTxn& txn) {
    const AppStateRecord before = txn.state();
    AppStateRecord after = before;
    if (changes.active) after.active = *changes.active;
    if (changes.selected_teacher) after.selected_teacher = *changes.selected_teacher;
    if (changes.allowlist) {
      after.allowlist = {changes.allowlist->begin(), changes.allowlist->end()};
    }
    if (after.selected_teacher && !txn.teacher(*after.selected_teacher)) {
      fail(ErrorCode::UnknownTeacher, "no teacher " + *after.selected_teacher);
    }
    if (after.active && !after.selected_teacher) {
      fail(ErrorCode::NoTeacherSelected,
           "select the teacher to evaluate before activating");
    }
    if (before.active != after.active ||
        before.selected_teacher != after.selected_teacher) {
      txn.abort_active_sessions();
    }
    txn.save_state(after);
    return after;
  });
}

void Store::register_bank(const std::string& digest) {
  transact([&](WriteTxn& txn) {
    AppStateRecord s = txn.state();
    if (s.active && !s.bank_digest.empty() && s.bank_digest != digest) {
      fail(ErrorCode::BankMismatch,
           "the question bank cannot change while the evaluation is active");
    }
    Stmt q(impl_->db, "INSERT OR IGNORE INTO banks (digest) VALUES (?)");
    q.bind(1, digest).run();
    s.bank_digest = digest;
    txn.save_state(s);
  });
}

bool Store::bank_known(const std::string& digest) {
  return transact([&](WriteTxn&) {
    Stmt q(impl_->db, "SELECT 1 FROM banks WHERE digest = ?");
    q.bind(1, digest);
    return q.step();
  });
}

std::vector<ResultRecord> Store::list_results(
    const ViewerRole& role, const std::optional<std::string>& teacher_id) {
  std::optional<std::string> filter = teacher_id;
  if (role.kind == ViewerRole::Kind::Public) {
    fail(ErrorCode::AccessDenied,
         "questionnaires are only visible to the dean, the rector and the "
         "evaluated teacher");
  }
  if (role.kind == ViewerRole::Kind::EvaluatedTeacher) {
    if (filter && *filter != role.teacher_id) {
      fail(ErrorCode::AccessDenied, "a teacher may only view their own results");
    }
    filter = role.teacher_id;
  }
  return transact([&](WriteTxn&) {
    Stmt q(impl_->db,
           filter ? "SELECT result_id, teacher_id, bank_digest, completed_at, "
                    "answers FROM results WHERE teacher_id = ? ORDER BY result_id"
                  : "SELECT result_id, teacher_id, bank_digest, completed_at, "
                    "answers FROM results ORDER BY result_id");
    if (filter) q.bind(1, *filter);
    std::vector<ResultRecord> out;
    while (q.step()) out.push_back(read_result(q));
    return out;
  });
}

std::optional<ResultRecord> Store::find_result(std::int64_t result_id) {
  return transact([&](WriteTxn&) -> std::optional<ResultRecord> {
    Stmt q(impl_->db,
           "SELECT result_id, teacher_id, bank_digest, completed_at, answers "
           "FROM results WHERE result_id = ?");
    q.bind(1, result_id);
    if (!q.step()) return std::nullopt;
    return read_result(q);
  });
}

std::size_t Store::count_results(const std::string& teacher_id) {
  return transact([&](WriteTxn& txn) {
    if (!txn.teacher(teacher_id)) fail(ErrorCode::NotFound, "no teacher " + teacher_id);
    Stmt q(impl_->db, "SELECT COUNT(*) FROM results WHERE teacher_id = ?");
    q.bind(1, teacher_id).step();
    return static_cast<std::size_t>(q.i64(0));
  });
}

std::optional<EvaluationSession> Store::find_session(const std::string& token) {
  return transact([&](WriteTxn& txn) { return txn.session(token); });
}

void Store::init_admin(const std::string& username, const std::string& password,
                       bool force, EntropySource& entropy) {
  if (blank(username)) fail(ErrorCode::ValidationError, "empty admin username");
  if (password.empty()) fail(ErrorCode::ValidationError, "empty admin password");
  std::vector<std::uint8_t> salt(kSaltBytes);
  entropy.fill(salt);
  const PasswordHashParams& p = impl_->options.password_params;
  const auto digest = hash_password(password, salt, p);
  transact([&](WriteTxn&) {
    Stmt c(impl_->db, "SELECT COUNT(*) FROM admin");
    c.step();
    if (c.i64(0) != 0 && !force) {
      fail(ErrorCode::AlreadyExists,
           "an administrator already exists; use --force to replace it");
    }
    Stmt q(impl_->db,
           "INSERT OR REPLACE INTO admin (id, username, password_digest, salt, "
           "ops_limit, mem_limit) VALUES (1, ?, ?, ?, ?, ?)");
    q.bind(1, username)
        .bind(2, std::span<const std::uint8_t>(digest))
        .bind(3, std::span<const std::uint8_t>(salt))
        .bind(4, static_cast<std::int64_t>(p.ops_limit))
        .bind(5, static_cast<std::int64_t>(p.mem_limit))
        .run();
  });
}

bool Store::has_admin() {
  return transact([&](WriteTxn&) {
    Stmt c(impl_->db, "SELECT COUNT(*) FROM admin");
    c.step();
    return c.i64(0) != 0;
  });
}

bool Store::verify_admin(std::string_view username, std::string_view password) {
  struct Row {
    std::string username;
    std::vector<std::uint8_t> digest, salt;
    PasswordHashParams params;
  };
  std::optional<Row> row = transact([&](WriteTxn&) -> std::optional<Row> {
    Stmt q(impl_->db,
           "SELECT username, password_digest, salt, ops_limit, mem_limit "
           "FROM admin WHERE id = 1");
    if (!q.step()) return std::nullopt;
    return Row{q.text(0), q.blob(1), q.blob(2),
               {static_cast<std::uint64_t>(q.i64(3)),
                static_cast<std::size_t>(q.i64(4))}};
  });
  // Unknown users still pay for one full hash so the reply time does not
  // reveal whether the name exists.
  const std::vector<std::uint8_t> dummy_salt(kSaltBytes, 0);
  const auto& salt = row ? row->salt : dummy_salt;
  const auto& params = row ? row->params : impl_->options.password_params;
  const auto computed = hash_password(password, salt, params);

  const std::string expected_user = sha256_hex(row ? row->username : "");
  const std::string given_user = sha256_hex(username);
  const bool user_ok = constant_time_equal(
      std::span(reinterpret_cast<const std::uint8_t*>(expected_user.data()),
                expected_user.size()),
      std::span(reinterpret_cast<const std::uint8_t*>(given_user.data()),
                given_user.size()));
  const bool pass_ok =
      row && constant_time_equal(computed, row->digest);
  return row.has_value() & user_ok & pass_ok;
}

std::string Store::issue_access_key(const ViewerRole& role,
                                    EntropySource& entropy) {
  if (role.kind != ViewerRole::Kind::Dean &&
      role.kind != ViewerRole::Kind::Rector &&
      role.kind != ViewerRole::Kind::EvaluatedTeacher) {
    fail(ErrorCode::ValidationError,
         "access keys are issued for the dean, rector or evaluated teacher roles");
  }
  const std::string key = new_token(entropy);
  transact([&](WriteTxn& txn) {
    std::optional<std::string> teacher;
    if (role.kind == ViewerRole::Kind::EvaluatedTeacher) {
      if (!txn.teacher(role.teacher_id)) {
        fail(ErrorCode::NotFound, "no teacher " + role.teacher_id);
      }
      teacher = role.teacher_id;
    }
    Stmt q(impl_->db,
           "INSERT INTO access_keys (key_digest, role, teacher_id) VALUES (?, ?, ?)");
    q.bind(1, sha256_hex(key)).bind(2, to_string(role.kind)).bind(3, teacher).run();
  });
  return key;
}

std::optional<ViewerRole> Store::resolve_access_key(std::string_view key) {
  const std::string digest = sha256_hex(key);
  return transact([&](WriteTxn&) -> std::optional<ViewerRole> {
    Stmt q(impl_->db, "SELECT role, teacher_id FROM access_keys WHERE key_digest = ?");
    q.bind(1, digest);
    if (!q.step()) return std::nullopt;
    auto kind = parse_role_kind(q.text(0));
    if (!kind) return std::nullopt;
    return ViewerRole{*kind, q.opt_text(1).value_or("")};
  });
}

IntegrityReport Store::check_integrity() {
  return transact([&](WriteTxn&) {
    sqlite3* db = impl_->db;
    auto scalar = [db](const char* sql) {
      Stmt q(db, sql);
      q.step();
      return static_cast<std::size_t>(q.i64(0));
    };
    IntegrityReport r;
    r.results = scalar("SELECT COUNT(*) FROM results");
    r.completed_sessions =
        scalar("SELECT COUNT(*) FROM eval_sessions WHERE phase = 'completed'");
    r.orphan_results = scalar(
        "SELECT COUNT(*) FROM results r WHERE (SELECT COUNT(*) FROM "
        "eval_sessions s WHERE s.phase = 'completed' AND s.result_id = "
        "r.result_id) <> 1");
    r.completed_without_result = scalar(
        "SELECT COUNT(*) FROM eval_sessions s WHERE s.phase = 'completed' AND "
        "(s.result_id IS NULL OR NOT EXISTS (SELECT 1 FROM results r WHERE "
        "r.result_id = s.result_id))");
    r.unknown_bank_results = scalar(
        "SELECT COUNT(*) FROM results r WHERE NOT EXISTS (SELECT 1 FROM banks "
        "b WHERE b.digest = r.bank_digest)");
    return r;
  });
}

}  // namespace evalsys
