#include "evalsys/api_service.hpp"

#include <sodium.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evalsys/aggregation.hpp"
#include "evalsys/json_io.hpp"
#include "evalsys/ops.hpp"

namespace evalsys {

using nlohmann::json;

ApiErrorInfo api_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return {"bad_request", 400};
    case ErrorCode::ValidationError: return {"validation_failed", 422};
    case ErrorCode::IndexOutOfRange: return {"index_out_of_range", 422};
    case ErrorCode::IncompleteAnswers: return {"incomplete_answers", 409};
    case ErrorCode::OutOfRange: return {"out_of_range", 422};
    case ErrorCode::InvalidValue: return {"invalid_value", 422};
    case ErrorCode::EvaluationInactive: return {"evaluation_inactive", 409};
    case ErrorCode::IpNotAllowed: return {"ip_not_allowed", 403};
    case ErrorCode::SessionAlreadyActiveForIp: return {"session_active_for_ip", 409};
    case ErrorCode::SessionNotActive: return {"session_not_active", 409};
    case ErrorCode::BankMismatch: return {"bank_mismatch", 409};
    case ErrorCode::OutOfOrder: return {"out_of_order", 409};
    case ErrorCode::UnknownToken: return {"unknown_token", 404};
    case ErrorCode::NotFound: return {"not_found", 404};
    case ErrorCode::TeacherInUse: return {"teacher_in_use", 409};
    case ErrorCode::InvalidPhoto: return {"invalid_photo", 422};
    case ErrorCode::NoTeacherSelected: return {"no_teacher_selected", 409};
    case ErrorCode::UnknownTeacher: return {"unknown_teacher", 422};
    case ErrorCode::AccessDenied: return {"access_denied", 403};
    case ErrorCode::Unauthenticated: return {"unauthenticated", 401};
    case ErrorCode::UnknownUnit: return {"unknown_unit", 404};
    case ErrorCode::AlreadyExists: return {"already_exists", 409};
    case ErrorCode::OrgConflict: return {"org_conflict", 409};
    case ErrorCode::StoreLocked: return {"store_locked", 503};
    case ErrorCode::StorageError: return {"storage_error", 500};
  }
  return {"internal_error", 500};
}

namespace {

constexpr const char* kTokenPattern = "([^/]{1,256})";
constexpr const char* kIdPattern = "([A-Za-z0-9._-]{1,64})";

std::string route(const std::string& prefix, const char* pattern,
                  const std::string& suffix = "") {
  return prefix + pattern + suffix;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  const ApiErrorInfo info = api_error(code);
  if (code == ErrorCode::Unauthenticated) {
    res.set_header("WWW-Authenticate", "Basic realm=\"evaluation admin\"");
  }
  send_json(res, {{"error", {{"code", info.code}, {"message", message}}}},
            info.http_status);
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body.empty() ? "{}" : req.body);
  } catch (const json::parse_error&) {
    fail(ErrorCode::ParseError, "request body is not valid JSON");
  }
}

std::optional<std::string> decode_base64(std::string_view in) {
  std::string out(in.size(), '\0');
  std::size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(),
                        in.data(), in.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    return std::nullopt;
  }
  out.resize(len);
  return out;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return {s.begin(), s.end()};
}

bool truthy(const std::string& v) {
  return v == "1" || v == "true" || v == "on" || v == "yes";
}

}  // namespace

struct ApiService::Handlers {
  ApiService& api;

  // Runs a handler body, mapping every failure onto the ApiError table.
  template <class F>
  auto wrap(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::ParseError, e.what());
      }
    };
  }

  IpAddress client_ip(const httplib::Request& req) const {
    std::string source = req.remote_addr;
    if (api.config_.trust_proxy && req.has_header("X-Forwarded-For")) {
      source = req.get_header_value("X-Forwarded-For");
      source = source.substr(0, source.find(','));
      source.erase(0, source.find_first_not_of(' '));
      source.erase(source.find_last_not_of(' ') + 1);
    }
    auto ip = IpAddress::parse(source);
    if (!ip) fail(ErrorCode::ParseError, "cannot determine the client address");
    return *ip;
  }

  // Empty when the request carries no credentials at all.
  std::optional<ViewerRole> principal(const httplib::Request& req) const {
    if (!req.has_header("Authorization")) return std::nullopt;
    const std::string h = req.get_header_value("Authorization");
    if (h.rfind("Basic ", 0) == 0) {
      auto decoded = decode_base64(h.substr(6));
      const auto colon = decoded ? decoded->find(':') : std::string::npos;
      if (colon == std::string::npos ||
          !api.store_.verify_admin(decoded->substr(0, colon),
                                   decoded->substr(colon + 1))) {
        fail(ErrorCode::Unauthenticated, "invalid administrator credentials");
      }
      return ViewerRole::admin();
    }
    if (h.rfind("Bearer ", 0) == 0) {
      auto role = api.store_.resolve_access_key(h.substr(7));
      if (!role) fail(ErrorCode::Unauthenticated, "unknown access key");
      return role;
    }
    fail(ErrorCode::Unauthenticated, "unsupported authorization scheme");
  }

  ViewerRole require_principal(const httplib::Request& req) const {
    auto p = principal(req);
    if (!p) fail(ErrorCode::Unauthenticated, "authentication required");
    return *p;
  }

  void require_admin(const httplib::Request& req) const {
    if (require_principal(req).kind != ViewerRole::Kind::Admin) {
      fail(ErrorCode::AccessDenied, "administrator access required");
    }
  }

  Timestamp now() const { return api.clock_(); }

  json question(int index, const QuestionItem& item) const {
    return json_io::question_json(index, item, api.bank_);
  }

  // --- student flow ---

  void start_session(const httplib::Request& req, httplib::Response& res) {
    EvaluationSession s = api.engine_.start(client_ip(req), now());
    const QuestionItem& first = api.bank_.item_at(1);
    send_json(res, {{"token", s.token}, {"question", question(1, first)}});
  }

  void get_question(const httplib::Request& req, httplib::Response& res) {
    auto [index, item] = api.engine_.current_question(req.matches[1], now());
    send_json(res, question(index, item));
  }

  void post_answer(const httplib::Request& req, httplib::Response& res) {
    const std::string token = req.matches[1];
    const json body = parse_body(req);
    if (!body.contains("index") || !body["index"].is_number_integer()) {
      fail(ErrorCode::ParseError, "body needs an integer \"index\"");
    }
    if (!body.contains("value") || !body["value"].is_number_integer()) {
      fail(ErrorCode::InvalidValue, "\"value\" must be an integer in 1..5");
    }
    SubmitOutcome out = api.engine_.submit(token, body["index"].get<int>(),
                                           body["value"].get<int>(), now());
    if (!out.finished) {
      const QuestionItem& next = api.bank_.item_at(out.next_index);
      send_json(res, {{"next", question(out.next_index, next)}});
      return;
    }
    send_json(res, {{"finished", true},
                    {"result_id", out.result_id ? json(*out.result_id) : json(nullptr)},
                    {"answers_url", "/api/results/own/" + token}});
  }

  void own_results(const httplib::Request& req, httplib::Response& res) {
    auto s = api.store_.find_session(req.matches[1]);
    if (!s) fail(ErrorCode::UnknownToken, "unknown session token");
    if (!s->is_completed() || !s->result_id) {
      fail(ErrorCode::SessionNotActive, "the questionnaire is not finished");
    }
    auto r = api.store_.find_result(*s->result_id);
    if (!r) fail(ErrorCode::NotFound, "result not found");
    if (r->bank_digest != api.bank_.digest()) {
      fail(ErrorCode::BankMismatch, "questionnaire used a retired question bank");
    }
    auto teacher = api.store_.find_teacher(r->teacher_id);

    json direct = json::array();
    json reverse = json::array();
    for (std::size_t i = 0; i < api.bank_.size(); ++i) {
      const QuestionItem& item = api.bank_.items()[i];
      const ResponseValue raw = r->answers[i];
      const int score = score_item(item.polarity, raw).value();
      const std::string& label =
          api.bank_.scale_labels()[static_cast<std::size_t>(raw.value() - 1)];
      json& group = item.polarity == Polarity::Direct ? direct : reverse;
      group.push_back({{"number", group.size() + 1},
                       {"index", item.index},
                       {"response", raw.value()},
                       {"score", score},
                       {"label", label},
                       {"display", std::to_string(score) + " - " + label},
                       {"text", item.text}});
    }
    send_json(res, {{"result_id", r->result_id},
                    {"teacher",
                     {{"id", r->teacher_id},
                      {"full_name", teacher ? json(teacher->full_name) : json(nullptr)}}},
                    {"completed_at", format_utc(r->completed_at)},
                    {"direct", direct},
                    {"reverse", reverse},
                    {"report", json_io::to_json(questionnaire_report(r->answers, api.bank_))}});
  }

  // --- public aggregate views ---

  void stats(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!api.store_.find_teacher(id)) fail(ErrorCode::NotFound, "no teacher " + id);
    const auto results = api.store_.list_results(ViewerRole::admin(), id);
    json dists = json::array();
    for (int i = 1; i <= static_cast<int>(api.bank_.size()); ++i) {
      dists.push_back(json_io::to_json(item_distribution(results, api.bank_, i)));
    }
    send_json(res, {{"teacher_id", id},
                    {"count", api.store_.count_results(id)},
                    {"per_item_distributions", dists},
                    {"unit_report", json_io::to_json(teacher_report(id, results, api.bank_))}});
  }

  void list_teachers_public(const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& t : api.store_.list_teachers()) {
      out.push_back({{"id", t.teacher_id},
                     {"full_name", t.full_name},
                     {"has_photo", t.photo.has_value()}});
    }
    send_json(res, out);
  }

  void teacher_photo(const httplib::Request& req, httplib::Response& res) {
    auto photo = api.store_.teacher_photo(req.matches[1]);
    if (!photo) fail(ErrorCode::NotFound, "teacher has no photo");
    res.set_content(reinterpret_cast<const char*>(photo->data()), photo->size(),
                    "image/jpeg");
  }

  // --- privileged results ---

  void results(const httplib::Request& req, httplib::Response& res,
               bool require_auth) {
    auto role = require_auth ? require_principal(req)
                             : principal(req).value_or(ViewerRole::anyone());
    std::optional<std::string> teacher;
    if (req.has_param("teacher")) teacher = req.get_param_value("teacher");
    json out = json::array();
    for (const auto& r : api.store_.list_results(role, teacher)) {
      out.push_back(json_io::to_json(r));
    }
    send_json(res, {{"results", out}});
  }

  void report(const httplib::Request& req, httplib::Response& res) {
    const ViewerRole role = require_principal(req);
    const auto kind = parse_scope_kind(req.get_param_value("scope"));
    if (!kind) {
      fail(ErrorCode::ParseError, "scope must be teacher, chair, faculty or university");
    }
    Scope scope{*kind, req.get_param_value("id")};
    if (role.kind == ViewerRole::Kind::EvaluatedTeacher &&
        !(scope.kind == Scope::Kind::Teacher && scope.id == role.teacher_id)) {
      fail(ErrorCode::AccessDenied, "a teacher may only view their own report");
    }
    const auto all = api.store_.list_results(ViewerRole::admin());
    if (scope.kind == Scope::Kind::Teacher) {
      if (!api.store_.find_teacher(scope.id)) {
        fail(ErrorCode::NotFound, "no teacher " + scope.id);
      }
      std::vector<ResultRecord> mine;
      for (const auto& r : all) {
        if (r.teacher_id == scope.id) mine.push_back(r);
      }
      send_json(res, json_io::to_json(teacher_report(scope.id, mine, api.bank_)));
      return;
    }
    const auto teachers = api.store_.list_teachers();
    const OrgMap org = OrgMap::from_teachers(teachers);
    send_json(res, json_io::to_json(unit_report(scope, org, all, api.bank_)));
  }

  // --- admin control plane ---

  void get_state(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    send_json(res, json_io::to_json(api.store_.get_state()));
  }

  void put_state(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const json body = parse_body(req);
    StateChanges changes;
    if (body.contains("active")) changes.active = body["active"].get<bool>();
    if (body.contains("selected_teacher")) {
      const json& t = body["selected_teacher"];
      changes.selected_teacher =
          t.is_null() ? std::optional<std::string>() : t.get<std::string>();
    }
    if (body.contains("allowlist")) {
      std::vector<IpAddress> ips;
      for (const json& v : body["allowlist"]) {
        auto ip = IpAddress::parse(v.get<std::string>());
        if (!ip) {
          fail(ErrorCode::ValidationError, "not an IP address: " + v.get<std::string>());
        }
        ips.push_back(*ip);
      }
      changes.allowlist = std::move(ips);
    }
    send_json(res, json_io::to_json(api.store_.set_state(changes)));
  }

  void admin_list_teachers(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    json out = json::array();
    for (const auto& t : api.store_.list_teachers()) out.push_back(json_io::to_json(t));
    send_json(res, out);
  }

  // Reads one text field from either a multipart form or a JSON body.
  static std::optional<std::string> field(const httplib::Request& req,
                                          const json& body, const char* name) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file(name)) return std::nullopt;
      return req.get_file_value(name).content;
    }
    if (!body.contains(name) || body[name].is_null()) return std::nullopt;
    return body[name].get<std::string>();
  }

  static std::optional<std::vector<std::uint8_t>> photo(const httplib::Request& req) {
    if (!req.is_multipart_form_data() || !req.has_file("photo")) return std::nullopt;
    const auto& file = req.get_file_value("photo");
    if (file.content.empty() && file.filename.empty()) return std::nullopt;
    return bytes_of(file.content);
  }

  void create_teacher(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const json body = req.is_multipart_form_data() ? json::object() : parse_body(req);
    TeacherInput in;
    in.teacher_id = field(req, body, "id").value_or("");
    in.full_name = field(req, body, "full_name").value_or("");
    in.chair_id = field(req, body, "chair_id").value_or("");
    in.faculty_id = field(req, body, "faculty_id").value_or("");
    in.photo = photo(req);
    check_org(in.teacher_id, in.chair_id, in.faculty_id);
    const std::string id = api.store_.put_teacher(in);
    send_json(res, json_io::to_json(*api.store_.find_teacher(id)), 201);
  }

  void update_teacher(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const std::string id = req.matches[1];
    const json body = req.is_multipart_form_data() ? json::object() : parse_body(req);
    if (auto del = field(req, body, "delete_profile"); del && truthy(*del)) {
      api.store_.delete_teacher(id);
      send_json(res, {{"deleted", id}});
      return;
    }
    TeacherChanges ch;
    ch.full_name = field(req, body, "full_name");
    ch.chair_id = field(req, body, "chair_id");
    ch.faculty_id = field(req, body, "faculty_id");
    ch.photo = photo(req);
    if (auto rm = field(req, body, "remove_photo"); rm && truthy(*rm)) ch.remove_photo = true;
    if (ch.chair_id || ch.faculty_id) {
      auto current = api.store_.find_teacher(id);
      if (!current) fail(ErrorCode::NotFound, "no teacher " + id);
      check_org(id, ch.chair_id.value_or(current->chair_id),
                ch.faculty_id.value_or(current->faculty_id));
    }
    send_json(res, json_io::to_json(api.store_.update_teacher(id, ch)));
  }

  void delete_teacher(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    api.store_.delete_teacher(req.matches[1]);
    send_json(res, {{"deleted", std::string(req.matches[1])}});
  }

  // A chair must keep a single faculty across all teachers.
  void check_org(const std::string& teacher, const std::string& chair,
                 const std::string& faculty) const {
    if (chair.empty()) return;
    auto teachers = api.store_.list_teachers();
    std::erase_if(teachers, [&](const TeacherRecord& t) { return t.teacher_id == teacher; });
    OrgMap org = OrgMap::from_teachers(teachers);
    org.assign(teacher.empty() ? std::string("\x01new") : teacher, chair, faculty);
  }

  void issue_key(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const json body = parse_body(req);
    auto kind = parse_role_kind(body.value("role", std::string()));
    if (!kind) fail(ErrorCode::ValidationError, "role must be dean, rector or teacher");
    ViewerRole role{*kind, body.value("teacher_id", std::string())};
    const std::string key = api.store_.issue_access_key(role, api.entropy_);
    send_json(res, {{"key", key}, {"role", to_string(role.kind)}}, 201);
  }

  void get_orgmap(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const auto teachers = api.store_.list_teachers();
    res.set_content(OrgMap::from_teachers(teachers).dump(), "application/json");
  }

  void put_orgmap(const httplib::Request& req, httplib::Response& res) {
    require_admin(req);
    const OrgMap org = OrgMap::parse(req.body);
    apply_org_map(api.store_, org);
    const auto teachers = api.store_.list_teachers();
    res.set_content(OrgMap::from_teachers(teachers).dump(), "application/json");
  }
};

ApiService::ApiService(Store& store, const QuestionBank& bank,
                       EntropySource& entropy, ServiceConfig config, Clock clock)
    : store_(store),
      bank_(bank),
      entropy_(entropy),
      config_(std::move(config)),
      clock_(std::move(clock)),
      engine_(store, bank, entropy, config_.session_ttl) {
  store_.register_bank(bank_.digest());
}

ApiService::~ApiService() = default;

void ApiService::register_routes(httplib::Server& server) {
  // The handlers refer back to this service, which must outlive the server.
  auto h = std::make_shared<Handlers>(Handlers{*this});
  const std::string session = "/api/session/";
  const std::string teachers = "/api/admin/teachers/";

  auto bind = [h](auto method) {
    return h->wrap([h, method](const httplib::Request& req, httplib::Response& res) {
      ((*h).*method)(req, res);
    });
  };

  server.Post("/api/session", bind(&Handlers::start_session));
  server.Get(route(session, kTokenPattern, "/question"), bind(&Handlers::get_question));
  server.Post(route(session, kTokenPattern, "/answer"), bind(&Handlers::post_answer));
  server.Get(route("/api/results/own/", kTokenPattern), bind(&Handlers::own_results));
  server.Get(route("/api/results/own/", "(.*)"),
             h->wrap([](const httplib::Request&, httplib::Response&) {
               fail(ErrorCode::UnknownToken, "unknown session token");
             }));
  server.Get(route("/api/stats/", kIdPattern), bind(&Handlers::stats));
  server.Get("/api/teachers", bind(&Handlers::list_teachers_public));
  server.Get(route("/api/teachers/", kIdPattern, "/photo"), bind(&Handlers::teacher_photo));
  server.Get("/api/results",
             h->wrap([h](const httplib::Request& req, httplib::Response& res) {
               h->results(req, res, false);
             }));

  server.Get("/api/admin/state", bind(&Handlers::get_state));
  server.Put("/api/admin/state", bind(&Handlers::put_state));
  server.Get("/api/admin/teachers", bind(&Handlers::admin_list_teachers));
  server.Post("/api/admin/teachers", bind(&Handlers::create_teacher));
  server.Put(route(teachers, kIdPattern), bind(&Handlers::update_teacher));
  server.Delete(route(teachers, kIdPattern), bind(&Handlers::delete_teacher));
  server.Get("/api/admin/report", bind(&Handlers::report));
  server.Get("/api/admin/results",
             h->wrap([h](const httplib::Request& req, httplib::Response& res) {
               h->results(req, res, true);
             }));
  server.Post("/api/admin/keys", bind(&Handlers::issue_key));
  server.Get("/api/admin/orgmap", bind(&Handlers::get_orgmap));
  server.Put("/api/admin/orgmap", bind(&Handlers::put_orgmap));

  if (!config_.ui_dir.empty()) server.set_mount_point("/", config_.ui_dir);

  // Unmatched API paths still answer with the JSON error shape.
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty() && req.path.rfind("/api/", 0) == 0) {
      send_error(res, ErrorCode::NotFound, "no such endpoint");
    }
  });

  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          send_json(res, {{"error", {{"code", "internal_error"}, {"message", e.what()}}}},
                    500);
        } catch (...) {
          send_json(res, {{"error", {{"code", "internal_error"}, {"message", "unknown"}}}},
                    500);
        }
      });
}

// --- HttpServer -------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(ApiService& api) : impl_(std::make_unique<Impl>()) {
  impl_->server.set_payload_max_length(kMaxPhotoBytes + 64 * 1024);
  api.register_routes(impl_->server);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace evalsys
