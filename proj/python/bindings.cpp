// Python bindings for the core operations. Reports cross the boundary as
// JSON text and are decoded by the evalsys package.

#include <pybind11/chrono.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <httplib.h>

#include "evalsys/aggregation.hpp"
#include "evalsys/api_service.hpp"
#include "evalsys/error.hpp"
#include "evalsys/json_io.hpp"
#include "evalsys/ops.hpp"
#include "evalsys/question_bank.hpp"
#include "evalsys/scoring.hpp"
#include "evalsys/session_engine.hpp"
#include "evalsys/store.hpp"

namespace py = pybind11;
using namespace evalsys;

namespace {

std::vector<ResponseValue> to_responses(const std::vector<int>& raw) {
  std::vector<ResponseValue> out;
  out.reserve(raw.size());
  for (int v : raw) out.emplace_back(v);
  return out;
}

Timestamp to_ts(std::optional<std::string> text) {
  if (!text) return now_utc();
  auto t = parse_utc(*text);
  if (!t) fail(ErrorCode::ParseError, "timestamps look like 2026-06-26T22:34:00Z");
  return *t;
}

std::string state_json(Store& s) { return json_io::to_json(s.get_state()).dump(); }

ViewerRole role_from(const std::string& kind, const std::string& teacher) {
  auto k = parse_role_kind(kind);
  if (!k) fail(ErrorCode::ValidationError, "unknown role " + kind);
  return ViewerRole{*k, teacher};
}

// Store plus the bank and entropy its engine refers to.
struct Service {
  std::unique_ptr<Store> store;
  QuestionBank bank;
  SystemEntropy entropy;
  std::unique_ptr<SessionEngine> engine;

  Service(std::unique_ptr<Store> s, QuestionBank b, int ttl_seconds)
      : store(std::move(s)), bank(std::move(b)) {
    store->register_bank(bank.digest());
    engine = std::make_unique<SessionEngine>(*store, bank, entropy,
                                             std::chrono::seconds(ttl_seconds));
  }
};

// A live HTTP server over a Service, for driving the API from Python.
struct Server {
  Service& svc;
  ApiService api;
  HttpServer http;
  int port;

  Server(Service& s, const std::string& host, int p)
      : svc(s), api(*s.store, s.bank, s.entropy), http(api), port(http.bind(host, p)) {
    http.start();
  }
  ~Server() { http.stop(); }
};

}  // namespace

PYBIND11_MODULE(_evalsys, m) {
  m.doc() = "Teaching-staff evaluation core";

  static py::exception<Error> py_error(m, "EvalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py_error;
      py::object inst = exc(e.what());
      inst.attr("code") = std::string(api_error(e.code()).code);
      PyErr_SetObject(py_error.ptr(), inst.ptr());
    }
  });

  // Question bank.
  py::class_<QuestionBank>(m, "QuestionBank")
      .def_property_readonly("size", &QuestionBank::size)
      .def_property_readonly("digest", &QuestionBank::digest)
      .def_property_readonly("scale_labels", &QuestionBank::scale_labels)
      .def("to_json", [](const QuestionBank& b) { return dump_bank(b); })
      .def("count", [](const QuestionBank& b, const std::string& c) {
        auto comp = parse_competence(c);
        if (!comp) fail(ErrorCode::ValidationError, "unknown competence " + c);
        return b.count(*comp);
      });
  m.def("default_bank", [] { return default_bank(); });
  m.def("load_bank", [](const std::string& text) { return load_bank(text); });
  m.def("load_bank_file", &load_bank_file);

  // Scoring.
  m.def("score_item", [](const std::string& polarity, int response) {
    auto p = parse_polarity(polarity);
    if (!p) fail(ErrorCode::ValidationError, "polarity is direct or reverse");
    return score_item(*p, ResponseValue(response)).value();
  });
  m.def("mark_from_mean", [](double mean) {
    return std::string(to_string(mark_from_mean(mean)));
  });
  m.def("_questionnaire_report", [](const std::vector<int>& answers, const QuestionBank& bank) {
    return json_io::to_json(questionnaire_report(to_responses(answers), bank)).dump();
  });

  // Store, sessions, aggregation.
  py::class_<Service>(m, "Service")
      .def_static(
          "open",
          [](const std::string& data_dir, const QuestionBank& bank, int ttl) {
            return std::make_unique<Service>(Store::open(data_dir), bank, ttl);
          },
          py::arg("data_dir"), py::arg("bank"), py::arg("session_ttl_seconds") = 7200)
      .def_static(
          "in_memory",
          [](const QuestionBank& bank, int ttl) {
            StoreOptions o;
            o.password_params = PasswordHashParams::minimal();
            return std::make_unique<Service>(Store::open_in_memory(o), bank, ttl);
          },
          py::arg("bank"), py::arg("session_ttl_seconds") = 7200)
      .def("put_teacher",
           [](Service& s, const std::string& id, const std::string& name,
              const std::string& chair, const std::string& faculty) {
             return s.store->put_teacher({id, name, chair, faculty, std::nullopt});
           },
           py::arg("teacher_id"), py::arg("full_name"), py::arg("chair_id") = "",
           py::arg("faculty_id") = "")
      .def("_teachers", [](Service& s) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& t : s.store->list_teachers()) out.push_back(json_io::to_json(t));
        return out.dump();
      })
      .def("_set_state",
           [](Service& s, std::optional<bool> active, std::optional<std::string> teacher,
              std::optional<std::vector<std::string>> allowlist) {
             StateChanges c;
             c.active = active;
             if (teacher) c.selected_teacher = std::optional<std::string>(*teacher);
             if (allowlist) {
               std::vector<IpAddress> ips;
               for (const auto& a : *allowlist) {
                 auto ip = IpAddress::parse(a);
                 if (!ip) fail(ErrorCode::ValidationError, "not an IP address: " + a);
                 ips.push_back(*ip);
               }
               c.allowlist = std::move(ips);
             }
             s.store->set_state(c);
             return state_json(*s.store);
           },
           py::arg("active") = py::none(), py::arg("selected_teacher") = py::none(),
           py::arg("allowlist") = py::none())
      .def("_state", [](Service& s) { return state_json(*s.store); })
      .def("init_admin",
           [](Service& s, const std::string& u, const std::string& p, bool force) {
             s.store->init_admin(u, p, force, s.entropy);
           },
           py::arg("username"), py::arg("password"), py::arg("force") = false)
      .def("verify_admin", [](Service& s, const std::string& u, const std::string& p) {
        return s.store->verify_admin(u, p);
      })
      .def("issue_access_key",
           [](Service& s, const std::string& role, const std::string& teacher) {
             return s.store->issue_access_key(role_from(role, teacher), s.entropy);
           },
           py::arg("role"), py::arg("teacher_id") = "")
      .def("start_session",
           [](Service& s, const std::string& ip, std::optional<std::string> at) {
             auto addr = IpAddress::parse(ip);
             if (!addr) fail(ErrorCode::ValidationError, "not an IP address: " + ip);
             return s.engine->start(*addr, to_ts(at)).token;
           },
           py::arg("client_ip"), py::arg("at") = py::none())
      .def("_current_question",
           [](Service& s, const std::string& token, std::optional<std::string> at) {
             auto [index, item] = s.engine->current_question(token, to_ts(at));
             return json_io::question_json(index, item, s.bank).dump();
           },
           py::arg("token"), py::arg("at") = py::none())
      .def("submit",
           [](Service& s, const std::string& token, int index, int value,
              std::optional<std::string> at) {
             const SubmitOutcome o = s.engine->submit(token, index, value, to_ts(at));
             py::dict d;
             d["finished"] = o.finished;
             d["next_index"] = o.next_index;
             d["result_id"] = o.result_id ? py::cast(*o.result_id) : py::none();
             return d;
           },
           py::arg("token"), py::arg("index"), py::arg("value"), py::arg("at") = py::none())
      .def("recover", [](Service& s) { return s.engine->recover(now_utc()); })
      .def("count_results", [](Service& s, const std::string& t) {
        return s.store->count_results(t);
      })
      .def("_results",
           [](Service& s, const std::string& role, const std::string& teacher) {
             nlohmann::json out = nlohmann::json::array();
             for (const auto& r : s.store->list_results(role_from(role, teacher))) {
               out.push_back(json_io::to_json(r));
             }
             return out.dump();
           },
           py::arg("role"), py::arg("teacher_id") = "")
      .def("_unit_report",
           [](Service& s, const std::string& kind, const std::string& id) {
             auto k = parse_scope_kind(kind);
             if (!k) fail(ErrorCode::ValidationError, "unknown scope " + kind);
             const auto teachers = s.store->list_teachers();
             const auto results = s.store->list_results(ViewerRole::admin());
             return json_io::to_json(
                        unit_report(Scope{*k, id}, OrgMap::from_teachers(teachers), results,
                                    s.bank))
                 .dump();
           },
           py::arg("scope"), py::arg("unit_id") = "")
      .def("export",
           [](Service& s, const std::string& fmt, const std::string& role,
              const std::string& teacher) {
             return export_results(*s.store, role_from(role, teacher),
                                   fmt == "json" ? ExportFormat::Json : ExportFormat::Csv,
                                   s.bank.size());
           },
           py::arg("format") = "csv", py::arg("role") = "rector", py::arg("teacher_id") = "")
      .def("seed_demo", [](Service& s) { seed_demo(*s.store); })
      .def("_integrity", [](Service& s) {
        const IntegrityReport r = s.store->check_integrity();
        py::dict d;
        d["results"] = r.results;
        d["completed_sessions"] = r.completed_sessions;
        d["orphan_results"] = r.orphan_results;
        d["completed_without_result"] = r.completed_without_result;
        d["unknown_bank_results"] = r.unknown_bank_results;
        d["ok"] = r.ok();
        return d;
      });

  py::class_<Server>(m, "Server")
      .def(py::init<Service&, const std::string&, int>(), py::arg("service"),
           py::arg("host") = "127.0.0.1", py::arg("port") = 0, py::keep_alive<1, 2>())
      .def_readonly("port", &Server::port)
      .def("stop", [](Server& s) { s.http.stop(); });

  m.def(
      "_simulate",
      [](std::uint64_t seed, int cohort, const std::string& model, const std::string& host,
         int port) {
        py::gil_scoped_release release;
        return simulate({seed, cohort, AnswerModel::parse(model)}, host, port).to_json_text();
      },
      py::arg("seed"), py::arg("cohort"), py::arg("model"), py::arg("host"), py::arg("port"));
}
