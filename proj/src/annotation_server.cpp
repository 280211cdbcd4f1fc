#include "pjudge/annotation_server.h"

#include <httplib.h>

namespace pjudge {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, std::string_view kind,
                const std::string& message) {
  send(res, status, json{{"error", kind}, {"message", message}});
}

int status_for(AnnotationErrorKind kind) {
  switch (kind) {
    case AnnotationErrorKind::UnknownAnnotator: return 404;
    case AnnotationErrorKind::NotAssigned: return 403;
    case AnnotationErrorKind::ConflictingResubmission: return 409;
    case AnnotationErrorKind::StudyFull: return 409;
    case AnnotationErrorKind::InvalidChoice: return 400;
    case AnnotationErrorKind::InvalidCertainty: return 400;
  }
  return 500;
}

/// Runs a handler, mapping exceptions onto error responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const AnnotationError& e) {
    send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

/// Integer field that must not be fractional or a string.
int integer_field(const json& body, const char* key) {
  const auto& v = body.at(key);
  if (!v.is_number_integer()) {
    throw AnnotationError(std::string_view(key) == "choice" ? AnnotationErrorKind::InvalidChoice
                                                            : AnnotationErrorKind::InvalidCertainty,
                          std::string(key) + " must be an integer");
  }
  const auto n = v.get<long long>();
  if (n < -1000000 || n > 1000000) {
    throw AnnotationError(std::string_view(key) == "choice" ? AnnotationErrorKind::InvalidChoice
                                                            : AnnotationErrorKind::InvalidCertainty,
                          std::string(key) + " is out of range");
  }
  return static_cast<int>(n);
}

}  // namespace

json to_json(const AnnotationRecord& r) {
  return json{{"task_id", r.task_id},
              {"annotator_id", r.annotator_id},
              {"choice", to_string(r.choice)},
              {"certainty", r.certainty},
              {"timestamp_ms", r.timestamp_ms}};
}

AnnotationRecord annotation_record_from_json(const json& j) {
  try {
    return AnnotationRecord{j.at("task_id").get<std::string>(),
                            j.at("annotator_id").get<std::string>(),
                            parse_choice(j.at("choice").get<std::string>()),
                            j.at("certainty").get<int>(), j.value("timestamp_ms", std::int64_t{0})};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed annotation record: ") + e.what());
  }
}

json to_json(const StudyStats& s) {
  return json{{"tasks", s.tasks},
              {"annotator_slots", s.annotator_slots},
              {"registered", s.registered},
              {"judgments_expected", s.judgments_expected},
              {"judgments_done", s.judgments_done},
              {"tasks_fully_annotated", s.tasks_fully_annotated}};
}

void install_annotation_routes(httplib::Server& server, AnnotationService& service) {
  server.Post("/annotators", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::map<std::string, std::string> attributes;
      if (!req.body.empty()) {
        const auto body = json::parse(req.body);
        if (body.contains("attributes")) {
          for (const auto& [k, v] : body.at("attributes").items()) {
            attributes[k] = v.get<std::string>();
          }
        }
      }
      send(res, 201, json{{"annotator_id", service.register_annotator(std::move(attributes))}});
    });
  });

  server.Get(R"(/assignments/([A-Za-z0-9_\-]+))",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { send(res, 200, service.next_task_payload(req.matches[1])); });
             });

  server.Post("/annotations", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto status = service.submit(body.at("annotator_id").get<std::string>(),
                                         body.at("task_id").get<std::string>(),
                                         integer_field(body, "choice"),
                                         integer_field(body, "certainty"));
      if (status == SubmitStatus::Stored) {
        send(res, 201, json{{"status", "stored"}});
      } else {
        send(res, 200, json{{"status", "duplicate"}});
      }
    });
  });

  server.Get("/export", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const auto exported = service.export_annotations();
      json records = json::array();
      for (const auto& r : exported.records) records.push_back(to_json(r));
      send(res, 200, json{{"complete", exported.complete}, {"records", records}});
    });
  });

  server.Get("/stats", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, to_json(service.stats())); });
  });
}

}  // namespace pjudge
