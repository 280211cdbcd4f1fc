#pragma once

#include "pjudge/annotation.h"

namespace httplib {
class Server;
}

namespace pjudge {

/// Installs the annotation API on an httplib server (plain or TLS):
///
///   POST /annotators               {"attributes": {...}}?  -> 201 {"annotator_id"}
///   GET  /assignments/{id}         next task payload or {"done": true, ...}
///   POST /annotations              {"annotator_id", "task_id", "choice": 1|2,
///                                   "certainty": 1-100}
///                                  -> 201 stored, 200 duplicate
///   GET  /export                   {"complete", "records": [...]}
///   GET  /stats                    completion counts
///
/// Errors are {"error": kind, "message": text} with 400 (invalid payload),
/// 403 (task not assigned), 404 (unknown annotator) or 409 (conflicting
/// resubmission, study full). See docs/annotation_api.md.
void install_annotation_routes(httplib::Server& server, AnnotationService& service);

nlohmann::ordered_json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_record_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const StudyStats& stats);

}  // namespace pjudge
