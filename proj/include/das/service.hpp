#pragma once

// HTTP API backing the studio UI. Sessions live in memory under an LRU cap;
// previews are rendered on request and cached by a hash of their inputs.
//
//   POST /api/sessions                       multipart image (PNG), depth (PFM),
//                                            optional intrinsics (JSON), grid
//   GET  /api/sessions/{id}/points?grid=G    [{x,y,z,r,g,b}, ...]
//   POST /api/sessions/{id}/previews/camera  trajectory JSON
//   POST /api/sessions/{id}/previews/object  multipart mask (PGM), timeline
//                                            (JSON), optional frames
//   GET  /api/previews/{pid}/frames/{k}      PNG
//   POST /api/sessions/{id}/export           trajectory JSON or the object
//                                            multipart; returns a tar bundle
//   GET  /api/healthz                        "ok"
//
// Errors are {"error": code, "message": text} with 400 for malformed input,
// 404 for unknown ids, 422 for invalid geometry and a generic 500 otherwise.

#include "das/error.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace das {

inline constexpr int kDefaultPort = 8350;
inline constexpr const char* kPortEnv = "DAS_PORT";

struct ServiceOptions {
  std::size_t max_sessions = 32;
  std::size_t max_previews = 64;
  int max_frames = 1024;
  unsigned render_workers = 0;
  std::string cors_origin = "*";
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

class Service {
 public:
  explicit Service(ServiceOptions opts = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers every route on server.
  void mount(httplib::Server& server);

  std::size_t session_count() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Flag value if given, else $DAS_PORT, else the default port. Throws
/// InvalidArgument on an unparsable environment value.
int resolve_port(std::optional<int> flag);

/// Blocks serving on host:port until the process is stopped.
void serve(const std::string& host, int port, ServiceOptions opts = {});

}  // namespace das
