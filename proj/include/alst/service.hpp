#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "alst/engine.hpp"

namespace httplib {
class Server;
}

namespace alst {

/// HTTP front of the tutoring engine.
///
///   GET  /v1/health              -> {"status":"ok"}
///   GET  /v1/words               -> [{"word_id","gloss","model_version"}, ...]
///   POST /v1/score?word_id=...   -> ScoreResponse JSON
///
/// /v1/score takes either a raw WAV body or multipart form data with an
/// `audio` file part (word_id may then also come as a form field).
/// Unknown words answer 404, undecodable audio 400; errors are
/// {"error": "..."}.
///
/// Requests read an immutable registry snapshot; reload() swaps in a new one
/// atomically, so in-flight requests finish on the snapshot they started with.
class TutorService {
 public:
  TutorService(std::shared_ptr<const ModelRegistry> registry, MfccConfig cfg);

  void install_routes(httplib::Server& server);

  void reload(const std::string& root);

  std::shared_ptr<const ModelRegistry> registry() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelRegistry> registry_;
  MfccConfig cfg_;
};

/// Splits "host:port" (port required).
std::pair<std::string, int> parse_bind_address(const std::string& address);

/// Loads the registry and blocks serving on the given address.
void serve(const std::string& registry_root, const std::string& bind_address,
           const MfccConfig& cfg = {});

}  // namespace alst
