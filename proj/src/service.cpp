#include "alst/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <iostream>

namespace alst {
namespace {

using json = nlohmann::ordered_json;

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

TutorService::TutorService(std::shared_ptr<const ModelRegistry> registry, MfccConfig cfg)
    : registry_(std::move(registry)), cfg_(cfg) {
  if (!registry_ || registry_->size() == 0) throw Error("service: empty registry");
}

std::shared_ptr<const ModelRegistry> TutorService::registry() const {
  std::lock_guard lock(mutex_);
  return registry_;
}

void TutorService::reload(const std::string& root) {
  auto next = std::make_shared<const ModelRegistry>(ModelRegistry::load(root, cfg_));
  std::lock_guard lock(mutex_);
  registry_ = std::move(next);
}

void TutorService::install_routes(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server.Get("/v1/words", [this](const httplib::Request&, httplib::Response& res) {
    const auto reg = registry();
    json words = json::array();
    for (const auto& e : reg->entries()) {
      words.push_back({{"word_id", e.word_id},
                       {"gloss", e.gloss},
                       {"model_version", e.engine->model_version()}});
    }
    res.set_content(words.dump(), "application/json");
  });

  server.Options("/v1/score", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    std::string word_id = req.get_param_value("word_id");
    std::string audio;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("audio")) return reply_error(res, 400, "multipart body lacks an audio part");
      audio = req.get_file_value("audio").content;
      if (word_id.empty() && req.has_file("word_id")) word_id = req.get_file_value("word_id").content;
    } else {
      audio = req.body;
    }
    if (word_id.empty()) return reply_error(res, 400, "missing word_id");

    const auto reg = registry();
    const RegistryEntry* entry = reg->find(word_id);
    if (entry == nullptr) return reply_error(res, 404, "unknown word");

    try {
      const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(audio.data()), audio.size());
      res.set_content(entry->engine->score_wav(bytes, word_id).to_json(), "application/json");
    } catch (const Error& e) {
      reply_error(res, 400, e.what());
    }
  });
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw Error("bind address must be host:port, got '" + address + "'");
  }
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::logic_error&) {
    throw Error("bad port in bind address '" + address + "'");
  }
  if (port < 0 || port > 65535) throw Error("port out of range in '" + address + "'");
  return {address.substr(0, colon), port};
}

void serve(const std::string& registry_root, const std::string& bind_address,
           const MfccConfig& cfg) {
  const auto [host, port] = parse_bind_address(bind_address);
  TutorService service(std::make_shared<const ModelRegistry>(ModelRegistry::load(registry_root, cfg)),
                       cfg);
  httplib::Server server;
  service.install_routes(server);
  if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + bind_address);
  }
  std::cerr << "serving " << service.registry()->size() << " word model(s) on " << host << ':'
            << port << '\n';
  server.listen_after_bind();
}

}  // namespace alst
