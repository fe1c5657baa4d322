#pragma once

// TutorService on an ephemeral loopback port, for the lifetime of the object.

#include <memory>
#include <string>
#include <thread>

#include "alst/service.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro clashes with it.
#include <httplib.h>

namespace alst::testing {

class LiveServer {
 public:
  explicit LiveServer(const std::string& root, const MfccConfig& cfg = {})
      : service_(std::make_shared<const ModelRegistry>(ModelRegistry::load(root, cfg)), cfg) {
    service_.install_routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error("cannot bind a loopback port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }
  TutorService& service() { return service_; }

 private:
  TutorService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace alst::testing
