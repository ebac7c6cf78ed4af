#include "cobel/stub_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cobel/reasoner.hpp"

namespace cobel::stub {

StubServer::StubServer(Handler handler) : server_(std::make_unique<httplib::Server>()), handler_(std::move(handler)) {
  install();
}

StubServer::~StubServer() { stop(); }

void StubServer::install() {
  server_->Post(R"(.*/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
    CapturedRequest cap{req.path, req.get_header_value("Authorization"), req.body};
    Handler h;
    {
      std::lock_guard lock(mu_);
      captured_.push_back(cap);
      h = handler_;
    }
    const Reply reply = h ? h(cap) : Reply{500, {}};
    res.status = reply.status;
    if (reply.status >= 200 && reply.status < 300) {
      nlohmann::ordered_json body;
      body["id"] = "stub-" + std::to_string(captured().size());
      body["object"] = "chat.completion";
      body["choices"] = nlohmann::ordered_json::array(
          {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply.content}}}, {"finish_reason", "stop"}}});
      res.set_content(body.dump(), "application/json");
    } else {
      res.set_content(R"({"error":{"message":"stub failure"}})", "application/json");
    }
  });
}

void StubServer::start(int port) {
  port_ = port == 0 ? server_->bind_to_any_port("127.0.0.1") : (server_->bind_to_port("127.0.0.1", port) ? port : -1);
  if (port_ <= 0) throw std::runtime_error("stub server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void StubServer::serve(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw std::runtime_error("stub server could not listen on " + host);
}

void StubServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

void StubServer::set_handler(Handler h) {
  std::lock_guard lock(mu_);
  handler_ = std::move(h);
}

std::vector<CapturedRequest> StubServer::captured() const {
  std::lock_guard lock(mu_);
  return captured_;
}

std::string prompt_of(const CapturedRequest& r) {
  const auto j = nlohmann::json::parse(r.body);
  return j.at("messages").at(0).at("content").get<std::string>();
}

Handler transcript_handler(const std::filesystem::path& dir) {
  return [dir](const CapturedRequest& r) -> Reply {
    const auto id = reasoner::identify(prompt_of(r));
    if (!id) return {404, {}};
    std::ifstream in(dir / (std::string(reasoner::name(*id)) + ".txt"), std::ios::binary);
    if (!in) return {404, {}};
    std::ostringstream ss;
    ss << in.rdbuf();
    return {200, ss.str()};
  };
}

}  // namespace cobel::stub
