#pragma once

// Local chat-completion server for tests and offline runs. Records every
// request and answers through a replaceable handler.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace cobel::stub {

struct CapturedRequest {
  std::string path;
  std::string authorization;
  std::string body;  // raw JSON
};

struct Reply {
  int status = 200;
  std::string content;  // assistant text; ignored unless status is 2xx
};

using Handler = std::function<Reply(const CapturedRequest&)>;

class StubServer {
 public:
  explicit StubServer(Handler handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds to 127.0.0.1 (port 0 = any free port) and serves in a background thread.
  void start(int port = 0);
  /// Blocks serving on the calling thread.
  void serve(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  /// Base URL to hand to the chat backend, e.g. http://127.0.0.1:PORT/v1.
  std::string base_url() const;

  void set_handler(Handler h);
  std::vector<CapturedRequest> captured() const;

 private:
  void install();

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  mutable std::mutex mu_;
  Handler handler_;
  std::vector<CapturedRequest> captured_;
  int port_ = 0;
};

/// Prompt text of a captured request (messages[0].content).
std::string prompt_of(const CapturedRequest& r);

/// Answers each prompt with `<dir>/<template name>.txt`, picking the template
/// the prompt was rendered from; 404 when none matches.
Handler transcript_handler(const std::filesystem::path& dir);

}  // namespace cobel::stub
