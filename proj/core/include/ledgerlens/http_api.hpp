#pragma once

#include <memory>
#include <string>

namespace ledgerlens {

class ConversationService;

// JSON API over a ConversationService:
//   POST /v1/ingest        {table_path, lexicon_path}
//   POST /v1/ask           {thread_id?, question}
//   GET  /v1/threads/{id}
//   GET  /v1/metrics
//   GET  /v1/health
//   GET  /v1/chunks/{id}
// With a non-empty token every request needs "Authorization: Bearer <token>".
class ApiServer {
 public:
  explicit ApiServer(ConversationService& service, std::string bearer_token = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(). Call after bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ledgerlens
