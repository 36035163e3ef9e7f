#include "ledgerlens/http_api.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ledgerlens/conversation.hpp"
#include "ledgerlens/errors.hpp"

namespace ledgerlens {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Parses an object body or answers 400.
std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  return j;
}

}  // namespace

struct ApiServer::Impl {
  ConversationService& service;
  std::string token;
  httplib::Server server;

  Impl(ConversationService& s, std::string t) : service(s), token(std::move(t)) { routes(); }

  bool authorized(const httplib::Request& req) const {
    if (token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (authorized(req)) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, 401, "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      const auto size = service.store_size();
      send_json(res, 200,
                {{"status", size ? "ok" : "empty"}, {"store_size", size}, {"provider", service.config().provider}});
    });

    server.Get("/v1/metrics", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, to_json(service.metrics()));
    });

    server.Get(R"(/v1/threads/([A-Za-z0-9_\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        send_json(res, 200, to_json(service.thread(req.matches[1].str())));
      } catch (const UnknownThread& e) {
        send_error(res, 404, e.what());
      }
    });

    server.Get(R"(/v1/chunks/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto kb = service.knowledge_base();
      const DataChunk* c = kb ? kb->store.find(req.matches[1].str()) : nullptr;
      if (!c) return send_error(res, 404, "unknown chunk: " + req.matches[1].str());
      send_json(res, 200, *c);
    });

    server.Post("/v1/ask", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      if (!body->contains("question") || !(*body)["question"].is_string())
        return send_error(res, 400, "field \"question\" (string) is required");
      std::optional<std::string> thread_id;
      if (body->contains("thread_id") && !(*body)["thread_id"].is_null()) {
        if (!(*body)["thread_id"].is_string()) return send_error(res, 400, "field \"thread_id\" must be a string");
        thread_id = (*body)["thread_id"].get<std::string>();
      }
      try {
        send_json(res, 200, ask_payload(service.ask(thread_id, (*body)["question"].get<std::string>())));
      } catch (const UnknownThread& e) {
        send_error(res, 404, e.what());
      } catch (const EmptyStore& e) {
        send_error(res, 503, e.what());
      } catch (const GatewayError& e) {
        send_error(res, 502, e.what());
      } catch (const Timeout& e) {
        send_error(res, 502, e.what());
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    });

    server.Post("/v1/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      for (const char* f : {"table_path", "lexicon_path"}) {
        if (!body->contains(f) || !(*body)[f].is_string())
          return send_error(res, 400, std::string("field \"") + f + "\" (string) is required");
      }
      try {
        auto summary = service.ingest((*body)["table_path"].get<std::string>(), (*body)["lexicon_path"].get<std::string>());
        send_json(res, 200, to_json(summary));
      } catch (const std::exception& e) {
        send_error(res, 422, e.what());
      }
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      spdlog::error("unhandled API error: {}", what);
      send_error(res, 500, what);
    });
  }
};

ApiServer::ApiServer(ConversationService& service, std::string bearer_token)
    : impl_(std::make_unique<Impl>(service, std::move(bearer_token))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace ledgerlens
