#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "gsv/backend.hpp"

namespace gsv::backend {

std::string chat_request_body(const std::string& model, const std::string& prompt_text, double temperature) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt_text}}});
  body["temperature"] = temperature;
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("chat response content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what());
  }
}

HttpChatBackend::HttpChatBackend(BackendId id, HttpChatConfig config) : id_(std::move(id)), config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint needs a scheme: " + config_.endpoint);
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  if (config_.model.empty()) throw ValidationError("http_chat backend needs a model name");
}

std::string HttpChatBackend::complete(const PromptInstance& prompt) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.api_key_env.empty()) {
    const char* token = std::getenv(config_.api_key_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw BackendError("environment variable " + config_.api_key_env + " is not set");
    }
    client.set_bearer_token_auth(token);
  }

  auto res = client.Post(path_, chat_request_body(config_.model, prompt.text, config_.temperature),
                         "application/json");
  if (!res) throw TransportError(id_.str() + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError(id_.str() + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(id_.str() + ": HTTP " + std::to_string(res->status));
  }
  return parse_chat_response(res->body);
}

}  // namespace gsv::backend
