#include <httplib.h>

#include "factlab/errors.hpp"
#include "factlab/llm.hpp"
#include "http_util.hpp"

namespace factlab {

HttpChatBackend::HttpChatBackend(HttpChatOptions opts) : opts_(std::move(opts)) {
  detail::split_base_url(opts_.base_url);
  if (opts_.model.empty()) throw ConfigError("chat backend requires a model name");
}

std::string HttpChatBackend::send(const ChatRequest& req) {
  auto base = detail::split_base_url(opts_.base_url);
  httplib::Client cli(base.origin);
  cli.set_connection_timeout(opts_.timeout_seconds, 0);
  cli.set_read_timeout(opts_.timeout_seconds, 0);

  Json body;
  body["model"] = opts_.model;
  body["messages"] = Json::array({
      {{"role", "system"}, {"content", req.system_prompt}},
      {{"role", "user"}, {"content", req.user_prompt}},
  });
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens;
  if (req.expected_schema != Schema::free_text) {
    body["response_format"] = {{"type", "json_object"}};
  }

  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

  auto res = cli.Post(base.path + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    auto j = Json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw TransportError(std::string("malformed chat completion envelope: ") + ex.what());
  }
}

}  // namespace factlab
