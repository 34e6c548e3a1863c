#pragma once

// Helpers shared by the test binaries.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "factlab/clock.hpp"
#include "factlab/llm.hpp"

namespace factlab::testing {

inline std::string fixture_path(const std::string& rel) { return std::string(FACTLAB_TEST_FIXTURES) + "/" + rel; }
inline std::string data_path(const std::string& rel) { return std::string(FACTLAB_TEST_DATA) + "/" + rel; }

inline RetryPolicy no_backoff(unsigned retries = 2) { return {retries, std::chrono::milliseconds(0)}; }

inline Sleeper no_sleep() {
  return [](std::chrono::milliseconds) {};
}

inline std::shared_ptr<const Clock> frozen() { return std::make_shared<FrozenClock>(0); }

// Sequential script of payloads.
inline std::shared_ptr<ScriptedBackend> seq(std::vector<ScriptEntry> entries) {
  return std::make_shared<ScriptedBackend>(std::move(entries));
}

inline std::shared_ptr<ScriptedBackend> keyed(std::map<Schema, std::vector<ScriptEntry>> queues) {
  return std::make_shared<ScriptedBackend>(std::move(queues));
}

inline std::unique_ptr<LlmClient> client(std::shared_ptr<ChatBackend> backend, unsigned retries = 2) {
  return std::make_unique<LlmClient>(std::move(backend), no_backoff(retries), frozen(), no_sleep());
}

inline ScriptEntry reply(const Payload& p) { return ScriptEntry::respond(p); }
inline ScriptEntry fail(const std::string& msg = "connection reset") { return ScriptEntry::fail(msg); }

}  // namespace factlab::testing
