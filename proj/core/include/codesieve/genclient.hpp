// SPDX-License-Identifier: Apache-2.0
//
// Generation client contract. The remote side is a single endpoint taking
// {model, prompt, max_output_tokens, temperature} and returning {text}.
// An offline deterministic mock stands in for the real service.
#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace codesieve {

struct GenerationCall {
    std::string model;
    std::string prompt;
    uint64_t max_output_tokens = 4096;
    double temperature = 0.0;
};

struct GenerationReply {
    bool ok = false;
    std::string text;
    std::string error;      // failure description when !ok
    bool transport = false; // true for retryable transport failures
};

class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    virtual GenerationReply generate(const GenerationCall& call) = 0;
};

// Deterministic offline stand-in. Behaviors:
//   transform     — writes a new synthetic code file loosely derived from the
//                   seed snippet embedded in the prompt (accepted downstream)
//   echo_seed     — returns the seed snippet verbatim (rejected as a
//                   near-duplicate of its seed)
//   empty         — returns an empty body (rejected)
//   fail          — reports a transport error on every call
struct MockBehavior {
    enum class Kind { transform, echo_seed, empty, fail };
    Kind kind = Kind::transform;
    uint64_t seed = 0;
};

std::unique_ptr<GenerationClient> make_mock_client(const MockBehavior& behavior);

// HTTP client for the wire contract above. Authentication token, when
// non-empty, is sent as a bearer token. Transport failures are retried by
// the caller (collect_responses), not here.
struct HttpClientConfig {
    std::string endpoint = "http://127.0.0.1:8080"; // scheme://host[:port]
    std::string path = "/v1/generate";
    std::string auth_token;                         // from environment
    int timeout_seconds = 60;
};

std::unique_ptr<GenerationClient> make_http_client(const HttpClientConfig& config);

// Extract the generation payload from a raw reply body: the first fenced
// code block, or the whole body when no fence is present.
std::string extract_code_block(const std::string& raw_text);

} // namespace codesieve
