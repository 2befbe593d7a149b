#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "choiceforge/design.hpp"
#include "choiceforge/prompt.hpp"

namespace choiceforge {

struct AgentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AuthMissingError : AgentError {
    explicit AuthMissingError(const std::string& var)
        : AgentError("auth environment variable not set: " + var) {}
};
struct TransportExhaustedError : AgentError {
    explicit TransportExhaustedError(const std::string& detail)
        : AgentError("transport failed after retries: " + detail) {}
};

enum class Choice { A, B, Invalid };

std::string choice_to_string(Choice c);
Choice choice_from_string(const std::string& s);

/// Strict A/B parser: trims whitespace/punctuation, accepts an optional
/// "Scenario " prefix, case-insensitive. Anything else is Invalid.
Choice parse_choice(const std::string& raw);

struct ChoiceRecord {
    int dilemma_id = 0;
    std::string variant_id;
    std::string agent_id;
    bool order_swapped = false;
    int replication = 0;
    Choice choice = Choice::Invalid;
    std::string raw_response;
    std::string prompt_hash;
    std::string timestamp;  // ISO-8601; fixed epoch for synthetic agents

    std::string to_jsonl_line() const;
    static ChoiceRecord from_jsonl_line(const std::string& line);
};

std::vector<ChoiceRecord> read_records_jsonl(const std::string& path);
void write_records_jsonl(const std::string& path, const std::vector<ChoiceRecord>& records);

/// 64-bit FNV-1a of the prompt text, hex-encoded.
std::string prompt_digest(const std::string& text);

struct RemoteOptions {
    int timeout_seconds = 30;
    int transport_retries = 3;
    int parse_retries = 1;
    double backoff_initial_seconds = 0.5;
};

struct AgentSpec {
    enum class Kind { Remote, SyntheticLogit, SyntheticDeterministic, AlwaysFirst, AlwaysCheapest };
    Kind kind = Kind::SyntheticLogit;
    std::string id;

    // Remote
    std::string endpoint;   // e.g. http://localhost:8080
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env;   // name of the env var carrying the API key
    double temperature = 0.0;
    RemoteOptions remote_opts;

    // Synthetic
    std::map<std::string, double> beta;  // attribute name -> raw-code coefficient
    double order_constant = 0.0;
    std::uint64_t noise_seed = 0;

    /// Requires a named coefficient for every schema attribute.
    std::vector<double> beta_vector(const AttributeSchema& schema) const;
};

/// Softmax draw over raw level codes: U_A = beta.x_A, U_B = oc + beta.x_B,
/// P(B) = exp(U_B)/(exp(U_A)+exp(U_B)). The uniform draw is keyed by
/// (seed, dilemma_id, replication) and applied to the lexicographically
/// smaller alternative, so with order_constant = 0 a presentation swap
/// relabels the choice without changing which room wins.
Choice synthetic_logit_choice(const Dilemma& dilemma, const std::vector<double>& beta,
                              double order_constant, std::uint64_t seed, int replication);

/// File-backed (prompt_hash, agent_id) -> ChoiceRecord cache. Thread-safe.
class ResponseCache {
  public:
    explicit ResponseCache(std::string dir);
    std::optional<ChoiceRecord> lookup(const std::string& agent_id,
                                       const std::string& prompt_hash) const;
    void store(const ChoiceRecord& record);
    const std::string& dir() const { return dir_; }

  private:
    std::string dir_;
    mutable std::mutex mutex_;
};

class AgentGateway {
  public:
    AgentGateway(AttributeSchema schema, std::shared_ptr<ResponseCache> cache = nullptr);

    /// One choice for one rendered prompt. Synthetic agents read the dilemma
    /// codes; Remote sends a single user message at temperature 0 with
    /// exponential-backoff retries, consulting the cache first.
    ChoiceRecord query(const AgentSpec& agent, const RenderedPrompt& prompt,
                       const Dilemma& dilemma, int replication = 0);

  private:
    ChoiceRecord query_remote(const AgentSpec& agent, const RenderedPrompt& prompt);

    AttributeSchema schema_;
    std::shared_ptr<ResponseCache> cache_;
};

}  // namespace choiceforge
