#include "choiceforge/agents.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace choiceforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string choice_to_string(Choice c) {
    switch (c) {
        case Choice::A: return "A";
        case Choice::B: return "B";
        case Choice::Invalid: return "Invalid";
    }
    return "Invalid";
}

Choice choice_from_string(const std::string& s) {
    if (s == "A") return Choice::A;
    if (s == "B") return Choice::B;
    return Choice::Invalid;
}

Choice parse_choice(const std::string& raw) {
    auto is_junk = [](unsigned char ch) {
        return std::isspace(ch) || ch == '.' || ch == ',' || ch == '!' || ch == ';' ||
               ch == ':' || ch == '"' || ch == '\'' || ch == '*' || ch == '`';
    };
    std::size_t begin = 0, end = raw.size();
    while (begin < end && is_junk(raw[begin])) ++begin;
    while (end > begin && is_junk(raw[end - 1])) --end;
    std::string s = raw.substr(begin, end - begin);
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s.rfind("scenario ", 0) == 0) s = s.substr(9);
    if (s == "a") return Choice::A;
    if (s == "b") return Choice::B;
    return Choice::Invalid;
}

std::string prompt_digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ChoiceRecord::to_jsonl_line() const {
    json j{{"dilemma_id", dilemma_id},
           {"variant_id", variant_id},
           {"agent_id", agent_id},
           {"order_swapped", order_swapped},
           {"replication", replication},
           {"choice", choice_to_string(choice)},
           {"raw_response", raw_response},
           {"prompt_hash", prompt_hash},
           {"timestamp", timestamp}};
    return j.dump();
}

ChoiceRecord ChoiceRecord::from_jsonl_line(const std::string& line) {
    json j = json::parse(line);
    ChoiceRecord r;
    r.dilemma_id = j.at("dilemma_id").get<int>();
    r.variant_id = j.at("variant_id").get<std::string>();
    r.agent_id = j.at("agent_id").get<std::string>();
    r.order_swapped = j.at("order_swapped").get<bool>();
    r.replication = j.value("replication", 0);
    r.choice = choice_from_string(j.at("choice").get<std::string>());
    r.raw_response = j.at("raw_response").get<std::string>();
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
}

std::vector<ChoiceRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AgentError("cannot open records file: " + path);
    std::vector<ChoiceRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(ChoiceRecord::from_jsonl_line(line));
    }
    return out;
}

void write_records_jsonl(const std::string& path, const std::vector<ChoiceRecord>& records) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw AgentError("cannot write records file: " + path);
        for (const auto& r : records) out << r.to_jsonl_line() << "\n";
    }
    fs::rename(tmp, path);
}

std::vector<double> AgentSpec::beta_vector(const AttributeSchema& schema) const {
    std::vector<double> out(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        auto it = beta.find(schema.at(i).name);
        if (it == beta.end())
            throw AgentError("synthetic beta missing coefficient for attribute: " +
                             schema.at(i).name);
        out[i] = it->second;
    }
    return out;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double keyed_uniform(std::uint64_t seed, int dilemma_id, int replication) {
    std::uint64_t key = mix64(seed ^ mix64(static_cast<std::uint64_t>(dilemma_id)) ^
                              mix64(static_cast<std::uint64_t>(replication) << 32));
    std::mt19937_64 rng(key);
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

constexpr const char* kFixedTimestamp = "1970-01-01T00:00:00Z";

}  // namespace

Choice synthetic_logit_choice(const Dilemma& dilemma, const std::vector<double>& beta,
                              double order_constant, std::uint64_t seed, int replication) {
    double u_a = dot(beta, dilemma.alt_a.codes);
    double u_b = order_constant + dot(beta, dilemma.alt_b.codes);
    double p_b = 1.0 / (1.0 + std::exp(u_a - u_b));
    double u = keyed_uniform(seed, dilemma.id, replication);
    // anchor the draw to the content-wise smaller alternative
    bool a_is_first = dilemma.alt_a.codes <= dilemma.alt_b.codes;
    double p_first = a_is_first ? 1.0 - p_b : p_b;
    bool pick_first = u < p_first;
    return (pick_first == a_is_first) ? Choice::A : Choice::B;
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::optional<ChoiceRecord> ResponseCache::lookup(const std::string& agent_id,
                                                  const std::string& prompt_hash) const {
    std::lock_guard lock(mutex_);
    fs::path p = fs::path(dir_) / agent_id / (prompt_hash + ".json");
    std::ifstream in(p);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ChoiceRecord::from_jsonl_line(ss.str());
}

void ResponseCache::store(const ChoiceRecord& record) {
    std::lock_guard lock(mutex_);
    fs::path d = fs::path(dir_) / record.agent_id;
    fs::create_directories(d);
    fs::path p = d / (record.prompt_hash + ".json");
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << record.to_jsonl_line();
    }
    fs::rename(tmp, p);
}

AgentGateway::AgentGateway(AttributeSchema schema, std::shared_ptr<ResponseCache> cache)
    : schema_(std::move(schema)), cache_(std::move(cache)) {}

ChoiceRecord AgentGateway::query(const AgentSpec& agent, const RenderedPrompt& prompt,
                                 const Dilemma& dilemma, int replication) {
    if (agent.kind == AgentSpec::Kind::Remote) return query_remote(agent, prompt);

    ChoiceRecord r;
    r.dilemma_id = prompt.dilemma_id;
    r.variant_id = prompt.variant_id;
    r.agent_id = agent.id;
    r.order_swapped = prompt.order_swapped;
    r.replication = replication;
    r.prompt_hash = prompt_digest(prompt.text);
    r.timestamp = kFixedTimestamp;

    switch (agent.kind) {
        case AgentSpec::Kind::SyntheticLogit:
            r.choice = synthetic_logit_choice(dilemma, agent.beta_vector(schema_),
                                              agent.order_constant, agent.noise_seed, replication);
            break;
        case AgentSpec::Kind::SyntheticDeterministic: {
            auto beta = agent.beta_vector(schema_);
            double u_a = dot(beta, dilemma.alt_a.codes);
            double u_b = agent.order_constant + dot(beta, dilemma.alt_b.codes);
            r.choice = (u_b > u_a) ? Choice::B : Choice::A;
            break;
        }
        case AgentSpec::Kind::AlwaysFirst:
            r.choice = Choice::A;
            break;
        case AgentSpec::Kind::AlwaysCheapest: {
            std::size_t p = schema_.price_index();
            r.choice = (dilemma.alt_b.code(p) < dilemma.alt_a.code(p)) ? Choice::B : Choice::A;
            break;
        }
        case AgentSpec::Kind::Remote:
            break;  // handled above
    }
    r.raw_response = choice_to_string(r.choice);
    return r;
}

ChoiceRecord AgentGateway::query_remote(const AgentSpec& agent, const RenderedPrompt& prompt) {
    std::string hash = prompt_digest(prompt.text);
    if (cache_) {
        if (auto cached = cache_->lookup(agent.id, hash)) return *cached;
    }

    const char* key = nullptr;
    if (!agent.auth_env.empty()) {
        key = std::getenv(agent.auth_env.c_str());
        if (!key) throw AuthMissingError(agent.auth_env);
    }

    json body{{"model", agent.model},
              {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
              {"temperature", 0}};
    std::string payload = body.dump();

    httplib::Client cli(agent.endpoint);
    cli.set_connection_timeout(agent.remote_opts.timeout_seconds, 0);
    cli.set_read_timeout(agent.remote_opts.timeout_seconds, 0);
    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    std::string content;
    Choice choice = Choice::Invalid;
    bool got_response = false;
    int parse_attempts = agent.remote_opts.parse_retries + 1;

    for (int p = 0; p < parse_attempts && choice == Choice::Invalid; ++p) {
        double backoff = agent.remote_opts.backoff_initial_seconds;
        got_response = false;
        for (int t = 0; t <= agent.remote_opts.transport_retries; ++t) {
            if (t > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                backoff *= 2;
            }
            auto res = cli.Post(agent.path, headers, payload, "application/json");
            if (!res) {
                last_error = "no response (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status != 200) {
                last_error = "http status " + std::to_string(res->status);
                continue;
            }
            try {
                json j = json::parse(res->body);
                content = j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const std::exception& e) {
                last_error = std::string("malformed response body: ") + e.what();
                continue;
            }
            got_response = true;
            break;
        }
        if (!got_response) throw TransportExhaustedError(last_error);
        choice = parse_choice(content);
    }

    ChoiceRecord r;
    r.dilemma_id = prompt.dilemma_id;
    r.variant_id = prompt.variant_id;
    r.agent_id = agent.id;
    r.order_swapped = prompt.order_swapped;
    r.choice = choice;
    r.raw_response = content;
    r.prompt_hash = hash;
    r.timestamp = now_iso8601();
    if (cache_) cache_->store(r);
    return r;
}

}  // namespace choiceforge
