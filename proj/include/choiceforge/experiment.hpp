#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "choiceforge/agents.hpp"
#include "choiceforge/design.hpp"
#include "choiceforge/prompt.hpp"
#include "choiceforge/wtp.hpp"

namespace choiceforge {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingCounterpartRunError : std::runtime_error {
    explicit MissingCounterpartRunError(const std::string& cell)
        : std::runtime_error("no counterpart order run for cell: " + cell) {}
};

enum class OrderMode { Normal, Swapped, Both };

struct ExperimentConfig {
    int spec_version = 1;
    std::uint64_t design_seed = 42;
    std::vector<std::string> variants;
    std::vector<AgentSpec> agents;
    Currency currency = Currency::hkd();
    OrderMode order_mode = OrderMode::Both;
    int replications = 1;
    std::string output_dir = "out";
    bool club_short_description = false;
    std::optional<std::string> schema_file;
    std::optional<std::string> benchmark_file;
    BenchmarkSegment benchmark_segment = BenchmarkSegment::Overall;
    bool adjust_benchmark_inflation = false;
    int workers = 1;
    double cell_abort_failure_fraction = 0.10;

    /// Strict parse: unknown fields are rejected.
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string digest() const;
    void validate() const;

    std::vector<bool> order_swapped_runs() const;  // e.g. {false,true} for Both
    AttributeSchema load_schema() const;
    BenchmarkTable load_benchmark() const;
};

/// One (agent, variant, order) grid cell and its artifact paths.
struct CellEntry {
    std::string agent_id;
    std::string variant_id;
    bool order_swapped = false;
    std::string records_path;
    std::string fit_path;
    std::string wtp_path;
    std::string status;  // fit | flagged | failed
    std::string flag;    // separation:<feature> | positive_price | not_converged | error detail
    double pseudo_r2 = 0.0;

    std::string name() const;
};

struct RunManifest {
    std::string config_digest;
    std::vector<CellEntry> cells;
    // averaged pseudo-R^2 across the two order runs, keyed "agent/variant";
    // present only when both orders fitted
    std::map<std::string, double> pseudo_r2_avg;

    std::string to_json_text() const;
    static RunManifest from_json_text(const std::string& text);
    static RunManifest load(const std::string& dir);
    void save(const std::string& dir) const;

    const CellEntry* find(const std::string& agent_id, const std::string& variant_id,
                          bool order_swapped) const;
};

/// Writes the enumerated design, dilemmas, and every rendered prompt set.
int cmd_generate(const ExperimentConfig& config);
/// Queries every (agent, variant, order) cell and writes record JSONL files
/// plus per-cell run metadata.
int cmd_run(const ExperimentConfig& config);
/// Fits MNL per cell, derives WTP and deviations, writes the manifest and a
/// markdown summary. Returns 2 when any cell is flagged.
int cmd_fit(const ExperimentConfig& config);
/// Order/currency robustness report from an existing manifest.
int cmd_robustness(const ExperimentConfig& config);
/// Re-renders the markdown summary from existing artifacts.
int cmd_report(const ExperimentConfig& config);

// shared helpers, exposed for tests
void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace choiceforge
