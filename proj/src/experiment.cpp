#include "choiceforge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "choiceforge/estimator.hpp"

namespace choiceforge {

namespace fs = std::filesystem;
using nlohmann::json;

void atomic_write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        out << content;
    }
    fs::rename(tmp, p);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

void reject_unknown_fields(const json& j, const std::vector<std::string>& allowed,
                           const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown field '" + key + "' in " + context);
    }
}

AgentSpec agent_from_json(const json& j) {
    reject_unknown_fields(j,
                          {"id", "kind", "endpoint", "path", "model", "auth_env", "beta",
                           "order_constant", "noise_seed", "timeout_seconds", "transport_retries"},
                          "agent");
    AgentSpec a;
    a.id = j.at("id").get<std::string>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "remote") {
        a.kind = AgentSpec::Kind::Remote;
        a.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("path")) a.path = j["path"].get<std::string>();
        a.model = j.at("model").get<std::string>();
        a.auth_env = j.value("auth_env", std::string{});
        if (j.contains("timeout_seconds"))
            a.remote_opts.timeout_seconds = j["timeout_seconds"].get<int>();
        if (j.contains("transport_retries"))
            a.remote_opts.transport_retries = j["transport_retries"].get<int>();
    } else if (kind == "synthetic_logit") {
        a.kind = AgentSpec::Kind::SyntheticLogit;
        a.beta = j.at("beta").get<std::map<std::string, double>>();
        a.order_constant = j.value("order_constant", 0.0);
        a.noise_seed = j.value("noise_seed", std::uint64_t{0});
    } else if (kind == "synthetic_deterministic") {
        a.kind = AgentSpec::Kind::SyntheticDeterministic;
        a.beta = j.at("beta").get<std::map<std::string, double>>();
        a.order_constant = j.value("order_constant", 0.0);
    } else if (kind == "always_first") {
        a.kind = AgentSpec::Kind::AlwaysFirst;
    } else if (kind == "always_cheapest") {
        a.kind = AgentSpec::Kind::AlwaysCheapest;
    } else {
        throw ConfigError("unknown agent kind: " + kind);
    }
    return a;
}

json agent_to_json(const AgentSpec& a) {
    json j;
    j["id"] = a.id;
    switch (a.kind) {
        case AgentSpec::Kind::Remote:
            j["kind"] = "remote";
            j["endpoint"] = a.endpoint;
            j["path"] = a.path;
            j["model"] = a.model;
            j["auth_env"] = a.auth_env;
            break;
        case AgentSpec::Kind::SyntheticLogit:
            j["kind"] = "synthetic_logit";
            j["beta"] = a.beta;
            j["order_constant"] = a.order_constant;
            j["noise_seed"] = a.noise_seed;
            break;
        case AgentSpec::Kind::SyntheticDeterministic:
            j["kind"] = "synthetic_deterministic";
            j["beta"] = a.beta;
            j["order_constant"] = a.order_constant;
            break;
        case AgentSpec::Kind::AlwaysFirst:
            j["kind"] = "always_first";
            break;
        case AgentSpec::Kind::AlwaysCheapest:
            j["kind"] = "always_cheapest";
            break;
    }
    return j;
}

std::string order_name(bool swapped) { return swapped ? "swapped" : "normal"; }

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    reject_unknown_fields(
        j,
        {"spec_version", "design_seed", "variants", "agents", "currency", "order_mode",
         "replications", "output_dir", "club_short_description", "schema_file", "benchmark_file",
         "benchmark_segment", "adjust_benchmark_inflation", "workers"},
        "config");
    ExperimentConfig c;
    c.spec_version = j.at("spec_version").get<int>();
    if (c.spec_version != 1)
        throw ConfigError("unsupported spec_version: " + std::to_string(c.spec_version));
    c.design_seed = j.value("design_seed", std::uint64_t{42});
    c.variants = j.at("variants").get<std::vector<std::string>>();
    for (const auto& ja : j.at("agents")) c.agents.push_back(agent_from_json(ja));
    if (j.contains("currency")) {
        const auto& jc = j["currency"];
        reject_unknown_fields(jc, {"kind", "rate"}, "currency");
        std::string kind = jc.at("kind").get<std::string>();
        if (kind == "hkd")
            c.currency = Currency::hkd();
        else if (kind == "usd")
            c.currency = Currency::usd(jc.at("rate").get<double>());
        else
            throw ConfigError("unknown currency kind: " + kind);
    }
    if (j.contains("order_mode")) {
        std::string m = j["order_mode"].get<std::string>();
        if (m == "normal")
            c.order_mode = OrderMode::Normal;
        else if (m == "swapped")
            c.order_mode = OrderMode::Swapped;
        else if (m == "both")
            c.order_mode = OrderMode::Both;
        else
            throw ConfigError("unknown order_mode: " + m);
    }
    c.replications = j.value("replications", 1);
    c.output_dir = j.value("output_dir", std::string("out"));
    c.club_short_description = j.value("club_short_description", false);
    if (j.contains("schema_file")) c.schema_file = j["schema_file"].get<std::string>();
    if (j.contains("benchmark_file")) c.benchmark_file = j["benchmark_file"].get<std::string>();
    if (j.contains("benchmark_segment"))
        c.benchmark_segment = segment_from_name(j["benchmark_segment"].get<std::string>());
    c.adjust_benchmark_inflation = j.value("adjust_benchmark_inflation", false);
    c.workers = j.value("workers", 1);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_json_text(read_file(path));
}

void ExperimentConfig::validate() const {
    if (variants.empty()) throw ConfigError("config needs at least one variant");
    if (agents.empty()) throw ConfigError("config needs at least one agent");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    for (const auto& v : variants) {
        try {
            PromptVariant::from_id(v);
        } catch (const PromptError& e) {
            throw ConfigError(e.what());
        }
    }
    std::vector<std::string> ids;
    for (const auto& a : agents) {
        if (a.id.empty()) throw ConfigError("agent id must be non-empty");
        if (std::find(ids.begin(), ids.end(), a.id) != ids.end())
            throw ConfigError("duplicate agent id: " + a.id);
        ids.push_back(a.id);
    }
}

std::string ExperimentConfig::digest() const {
    json j;
    j["spec_version"] = spec_version;
    j["design_seed"] = design_seed;
    j["variants"] = variants;
    j["agents"] = json::array();
    for (const auto& a : agents) j["agents"].push_back(agent_to_json(a));
    j["currency"] = currency.kind == Currency::Kind::USD
                        ? json{{"kind", "usd"}, {"rate", currency.usd_per_hkd}}
                        : json{{"kind", "hkd"}};
    j["order_mode"] = static_cast<int>(order_mode);
    j["replications"] = replications;
    j["club_short_description"] = club_short_description;
    return prompt_digest(j.dump());
}

std::vector<bool> ExperimentConfig::order_swapped_runs() const {
    switch (order_mode) {
        case OrderMode::Normal: return {false};
        case OrderMode::Swapped: return {true};
        case OrderMode::Both: break;
    }
    return {false, true};
}

AttributeSchema ExperimentConfig::load_schema() const {
    if (schema_file) return AttributeSchema::from_json_text(read_file(*schema_file));
    return AttributeSchema::hotel_default();
}

BenchmarkTable ExperimentConfig::load_benchmark() const {
    if (benchmark_file) return BenchmarkTable::from_json_text(read_file(*benchmark_file));
    return BenchmarkTable::embedded();
}

std::string CellEntry::name() const {
    return agent_id + "/" + variant_id + "/" + order_name(order_swapped);
}

std::string RunManifest::to_json_text() const {
    json j;
    j["config_digest"] = config_digest;
    j["cells"] = json::array();
    for (const auto& c : cells) {
        j["cells"].push_back({{"agent_id", c.agent_id},
                              {"variant_id", c.variant_id},
                              {"order_swapped", c.order_swapped},
                              {"records_path", c.records_path},
                              {"fit_path", c.fit_path},
                              {"wtp_path", c.wtp_path},
                              {"status", c.status},
                              {"flag", c.flag},
                              {"pseudo_r2", c.pseudo_r2}});
    }
    j["pseudo_r2_avg"] = pseudo_r2_avg;
    return j.dump(2);
}

RunManifest RunManifest::from_json_text(const std::string& text) {
    json j = json::parse(text);
    RunManifest m;
    m.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& jc : j.at("cells")) {
        CellEntry c;
        c.agent_id = jc.at("agent_id").get<std::string>();
        c.variant_id = jc.at("variant_id").get<std::string>();
        c.order_swapped = jc.at("order_swapped").get<bool>();
        c.records_path = jc.at("records_path").get<std::string>();
        c.fit_path = jc.at("fit_path").get<std::string>();
        c.wtp_path = jc.at("wtp_path").get<std::string>();
        c.status = jc.at("status").get<std::string>();
        c.flag = jc.at("flag").get<std::string>();
        c.pseudo_r2 = jc.at("pseudo_r2").get<double>();
        m.cells.push_back(std::move(c));
    }
    m.pseudo_r2_avg = j.at("pseudo_r2_avg").get<std::map<std::string, double>>();
    return m;
}

RunManifest RunManifest::load(const std::string& dir) {
    return from_json_text(read_file((fs::path(dir) / "manifest.json").string()));
}

void RunManifest::save(const std::string& dir) const {
    atomic_write_file((fs::path(dir) / "manifest.json").string(), to_json_text());
}

const CellEntry* RunManifest::find(const std::string& agent_id, const std::string& variant_id,
                                   bool order_swapped) const {
    for (const auto& c : cells)
        if (c.agent_id == agent_id && c.variant_id == variant_id &&
            c.order_swapped == order_swapped)
            return &c;
    return nullptr;
}

namespace {

struct ExperimentPaths {
    fs::path root;
    fs::path dilemmas() const { return root / "design" / "dilemmas.json"; }
    fs::path alternatives() const { return root / "design" / "alternatives.json"; }
    fs::path schema() const { return root / "design" / "schema.json"; }
    fs::path prompts(const std::string& variant, bool swapped) const {
        return root / "prompts" / (variant + "." + order_name(swapped) + ".jsonl");
    }
    std::string cell_stem(const CellEntry& c) const {
        return c.agent_id + "." + c.variant_id + "." + order_name(c.order_swapped);
    }
    fs::path records(const CellEntry& c) const {
        return root / "records" / (cell_stem(c) + ".jsonl");
    }
    fs::path run_meta(const CellEntry& c) const {
        return root / "records" / (cell_stem(c) + ".meta.json");
    }
    fs::path fit(const CellEntry& c) const { return root / "fits" / (cell_stem(c) + ".fit.json"); }
    fs::path wtp(const CellEntry& c) const { return root / "wtp" / (cell_stem(c) + ".wtp.json"); }
    fs::path wtp_csv(const CellEntry& c) const {
        return root / "wtp" / (cell_stem(c) + ".wtp.csv");
    }
};

PromptVariant configured_variant(const ExperimentConfig& config, const std::string& variant_id) {
    PromptVariant v = PromptVariant::from_id(variant_id);
    v.currency = config.currency;
    v.club_short_description = config.club_short_description;
    return v;
}

std::vector<Dilemma> load_or_build_dilemmas(const ExperimentConfig& config,
                                            const AttributeSchema& schema) {
    ExperimentPaths paths{config.output_dir};
    if (fs::exists(paths.dilemmas())) return dilemmas_from_json_text(read_file(paths.dilemmas()));
    return pair_dilemmas(enumerate_alternatives(schema), config.design_seed);
}

std::vector<CellEntry> grid_cells(const ExperimentConfig& config) {
    std::vector<CellEntry> cells;
    ExperimentPaths paths{config.output_dir};
    for (const auto& agent : config.agents) {
        for (const auto& variant : config.variants) {
            for (bool swapped : config.order_swapped_runs()) {
                CellEntry c;
                c.agent_id = agent.id;
                c.variant_id = variant;
                c.order_swapped = swapped;
                c.records_path = paths.records(c).string();
                c.fit_path = paths.fit(c).string();
                c.wtp_path = paths.wtp(c).string();
                cells.push_back(std::move(c));
            }
        }
    }
    return cells;
}

const AgentSpec& agent_by_id(const ExperimentConfig& config, const std::string& id) {
    for (const auto& a : config.agents)
        if (a.id == id) return a;
    throw ConfigError("no agent with id: " + id);
}

std::shared_ptr<ResponseCache> make_cache(const ExperimentConfig& config) {
    const char* env = std::getenv("CHOICE_FORGE_CACHE");
    fs::path dir = env ? fs::path(env) : fs::path(config.output_dir) / "cache";
    return std::make_shared<ResponseCache>(dir.string());
}

// runs fn(i) for i in [0, count) across up to `workers` threads
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::mutex mx;
    std::size_t next = 0;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mx);
                if (next >= count || error) return;
                i = next++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mx);
                if (!error) error = std::current_exception();
            }
        }
    };
    int n = std::min<int>(workers, static_cast<int>(count));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string round2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

std::string stars(double p) {
    if (!std::isfinite(p)) return "";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

}  // namespace

int cmd_generate(const ExperimentConfig& config) {
    AttributeSchema schema = config.load_schema();
    ExperimentPaths paths{config.output_dir};

    auto alternatives = enumerate_alternatives(schema);
    auto dilemmas = pair_dilemmas(alternatives, config.design_seed);

    atomic_write_file(paths.schema().string(), schema.to_json_text());
    {
        json j = json::array();
        for (const auto& a : alternatives) j.push_back(a.codes);
        atomic_write_file(paths.alternatives().string(), j.dump(2));
    }
    atomic_write_file(paths.dilemmas().string(), dilemmas_to_json_text(dilemmas));

    for (const auto& variant_id : config.variants) {
        PromptVariant variant = configured_variant(config, variant_id);
        for (bool swapped : config.order_swapped_runs()) {
            auto presented = swapped ? swap_orders(dilemmas) : dilemmas;
            std::ostringstream os;
            for (const auto& d : presented) {
                RenderedPrompt p = render_prompt(d, variant, schema, config.design_seed, swapped);
                os << json{{"dilemma_id", p.dilemma_id},
                           {"order_swapped", p.order_swapped},
                           {"text", p.text}}
                          .dump()
                   << "\n";
            }
            atomic_write_file(paths.prompts(variant_id, swapped).string(), os.str());
        }
    }
    return 0;
}

int cmd_run(const ExperimentConfig& config) {
    AttributeSchema schema = config.load_schema();
    ExperimentPaths paths{config.output_dir};
    auto dilemmas = load_or_build_dilemmas(config, schema);
    auto cache = make_cache(config);
    AgentGateway gateway(schema, cache);
    auto cells = grid_cells(config);

    parallel_for(cells.size(), config.workers, [&](std::size_t ci) {
        const CellEntry& cell = cells[ci];
        const AgentSpec& agent = agent_by_id(config, cell.agent_id);
        PromptVariant variant = configured_variant(config, cell.variant_id);
        auto presented = cell.order_swapped ? swap_orders(dilemmas) : dilemmas;
        int reps = agent.kind == AgentSpec::Kind::Remote ? 1 : config.replications;

        std::vector<ChoiceRecord> records;
        std::size_t invalid = 0, failures = 0;
        std::string last_failure;
        const std::size_t total = presented.size() * static_cast<std::size_t>(reps);
        for (int rep = 0; rep < reps; ++rep) {
            for (const auto& d : presented) {
                RenderedPrompt p =
                    render_prompt(d, variant, schema, config.design_seed, cell.order_swapped);
                try {
                    ChoiceRecord r = gateway.query(agent, p, d, rep);
                    if (r.choice == Choice::Invalid) ++invalid;
                    records.push_back(std::move(r));
                } catch (const AgentError& e) {
                    ++failures;
                    last_failure = e.what();
                    if (static_cast<double>(failures) >
                        config.cell_abort_failure_fraction * static_cast<double>(total))
                        throw std::runtime_error("cell " + cell.name() +
                                                 " aborted, too many failures; last: " +
                                                 last_failure);
                }
            }
        }
        write_records_jsonl(cell.records_path, records);
        json meta{{"agent", agent_to_json(agent)},
                  {"variant_id", cell.variant_id},
                  {"order_swapped", cell.order_swapped},
                  {"design_seed", config.design_seed},
                  {"replications", reps},
                  {"prompts_submitted", total},
                  {"records_written", records.size()},
                  {"invalid_count", invalid},
                  {"transport_failures", failures},
                  {"last_failure", last_failure}};
        atomic_write_file(paths.run_meta(cell).string(), meta.dump(2));
    });
    return 0;
}

namespace {

struct CellResult {
    std::optional<MnlFit> fit;
    std::optional<WtpReport> wtp;
};

CellResult fit_cell(CellEntry& cell, const std::vector<Dilemma>& dilemmas,
                    const AttributeSchema& schema, const BenchmarkTable& benchmark,
                    const ExperimentConfig& config) {
    CellResult out;
    std::vector<ChoiceRecord> records;
    try {
        records = read_records_jsonl(cell.records_path);
    } catch (const std::exception& e) {
        cell.status = "failed";
        cell.flag = e.what();
        return out;
    }
    try {
        ChoiceDataset data = build_dataset(records, dilemmas, schema);
        MnlFit fit = fit_mnl(data);
        WtpReport wtp = compute_wtp(fit, data);
        if (fit.status == FitStatus::SeparationDetected) {
            cell.status = "flagged";
            cell.flag = "separation:" + (fit.separation ? fit.separation->feature : "?");
        } else if (fit.status == FitStatus::NotConverged) {
            cell.status = "flagged";
            cell.flag = "not_converged";
        } else if (wtp.flags.positive_price_coefficient) {
            cell.status = "flagged";
            cell.flag = "positive_price";
        } else if (fit.status == FitStatus::SingularHessian) {
            cell.status = "flagged";
            cell.flag = "singular_hessian";
        } else {
            cell.status = "fit";
            wtp.deviations =
                deviation_report(wtp, benchmark, config.benchmark_segment,
                                 config.adjust_benchmark_inflation);
        }
        cell.pseudo_r2 = fit.usable() ? fit.pseudo_r2 : 0.0;
        atomic_write_file(cell.fit_path, fit.to_json_text());
        atomic_write_file(cell.wtp_path, wtp.to_json_text());
        out.fit = std::move(fit);
        out.wtp = std::move(wtp);
    } catch (const EstimatorError& e) {
        cell.status = "failed";
        cell.flag = e.what();
    }
    return out;
}

void render_summary(const ExperimentConfig& config, const RunManifest& manifest,
                    const BenchmarkTable& benchmark, const AttributeSchema& schema) {
    std::ostringstream os;
    os << "# Experiment summary\n\n";
    for (const auto& cell : manifest.cells) {
        os << "## " << cell.name() << "\n\n";
        if (cell.status == "failed") {
            os << "Failed: " << cell.flag << "\n\n";
            continue;
        }
        if (cell.status == "flagged") {
            if (cell.flag.rfind("separation:", 0) == 0)
                os << "perfect separation: " << cell.flag.substr(11) << "\n\n";
            else
                os << "flagged: " << cell.flag << "\n\n";
            continue;
        }
        MnlFit fit = MnlFit::from_json_text(read_file(cell.fit_path));
        WtpReport wtp = WtpReport::from_json_text(read_file(cell.wtp_path));

        os << "| term | coefficient | std. error |\n|---|---|---|\n";
        os << "| constant (alternative B) | " << round2(fit.asc) << stars(fit.asc_p) << " | "
           << round2(fit.asc_se) << " |\n";
        for (std::size_t i = 0; i < fit.feature_names.size(); ++i) {
            auto idx = static_cast<Eigen::Index>(i);
            os << "| " << fit.feature_names[i] << " | " << round2(fit.beta(idx))
               << stars(fit.p_values(idx + 1)) << " | " << round2(fit.std_errors(idx + 1))
               << " |\n";
        }
        os << "\npseudo-R2: " << round2(fit.pseudo_r2);
        auto avg = manifest.pseudo_r2_avg.find(cell.agent_id + "/" + cell.variant_id);
        if (avg != manifest.pseudo_r2_avg.end())
            os << " (avg over both orders: " << round2(avg->second) << ")";
        os << "\n\n";

        const auto& seg = benchmark.segment(config.benchmark_segment);
        os << "| attribute | WTP (HKD) | benchmark (" << segment_name(config.benchmark_segment)
           << ") | abs. deviation |\n|---|---|---|---|\n";
        for (const auto& attr : schema.attributes()) {
            if (attr.is_price) continue;
            auto it = wtp.wtp_hkd.find(attr.name);
            if (it == wtp.wtp_hkd.end()) continue;
            os << "| " << attr.name << " | " << round2(it->second) << " | ";
            auto hb = seg.find(attr.name);
            if (hb != seg.end()) {
                double human = config.adjust_benchmark_inflation
                                   ? adjust_inflation(hb->second, benchmark.cpi_from,
                                                      benchmark.cpi_to)
                                   : hb->second;
                os << round2(human);
            }
            os << " | ";
            if (wtp.deviations) {
                auto dv = wtp.deviations->per_attribute.find(attr.name);
                if (dv != wtp.deviations->per_attribute.end()) os << round2(dv->second);
            }
            os << " |\n";
        }
        if (wtp.deviations)
            os << "\nmean abs. deviation: " << round2(wtp.deviations->mean_abs)
               << ", median abs. deviation: " << round2(wtp.deviations->median_abs) << "\n";
        os << "\n";
    }
    atomic_write_file((fs::path(config.output_dir) / "summary.md").string(), os.str());
}

}  // namespace

int cmd_fit(const ExperimentConfig& config) {
    AttributeSchema schema = config.load_schema();
    BenchmarkTable benchmark = config.load_benchmark();
    auto dilemmas = load_or_build_dilemmas(config, schema);
    auto cells = grid_cells(config);

    parallel_for(cells.size(), config.workers, [&](std::size_t ci) {
        fit_cell(cells[ci], dilemmas, schema, benchmark, config);
    });

    RunManifest manifest;
    manifest.config_digest = config.digest();
    manifest.cells = cells;
    // order-averaged pseudo-R^2 where both runs fitted
    for (const auto& agent : config.agents) {
        for (const auto& variant : config.variants) {
            const CellEntry* n = manifest.find(agent.id, variant, false);
            const CellEntry* s = manifest.find(agent.id, variant, true);
            if (n && s && n->status == "fit" && s->status == "fit")
                manifest.pseudo_r2_avg[agent.id + "/" + variant] =
                    0.5 * (n->pseudo_r2 + s->pseudo_r2);
        }
    }
    manifest.save(config.output_dir);
    render_summary(config, manifest, benchmark, schema);

    bool any_flagged = false, any_failed = false;
    for (const auto& c : cells) {
        if (c.status == "flagged") any_flagged = true;
        if (c.status == "failed") any_failed = true;
    }
    if (any_failed) return 1;
    return any_flagged ? 2 : 0;
}

int cmd_robustness(const ExperimentConfig& config) {
    RunManifest manifest = RunManifest::load(config.output_dir);
    json report;
    report["cells"] = json::array();
    std::ostringstream md;
    md << "# Robustness report\n\n";

    for (const auto& agent : config.agents) {
        for (const auto& variant : config.variants) {
            const CellEntry* n = manifest.find(agent.id, variant, false);
            const CellEntry* s = manifest.find(agent.id, variant, true);
            if (!n || !s) throw MissingCounterpartRunError(agent.id + "/" + variant);
            json cell;
            cell["agent_id"] = agent.id;
            cell["variant_id"] = variant;
            cell["normal_status"] = n->status;
            cell["swapped_status"] = s->status;
            md << "## " << agent.id << "/" << variant << "\n\n";
            if (n->status != "fit" || s->status != "fit") {
                cell["note"] = "one or both order runs not fitted";
                md << "normal: " << n->status << " " << n->flag << ", swapped: " << s->status
                   << " " << s->flag << "\n\n";
                report["cells"].push_back(std::move(cell));
                continue;
            }
            MnlFit fn = MnlFit::from_json_text(read_file(n->fit_path));
            MnlFit fsw = MnlFit::from_json_text(read_file(s->fit_path));
            WtpReport wn = WtpReport::from_json_text(read_file(n->wtp_path));
            WtpReport ws = WtpReport::from_json_text(read_file(s->wtp_path));

            cell["asc"] = {{"normal", {{"coef", fn.asc}, {"p", fn.asc_p}}},
                           {"swapped", {{"coef", fsw.asc}, {"p", fsw.asc_p}}}};
            json wtp_side = json::object();
            json wtp_avg = json::object();
            md << "| attribute | WTP normal | WTP swapped | WTP averaged |\n|---|---|---|---|\n";
            for (const auto& [attr, v] : wn.wtp_hkd) {
                auto it = ws.wtp_hkd.find(attr);
                double sv = it != ws.wtp_hkd.end() ? it->second : 0.0;
                wtp_side[attr] = {{"normal", v}, {"swapped", sv}};
                wtp_avg[attr] = 0.5 * (v + sv);
                md << "| " << attr << " | " << round2(v) << " | " << round2(sv) << " | "
                   << round2(0.5 * (v + sv)) << " |\n";
            }
            cell["wtp"] = wtp_side;
            cell["wtp_order_averaged"] = wtp_avg;
            cell["pseudo_r2_avg"] = 0.5 * (fn.pseudo_r2 + fsw.pseudo_r2);
            md << "\nASC normal " << round2(fn.asc) << " (p=" << round2(fn.asc_p)
               << "), swapped " << round2(fsw.asc) << " (p=" << round2(fsw.asc_p) << ")\n\n";
            report["cells"].push_back(std::move(cell));
        }
    }
    atomic_write_file((fs::path(config.output_dir) / "robustness.json").string(), report.dump(2));
    atomic_write_file((fs::path(config.output_dir) / "robustness.md").string(), md.str());
    return 0;
}

int cmd_report(const ExperimentConfig& config) {
    RunManifest manifest = RunManifest::load(config.output_dir);
    render_summary(config, manifest, config.load_benchmark(), config.load_schema());
    return 0;
}

}  // namespace choiceforge
