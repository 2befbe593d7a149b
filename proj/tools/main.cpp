#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "choiceforge/experiment.hpp"

using namespace choiceforge;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> variants;
    std::vector<std::string> agents;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config JSON")->required();
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "Design seed (overrides config)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--variant", opts.variants, "Restrict to these variant ids");
    cmd->add_option("--agent", opts.agents, "Restrict to these agent ids");
}

ExperimentConfig load_config(const CommonOpts& opts) {
    ExperimentConfig config = ExperimentConfig::load(opts.config_path);
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (opts.seed_set) config.design_seed = opts.seed;
    if (!opts.variants.empty()) {
        for (const auto& v : opts.variants)
            if (std::find(config.variants.begin(), config.variants.end(), v) ==
                config.variants.end())
                throw ConfigError("--variant " + v + " not in config");
        config.variants = opts.variants;
    }
    if (!opts.agents.empty()) {
        std::vector<AgentSpec> keep;
        for (const auto& id : opts.agents) {
            auto it = std::find_if(config.agents.begin(), config.agents.end(),
                                   [&](const AgentSpec& a) { return a.id == id; });
            if (it == config.agents.end()) throw ConfigError("--agent " + id + " not in config");
            keep.push_back(*it);
        }
        config.agents = keep;
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-choice experiment toolkit: dilemma generation, agent querying, "
                 "multinomial logit estimation, and willingness-to-pay reports"};
    app.require_subcommand(1);

    CommonOpts gen_opts, run_opts, fit_opts, rob_opts, rep_opts;
    auto* gen = app.add_subcommand("generate", "Write the design, dilemmas, and prompt files");
    add_common(gen, gen_opts);
    auto* run = app.add_subcommand("run", "Query agents and write choice record files");
    add_common(run, run_opts);
    auto* fit = app.add_subcommand("fit", "Fit MNL models and derive WTP reports");
    add_common(fit, fit_opts);
    auto* rob = app.add_subcommand("robustness", "Order/currency robustness report");
    add_common(rob, rob_opts);
    auto* rep = app.add_subcommand("report", "Re-render the markdown summary");
    add_common(rep, rep_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(load_config(gen_opts));
        if (run->parsed()) return cmd_run(load_config(run_opts));
        if (fit->parsed()) return cmd_fit(load_config(fit_opts));
        if (rob->parsed()) return cmd_robustness(load_config(rob_opts));
        if (rep->parsed()) return cmd_report(load_config(rep_opts));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
