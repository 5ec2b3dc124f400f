#include "commands.hpp"

#include <CLI11.hpp>

#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Shared reconstruction graph zero-shot learning"};
    app.require_subcommand(1);

    std::string config;
    int threads = -1;
    std::uint64_t seed = 0;

    const std::pair<const char*, const char*> commands[] = {
        {"gen", "Generate a planted synthetic dataset"},
        {"fit", "Learn the graph and synthesize unseen prototypes"},
        {"eval", "Evaluate a model under the ZSL or GZSL protocol"},
        {"cluster", "Spectral clustering of classes on the learned graph"},
        {"tune", "Cross-validate lambda and gamma over seen classes"},
        {"shift-report", "Normalized pairwise-distance comparison of two spaces"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "key=value config file")->required();
        sub->add_option("--threads", threads, "worker threads (0 = runtime default)");
        sub->add_option("--seed", seed, "override the config seed");
    }

    CLI11_PARSE(app, argc, argv);

    srg::cli::Overrides o;
    const auto* sub = app.get_subcommands().front();
    if (sub->count("--threads") > 0) {
        o.threads = threads;
    }
    if (sub->count("--seed") > 0) {
        o.seed = seed;
    }
    return srg::cli::run(sub->get_name(), config, o);
}
