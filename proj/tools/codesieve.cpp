// SPDX-License-Identifier: Apache-2.0
//
// codesieve — batch CLI over the corpus-curation pipeline. One subcommand
// per stage plus "recipe" for the named stage DAGs. Machine-readable stage
// summaries go to stdout (suppressed by --quiet); logs go to stderr.
//
// Exit codes: 0 success, 2 usage, 3 config validation, 4 stage failure,
// 5 upstream artifact missing.

#include "codesieve/errors.hpp"
#include "codesieve/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitStage = 4;
constexpr int kExitUpstream = 5;

struct GlobalOptions {
    std::string config_path = "codesieve.json";
    std::vector<std::string> overrides;
    bool quiet = false;
};

void log_line(const std::string& msg) {
    std::fprintf(stderr, "codesieve: %s\n", msg.c_str());
}

int run(const GlobalOptions& global, const std::string& command, const std::string& recipe) {
    try {
        const auto config = codesieve::PipelineConfig::load(global.config_path, global.overrides);
        std::vector<codesieve::StageSummary> summaries;
        if (command == "recipe") {
            summaries = codesieve::run_recipe(config, recipe);
        } else {
            summaries.push_back(codesieve::run_stage(config, command));
        }
        for (const auto& s : summaries) {
            log_line(s.stage + " done in " + std::to_string(s.wall_ms) + " ms");
            if (!global.quiet) std::cout << s.to_json_line() << "\n";
        }
        return 0;
    } catch (const codesieve::ConfigError& e) {
        log_line(std::string("config error: ") + e.what());
        return kExitConfig;
    } catch (const codesieve::UpstreamMissingError& e) {
        log_line(std::string("upstream missing: ") + e.what());
        return kExitUpstream;
    } catch (const std::exception& e) {
        log_line(std::string("stage failed: ") + e.what());
        return kExitStage;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codesieve — three-phase code corpus curation pipeline"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("-c,--config", global.config_path, "Pipeline configuration file")
        ->envname("CODESIEVE_CONFIG");
    app.add_option("-s,--set", global.overrides,
                   "Override a config value, e.g. --set selection.repetitions=2");
    app.add_flag("-q,--quiet", global.quiet, "Suppress stage summaries on stdout");

    for (const auto& stage : codesieve::stage_names()) {
        app.add_subcommand(stage, "Run the " + stage + " stage");
    }
    auto* recipe_cmd = app.add_subcommand("recipe", "Run a named stage DAG");
    std::string recipe_name;
    recipe_cmd->add_option("name", recipe_name, "Recipe name")
        ->required()
        ->check(CLI::IsMember(codesieve::recipe_names()));
    auto* version_cmd = app.add_subcommand("version", "Print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (version_cmd->parsed()) {
        std::cout << "codesieve " << codesieve::tool_version() << "\n";
        return 0;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    return run(global, command, recipe_name);
}
