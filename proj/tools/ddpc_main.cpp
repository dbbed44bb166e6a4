// ddpc: run, compare, and validate data-driven predictive control
// configurations. See presets/ for ready-made configuration files.

#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "ddpc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"data-driven predictive control workbench"};
    app.require_subcommand(1);

    ddpc::CliOptions opt;
    std::string out;
    std::uint64_t seed = 0;

    CLI::App* run = app.add_subcommand("run", "execute one configured controller, write CSV + metrics");
    CLI::App* cmp = app.add_subcommand("compare",
                                       "run every configured controller on identical streams");
    CLI::App* val = app.add_subcommand("validate",
                                       "schema/invariant check only; prints derived quantities");
    for (CLI::App* sub : {run, cmp, val}) {
        sub->add_option("--config", opt.config_path, "configuration file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "run seed (overrides the config)");
        sub->add_flag("--quiet", opt.quiet, "suppress stdout reporting");
    }

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out") > 0) opt.out_dir = out;
    if (sub->count("--seed") > 0) opt.seed = seed;

    if (sub == run) return ddpc::cmd_run(opt);
    if (sub == cmp) return ddpc::cmd_compare(opt);
    return ddpc::cmd_validate(opt);
}
