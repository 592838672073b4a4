#include "nlflow/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"nlflow: nonlocal conservation laws, sensitivities and audits"};
    app.require_subcommand(1, 1);
    nlflow::cli::Options opt;
    std::uint64_t seed = 0;
    for (const auto& name : nlflow::cli::commands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "run descriptor (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory (default: descriptor output_dir)");
        sub->add_option("--seed", seed, "override the descriptor seed");
        sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nlflow::cli::config_error;
    }
    auto* sub = app.get_subcommands().front();
    opt.command = sub->get_name();
    if (sub->count("--seed") > 0) opt.seed = seed;
    return nlflow::cli::run(opt, std::cout, std::cerr);
}
