#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "tensometa/cli.hpp"
#include "tensometa/common.hpp"
#include "tensometa/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tensor-train guided variational circuit experiments"};
    std::string config_path, out;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    bool validate_only = false;
    app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--out", out, "output directory (overrides the config)");
    app.add_option("--threads", threads, "worker threads (default: TENSOMETA_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--validate", validate_only, "print the normalized config and its fingerprint, then exit");
    app.set_version_flag("--version", std::string(tensometa::kVersion));
    CLI11_PARSE(app, argc, argv);

    try {
        auto config = tensometa::cli::load_config(config_path);
        if (*seed_opt) config.seed = seed;
        if (!out.empty()) config.output_dir = out;
        if (threads > 0) tensometa::set_thread_count(threads);
        if (validate_only) {
            std::cout << config.canonical() << '\n' << "fingerprint " << config.fingerprint() << '\n';
            return 0;
        }
        return tensometa::cli::run(config, std::cerr).exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
