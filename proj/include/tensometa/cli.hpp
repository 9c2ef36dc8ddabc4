#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tensometa/harness.hpp"

namespace tensometa::cli {

enum class ExperimentKind { MaxCut, Vqe, Classify, VarianceScaling, NtkCompare, TtSelftest };

[[nodiscard]] ExperimentKind parse_kind(const std::string& name);
[[nodiscard]] std::string to_string(ExperimentKind kind);

/// Where the VQE Hamiltonian comes from: the built-in transverse-field chain or
/// a Pauli-term file.
struct HamiltonianSource {
    std::string file;  // empty means the built-in chain
    std::size_t qubits = 2;
    double coupling = 1.0;
    double field = 1.0;
};

struct DataSource {
    std::string directory;  // empty means synthetic
    std::size_t samples = 600;
    std::size_t side = 50;
    double pixel_noise = 0.05;
    std::size_t test_samples = 100;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::TtSelftest;
    std::uint64_t seed = 1;
    std::string output_dir;
    /// When false the exit status ignores failed checks.
    bool enforce_checks = true;

    harness::MaxCutConfig maxcut;
    std::vector<std::string> graph_files;  // explicit Max-Cut instances instead of random graphs
    harness::VqeConfig vqe;
    HamiltonianSource hamiltonian;
    harness::ClassifierConfig classify;
    DataSource data;
    harness::VarianceConfig variance;
    harness::NtkConfig ntk;
    harness::SelfTestConfig selftest;

    /// Normalized JSON of every semantic field (defaults filled in, keys sorted,
    /// output directory excluded).
    [[nodiscard]] std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    [[nodiscard]] std::string fingerprint() const;
};

/// Parses a JSON document. Unknown keys, type mismatches and constraint
/// violations throw tensometa::Error naming the key. Relative paths inside the
/// document are resolved against `base_dir` when it is non-empty.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "");
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

/// Runs the experiment without touching the file system for output.
[[nodiscard]] harness::ExperimentResult execute(const ExperimentConfig& config);

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 a check failed, 2 error
    std::string output_dir;
    harness::ExperimentResult result;
};

/// Executes and writes `<table>.csv`, summary.json, config.json and run.log into
/// config.output_dir. Artifacts are assembled in a temporary sibling directory
/// that is renamed into place only after everything has been written.
[[nodiscard]] RunOutcome run(const ExperimentConfig& config, std::ostream& log);

} // namespace tensometa::cli
