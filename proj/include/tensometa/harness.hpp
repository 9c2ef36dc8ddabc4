#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tensometa/optim.hpp"
#include "tensometa/qsim.hpp"
#include "tensometa/ttcore.hpp"

namespace tensometa::harness {

// Results ------------------------------------------------------------------

/// Numeric table with named columns. Rows are kept in instance order.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] std::vector<double> values(const std::string& name) const;
    /// Recomputed from the rows on every call.
    [[nodiscard]] std::vector<double> column_means() const;
    void write_csv(std::ostream& out) const;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::string kind;
    std::uint64_t seed = 0;
    std::string fingerprint;
    std::vector<Table> tables;  // tables[0] is the per-instance table
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<Check> checks;

    [[nodiscard]] const Table& table(const std::string& name) const;
    [[nodiscard]] double metric(const std::string& name) const;
    [[nodiscard]] bool all_checks_pass() const;
    /// Summary document with the per-table column means, metrics and checks.
    void write_json(std::ostream& out) const;
};

// Graphs -------------------------------------------------------------------

struct Graph {
    std::size_t n = 0;
    std::vector<qsim::Edge> edges;  // u < v, sorted, no duplicates
};

/// Normalizes edge orientation and order; rejects self loops, duplicates and
/// out-of-range vertices.
[[nodiscard]] Graph make_graph(std::size_t n, std::vector<qsim::Edge> edges);
[[nodiscard]] Graph gen_erdos_renyi(std::size_t n, double p, std::uint64_t seed);

/// Degree histogram with n bins (counts / n), padded with zeros or truncated
/// to `length`.
[[nodiscard]] std::vector<double> graph_features(const Graph& g, std::size_t length);

/// Exhaustive maximum cut (n <= 24).
[[nodiscard]] std::size_t brute_force_maxcut(const Graph& g);

/// First non-comment line: vertex count; then one `u v` pair per line.
[[nodiscard]] Graph read_graph(std::istream& in);
[[nodiscard]] Graph load_graph(const std::string& path);
void write_graph(std::ostream& out, const Graph& g);

// Max-Cut ------------------------------------------------------------------

enum class MaxCutAnsatz { Qaoa, HardwareEfficient };

struct MaxCutConfig {
    std::size_t n = 12;
    double p_edge = 0.5;
    std::size_t num_graphs = 10;
    MaxCutAnsatz ansatz = MaxCutAnsatz::Qaoa;
    std::size_t depth = 3;  // QAOA depth, or layers of the hardware-efficient ansatz

    tt::TTSpec tt{{3, 4}, {2, 3}, {1, 2, 1}};
    /// Generator pre-training on separate random graphs (noiseless, Adam).
    std::size_t train_graphs = 16;
    std::size_t meta_epochs = 60;
    double meta_lr = 0.05;

    optim::DfoOptions dfo{0.5, 1e-6, 120, true};
    double direct_init_range = 3.141592653589793;
    qsim::NoiseSpec noise;
    qsim::Backend backend = qsim::Backend::Statevector;

    void validate() const;
};

[[nodiscard]] qsim::CircuitSpec maxcut_circuit(const Graph& g, const MaxCutConfig& config);

/// Maximizes <H> on each graph with both arms under equal evaluation budgets.
[[nodiscard]] ExperimentResult run_maxcut(const MaxCutConfig& config, std::uint64_t seed);
/// Same, on explicit graphs (all with config.n vertices or fewer).
[[nodiscard]] ExperimentResult run_maxcut(const MaxCutConfig& config, const std::vector<Graph>& graphs,
                                          std::uint64_t seed);

// VQE ----------------------------------------------------------------------

/// -J sum Z_k Z_{k+1} (open chain) - h sum X_k.
[[nodiscard]] qsim::Hamiltonian transverse_ising(std::size_t qubits, double coupling = 1.0,
                                                 double field = 1.0);

struct VqeConfig {
    std::size_t layers = 2;
    qsim::Entangler entangler = qsim::Entangler::Ring;
    /// Empty output_dims means: pick a default spec from the circuit size.
    tt::TTSpec tt;
    /// When false the TT bias stays at zero and only the cores are optimized.
    bool tt_train_bias = false;
    std::size_t seeds = 10;
    optim::DfoOptions dfo{0.5, 1e-6, 500, false};
    double direct_init_range = 3.141592653589793;
    qsim::NoiseSpec noise;
    qsim::Backend backend = qsim::Backend::DensityMatrix;

    void validate() const;
};

/// Default latent TT spec for the hardware-efficient ansatz of that size.
[[nodiscard]] tt::TTSpec default_vqe_spec(std::size_t qubits, std::size_t layers);

[[nodiscard]] ExperimentResult run_vqe(const qsim::Hamiltonian& h, const VqeConfig& config,
                                       std::uint64_t seed);

// Data ---------------------------------------------------------------------

enum class Split { Train, Test };

struct Sample {
    std::vector<double> x;
    int label = 0;
    Split split = Split::Train;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t side = 0;  // raster side length when known, else 0

    [[nodiscard]] std::size_t feature_length() const;
    [[nodiscard]] std::size_t count(Split split) const;
    /// Throws unless every label is 0/1 and feature lengths agree.
    void validate() const;
};

/// Synthetic charge-stability rasters: class 0 carries one family of parallel
/// diagonal transition lines, class 1 two crossing families with bright
/// anticrossing spots. Classes alternate, so any prefix is balanced; the last
/// `test_count` samples are tagged as test.
[[nodiscard]] Dataset synth_quantum_dot(std::size_t n_samples, std::size_t side, std::uint64_t seed,
                                        double pixel_noise = 0.05, std::size_t test_count = 0);

/// Directory with `manifest.txt` (lines `<file> <label> [train|test]`) and one
/// text raster per sample. Pixels are min-max normalized over the whole dataset.
[[nodiscard]] Dataset load_dataset(const std::string& dir);
/// Writes rasters plus manifest in the format read by load_dataset.
void write_dataset(const std::string& dir, const Dataset& data);

// Classification -----------------------------------------------------------

struct ClassifierConfig {
    std::size_t qubits = 8;
    std::size_t layers = 3;
    tt::TTSpec tt{{5, 10, 5, 10}, {4, 2, 3, 9}, {1, 2, 2, 2, 1}};
    std::size_t epochs = 20;
    double lr = 0.001;
    std::size_t batch_size = 10;
    double temperature = 0.2;
    /// Fixed input encoding scale of the direct arm (block means on layer-0 RY).
    double direct_encoding_scale = 3.141592653589793;
    double direct_init_range = 3.141592653589793;
    bool run_direct = true;
    /// Additive Gaussian noise on the angle gradient, as from finite shots.
    double gradient_sigma = 0.0;

    void validate() const;
};

/// P(label 1) from the Z readout on qubit 0.
[[nodiscard]] double class_probability(double z_expectation, double temperature);

[[nodiscard]] ExperimentResult run_classifier(const Dataset& data, const ClassifierConfig& config,
                                              std::uint64_t seed);

// Analysis drivers -------------------------------------------------------------

struct SelfTestConfig {
    std::size_t tensors = 20;

    void validate() const;
};

/// TT-SVD round trips, forward contraction against an element-wise oracle, and
/// truncation error against the discarded-singular-value bound on random tensors.
[[nodiscard]] ExperimentResult run_tt_selftest(const SelfTestConfig& config, std::uint64_t seed);

struct VarianceConfig {
    std::vector<std::size_t> qubit_counts{4, 8, 16};
    double sigma = 0.1;
    std::size_t trials = 10000;
    /// Acceptance window for the log-log slope of the TT-core variance.
    double slope_min = -1.3;
    double slope_max = -0.7;
    /// Largest relative spread (max - min) / mean allowed for the direct variance.
    double max_direct_spread = 0.1;

    void validate() const;
};

[[nodiscard]] ExperimentResult run_variance_scaling(const VarianceConfig& config, std::uint64_t seed);

struct NtkConfig {
    std::size_t qubits = 4;
    std::size_t layers = 2;
    std::size_t inputs = 8;
    std::size_t seeds = 10;
    /// Input length fixes the feature length; the output is fitted to 3UL.
    tt::TTSpec tt{{2, 2}, {2, 3}, {1, 1, 1}};
    double direct_encoding_scale = 3.141592653589793;
    double direct_init_range = 3.141592653589793;

    void validate() const;
};

/// NTKs of both parameterizations at initialization on shared random inputs,
/// with the Z readout on qubit 0. Reports the fraction of seeds where the TT
/// kernel's smallest eigenvalue is at least the direct one.
[[nodiscard]] ExperimentResult run_ntk_compare(const NtkConfig& config, std::uint64_t seed);

} // namespace tensometa::harness
