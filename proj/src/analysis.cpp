#include <algorithm>
#include <cmath>

#include "harness_detail.hpp"
#include "tensometa/common.hpp"
#include "tensometa/graddiff.hpp"
#include "tensometa/harness.hpp"
#include "tensometa/model.hpp"
#include "tensometa/ntk.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";

constexpr double kExactTolerance = 1e-10;

std::vector<double> gaussian(std::size_t n, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// forward() recomputed entry by entry: for every (input, output) multi-index,
// multiply the r x r core slices left to right.
std::vector<double> elementwise_forward(const tt::TTGenerator& g, std::span<const double> x) {
    const auto& s = g.spec();
    const std::size_t order = s.order();
    std::vector<double> y(g.bias());
    std::vector<std::size_t> i(order), j(order);
    for (std::size_t in = 0; in < s.input_length(); ++in) {
        std::size_t rem = in;
        for (std::size_t k = order; k-- > 0; rem /= s.input_dims[k]) i[k] = rem % s.input_dims[k];
        for (std::size_t out = 0; out < s.output_length(); ++out) {
            rem = out;
            for (std::size_t k = order; k-- > 0; rem /= s.output_dims[k]) j[k] = rem % s.output_dims[k];
            std::vector<double> row{1.0};
            for (std::size_t k = 0; k < order; ++k) {
                std::vector<double> next(s.ranks[k + 1], 0.0);
                for (std::size_t a = 0; a < s.ranks[k]; ++a)
                    for (std::size_t b = 0; b < s.ranks[k + 1]; ++b) next[b] += row[a] * g.at(k, a, i[k], j[k], b);
                row = std::move(next);
            }
            y[out] += row[0] * x[in];
        }
    }
    return y;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

} // namespace

// Self-test -----------------------------------------------------------------

void SelfTestConfig::validate() const {
    if (tensors == 0) throw Error(kModule, "tt-selftest: 'tensors' must be positive");
}

ExperimentResult run_tt_selftest(const SelfTestConfig& config, std::uint64_t seed) {
    config.validate();
    Table table{"selftest",
                {"tensor", "order", "rows", "cols", "roundtrip_error", "forward_error", "truncation_error",
                 "truncation_bound"},
                {}};
    std::vector<std::vector<double>> rows(config.tensors);
    parallel_for(config.tensors, [&](std::size_t t) {
        auto rng = make_rng(seed, stream::kData, t);
        std::uniform_int_distribution<std::size_t> in_dim(1, 4), out_dim(1, 3), rank(1, 3);
        const std::size_t order = 2 + t % 3;
        tt::TTSpec spec;
        spec.ranks.push_back(1);
        for (std::size_t k = 0; k < order; ++k) {
            spec.input_dims.push_back(in_dim(rng));
            spec.output_dims.push_back(out_dim(rng));
            spec.ranks.push_back(k + 1 == order ? 1 : rank(rng));
        }
        const std::size_t n_out = spec.output_length(), n_in = spec.input_length();

        linalg::Matrix dense(n_out, n_in);
        dense.data() = gaussian(n_out * n_in, rng);
        const auto full = tt::tt_svd(dense, spec.input_dims, spec.output_dims);
        const double roundtrip = max_abs_diff(tt::to_dense(full.generator).data(), dense.data());

        const auto gen = tt::TTGenerator::random(spec, derive_seed(seed, stream::kInit, t))
                             .with_bias(gaussian(n_out, rng));
        const auto x = gaussian(n_in, rng);
        const double forward_err = max_abs_diff(tt::forward(gen, x), elementwise_forward(gen, x));

        tt::TruncationOptions cut;
        for (std::size_t k = 1; k < order; ++k) cut.max_ranks.push_back(1 + (t + k) % 2);
        const auto truncated = tt::tt_svd(dense, spec.input_dims, spec.output_dims, cut);
        const auto approx = tt::to_dense(truncated.generator);
        double err = 0.0;
        for (std::size_t k = 0; k < approx.data().size(); ++k) err += std::pow(approx.data()[k] - dense.data()[k], 2);

        rows[t] = {static_cast<double>(t),     static_cast<double>(order), static_cast<double>(n_out),
                   static_cast<double>(n_in),  roundtrip,                  forward_err,
                   std::sqrt(err),             truncated.report.error_bound};
    });
    for (auto& r : rows) table.add_row(std::move(r));

    double worst_roundtrip = 0.0, worst_forward = 0.0;
    std::size_t bound_violations = 0;
    for (const auto& r : table.rows) {
        worst_roundtrip = std::max(worst_roundtrip, r[4]);
        worst_forward = std::max(worst_forward, r[5]);
        bound_violations += r[6] > r[7] * (1.0 + 1e-9) + 1e-12;
    }
    ExperimentResult result;
    result.kind = "tt-selftest";
    result.seed = seed;
    result.metrics = {{"max_roundtrip_error", worst_roundtrip},
                      {"max_forward_error", worst_forward},
                      {"bound_violations", static_cast<double>(bound_violations)},
                      {"tensors", static_cast<double>(config.tensors)}};
    result.checks = {
        {"roundtrip", worst_roundtrip <= kExactTolerance, "max |A - tt_svd(A)| = " + detail::fmt(worst_roundtrip)},
        {"forward_vs_oracle", worst_forward <= kExactTolerance, "max |error| = " + detail::fmt(worst_forward)},
        {"truncation_bound", bound_violations == 0, std::to_string(bound_violations) + " violations"}};
    result.tables.push_back(std::move(table));
    return result;
}

// Variance scaling ----------------------------------------------------------

void VarianceConfig::validate() const {
    if (qubit_counts.size() < 2) throw Error(kModule, "variance-scaling: 'qubit_counts' needs at least two entries");
    for (auto u : qubit_counts)
        if (u == 0) throw Error(kModule, "variance-scaling: 'qubit_counts' entries must be positive");
    if (!(sigma > 0.0)) throw Error(kModule, "variance-scaling: 'sigma' must be positive");
    if (trials < 1000) throw Error(kModule, "variance-scaling: 'trials' must be at least 1000");
    if (!(slope_min <= slope_max)) throw Error(kModule, "variance-scaling: 'slope_min' exceeds 'slope_max'");
    if (!(max_direct_spread >= 0.0)) throw Error(kModule, "variance-scaling: 'max_direct_spread' must be >= 0");
}

ExperimentResult run_variance_scaling(const VarianceConfig& config, std::uint64_t seed) {
    config.validate();
    const auto report = grad::variance_scaling_experiment(
        config.qubit_counts, grad::default_variance_builder(derive_seed(seed, stream::kInit)), config.sigma,
        config.trials, derive_seed(seed, stream::kVariance));

    Table table{"variance", {"qubits", "var_tt_empirical", "var_tt_analytic", "var_direct", "unscaled_c"}, {}};
    for (std::size_t i = 0; i < report.qubit_counts.size(); ++i)
        table.add_row({static_cast<double>(report.qubit_counts[i]), report.var_tt_empirical[i],
                       report.var_tt_analytic[i], report.var_direct[i], report.unscaled_c[i]});

    ExperimentResult result;
    result.kind = "variance-scaling";
    result.seed = seed;
    result.metrics = {{"slope", report.slope},
                      {"direct_spread", report.direct_spread},
                      {"sigma", report.sigma},
                      {"trials", static_cast<double>(report.trials)},
                      {"degenerate", report.degenerate ? 1.0 : 0.0}};
    result.checks = {
        {"tt_slope_window", report.slope >= config.slope_min && report.slope <= config.slope_max,
         "slope " + detail::fmt(report.slope) + " vs [" + detail::fmt(config.slope_min) + ", " +
             detail::fmt(config.slope_max) + "]"},
        {"direct_flat", report.direct_spread < config.max_direct_spread,
         "relative spread " + detail::fmt(report.direct_spread)}};
    if (report.degenerate) result.notes.push_back({"degenerate", "some Jacobian columns were identically zero"});
    result.tables.push_back(std::move(table));
    return result;
}

// NTK comparison --------------------------------------------------------------

void NtkConfig::validate() const {
    if (qubits == 0 || qubits > 12) throw Error(kModule, "ntk-compare: 'qubits' must lie in [1, 12]");
    if (layers == 0) throw Error(kModule, "ntk-compare: 'layers' must be positive");
    if (inputs == 0) throw Error(kModule, "ntk-compare: 'inputs' must be positive");
    if (seeds == 0) throw Error(kModule, "ntk-compare: 'seeds' must be positive");
    tt.validate();
    if (tt::param_count(tt).total() > 3 * qubits * layers)
        throw Error(kModule, "ntk-compare: 'tt' has " + std::to_string(tt::param_count(tt).total()) +
                                 " trainables, more than the " + std::to_string(3 * qubits * layers) +
                                 " circuit angles");
}

ExperimentResult run_ntk_compare(const NtkConfig& config, std::uint64_t seed) {
    config.validate();
    const auto circuit = qsim::build_ansatz(config.qubits, config.layers, qsim::Entangler::Ring);
    std::string word(config.qubits, 'I');
    word[0] = 'Z';
    const qsim::Hamiltonian readout(config.qubits, {{1.0, word}});
    const std::size_t len = config.tt.input_length();

    Table table{"ntk",
                {"seed", "lambda_min_tt", "lambda_min_direct", "trace_tt", "trace_direct", "rank_product", "c_emp_tt",
                 "asymmetry", "trace_identity_error"},
                {}};
    for (std::size_t s = 0; s < config.seeds; ++s) {
        const std::uint64_t run_seed = derive_seed(seed, s);
        auto rng = make_rng(run_seed, stream::kData);
        ntk::Inputs xs;
        for (std::size_t n = 0; n < config.inputs; ++n) xs.push_back(gaussian(len, rng));

        const model::TTParameterization tt_model(
            tt::TTGenerator::random(config.tt, derive_seed(run_seed, stream::kInit)), circuit.param_count);
        const model::DirectParameterization direct(
            model::random_angles(circuit.param_count, config.direct_init_range,
                                 derive_seed(run_seed, stream::kDirectInit)),
            model::block_mean_encoding(config.qubits, circuit.param_count, len, config.direct_encoding_scale), len);

        const auto k_tt = ntk::ntk_matrix(tt_model, xs, circuit, readout);
        const auto k_direct = ntk::ntk_matrix(direct, xs, circuit, readout);
        const auto trace_tt = ntk::trace_identity_check(k_tt, k_tt.grad_norms_sq, config.tt.rank_product());
        const auto trace_direct = ntk::trace_identity_check(k_direct, k_direct.grad_norms_sq, 1);
        table.add_row({static_cast<double>(s), ntk::min_eigenvalue(k_tt.gram), ntk::min_eigenvalue(k_direct.gram),
                       k_tt.trace(), k_direct.trace(), static_cast<double>(config.tt.rank_product()), trace_tt.c_emp,
                       std::max(linalg::max_asymmetry(k_tt.gram), linalg::max_asymmetry(k_direct.gram)),
                       std::max(trace_tt.identity_error, trace_direct.identity_error)});
    }

    std::size_t tt_wins = 0;
    double worst_lambda = 0.0, worst_asym = 0.0, worst_identity = 0.0;
    for (const auto& r : table.rows) {
        tt_wins += r[1] >= r[2];
        worst_lambda = std::min({worst_lambda, r[1], r[2]});
        worst_asym = std::max(worst_asym, r[7]);
        worst_identity = std::max(worst_identity, r[8]);
    }
    ExperimentResult result;
    result.kind = "ntk-compare";
    result.seed = seed;
    result.metrics = {{"fraction_tt_at_least_direct", static_cast<double>(tt_wins) / static_cast<double>(config.seeds)},
                      {"seeds", static_cast<double>(config.seeds)},
                      {"trainables_tt", static_cast<double>(tt::param_count(config.tt).total())},
                      {"params_direct", static_cast<double>(circuit.param_count)},
                      {"rank_product", static_cast<double>(config.tt.rank_product())}};
    result.checks = {
        {"gram_symmetric", worst_asym <= 1e-12, "max asymmetry " + detail::fmt(worst_asym)},
        {"gram_psd", worst_lambda >= -1e-8, "smallest eigenvalue seen " + detail::fmt(worst_lambda)},
        {"trace_identity", worst_identity <= kExactTolerance, "max |Tr - sum |grad|^2| " + detail::fmt(worst_identity)}};
    result.tables.push_back(std::move(table));
    return result;
}

} // namespace tensometa::harness
