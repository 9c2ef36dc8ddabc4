#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tensometa/linalg.hpp"
#include "tensometa/model.hpp"
#include "tensometa/qsim.hpp"

namespace tensometa::ntk {

using Inputs = std::vector<std::vector<double>>;

struct NTKMatrix {
    linalg::Matrix gram;                  // N x N, gram(n, m) = <grad f(x_n), grad f(x_m)>
    model::Kind kind = model::Kind::TensoMeta;
    std::uint64_t inputs_fingerprint = 0;
    std::vector<double> grad_norms_sq;    // ||grad f(x_n)||^2 per input

    [[nodiscard]] std::size_t size() const noexcept { return gram.rows(); }
    [[nodiscard]] double trace() const;
};

/// Per-input parameter gradients stacked as rows (N x trainable_count).
[[nodiscard]] linalg::Matrix stacked_gradients(const model::Parameterization& model,
                                               const Inputs& inputs,
                                               const qsim::CircuitSpec& circuit,
                                               const qsim::Hamiltonian& h);

/// Gradients are evaluated concurrently; the Gram product is assembled serially.
[[nodiscard]] NTKMatrix ntk_matrix(const model::Parameterization& model, const Inputs& inputs,
                                   const qsim::CircuitSpec& circuit, const qsim::Hamiltonian& h);

/// Order-sensitive hash of the input vectors' bit patterns.
[[nodiscard]] std::uint64_t fingerprint(const Inputs& inputs);

/// Smallest eigenvalue by cyclic Jacobi. Rejects asymmetry above 1e-8.
[[nodiscard]] double min_eigenvalue(const linalg::Matrix& sym);

struct TraceReport {
    double trace = 0.0;
    double grad_norm_sum = 0.0;   // sum_n ||grad f(x_n)||^2
    double identity_error = 0.0;  // |trace - grad_norm_sum|
    std::size_t rank_product = 1;
    double c_emp = 0.0;           // max_n ||grad f(x_n)||^2 / rank_product
    double bound = 0.0;           // N * c_emp * rank_product
    bool identity_holds = false;  // identity_error <= 1e-10 * max(1, trace)
    bool bound_holds = false;
};

[[nodiscard]] TraceReport trace_identity_check(const NTKMatrix& ntk,
                                               std::span<const double> grad_norms_sq,
                                               std::size_t rank_product);

struct ConditioningReport {
    std::uint64_t seed = 0;
    double lambda_min_tt = 0.0;
    double lambda_min_direct = 0.0;
    double trace_tt = 0.0;
    double trace_direct = 0.0;
    std::size_t rank_product = 1;
    double c_emp_tt = 0.0;
};

struct ConditioningSummary {
    std::vector<ConditioningReport> rows;
    std::size_t tt_at_least_direct = 0;  // seeds with lambda_min_tt >= lambda_min_direct

    [[nodiscard]] double fraction() const {
        return rows.empty() ? 0.0 : static_cast<double>(tt_at_least_direct) / rows.size();
    }
};

using ModelFactory = std::function<std::unique_ptr<model::Parameterization>(std::uint64_t seed)>;
using InputFactory = std::function<Inputs(std::uint64_t seed)>;

/// Builds both models per seed on the same circuit and inputs and compares
/// their NTKs at initialization.
[[nodiscard]] ConditioningSummary compare_conditioning(const ModelFactory& tt_model,
                                                       const ModelFactory& direct_model,
                                                       const InputFactory& inputs,
                                                       const qsim::CircuitSpec& circuit,
                                                       const qsim::Hamiltonian& h,
                                                       std::span<const std::uint64_t> seeds);

/// Columns: seed, lambda_min_tt, lambda_min_direct, trace_tt, trace_direct, rank_product.
void write_csv(std::ostream& out, const ConditioningSummary& summary);

/// Diagnostic fit of loss(t) ~ c0 * exp(-rate * t) by least squares on log loss.
/// Non-positive losses are skipped; fewer than two usable points give rate 0.
struct DecayFit {
    double rate = 0.0;
    double c0 = 0.0;
    std::size_t points = 0;
};

[[nodiscard]] DecayFit fit_exponential_decay(std::span<const double> losses);

} // namespace tensometa::ntk
