#include "tensometa/ntk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tensometa/common.hpp"
#include "tensometa/graddiff.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::ntk {
namespace {
constexpr std::string_view kModule = "ntk";
} // namespace

double NTKMatrix::trace() const {
    double t = 0.0;
    for (std::size_t n = 0; n < gram.rows(); ++n) t += gram(n, n);
    return t;
}

linalg::Matrix stacked_gradients(const model::Parameterization& model, const Inputs& inputs,
                                 const qsim::CircuitSpec& circuit, const qsim::Hamiltonian& h) {
    if (inputs.empty()) throw Error(kModule, "at least one input is required");
    const std::size_t d = model.input_length();
    for (std::size_t n = 0; n < inputs.size(); ++n)
        if (inputs[n].size() != d)
            throw Error(kModule, "input " + std::to_string(n) + " has " +
                                     std::to_string(inputs[n].size()) + " entries, expected " +
                                     std::to_string(d));
    linalg::Matrix rows(inputs.size(), model.trainable_count());
    parallel_for(inputs.size(), [&](std::size_t n) {
        const auto g = model.gradient(inputs[n], circuit, h);
        std::copy(g.begin(), g.end(), rows.row(n).begin());
    });
    return rows;
}

NTKMatrix ntk_matrix(const model::Parameterization& model, const Inputs& inputs,
                     const qsim::CircuitSpec& circuit, const qsim::Hamiltonian& h) {
    const auto rows = stacked_gradients(model, inputs, circuit, h);
    NTKMatrix out;
    out.kind = model.kind();
    out.inputs_fingerprint = fingerprint(inputs);
    out.gram = linalg::gram_rows(rows);
    // gram_rows fills both triangles from the same products; enforce exact symmetry anyway.
    for (std::size_t i = 0; i < out.gram.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) out.gram(i, j) = out.gram(j, i);
    out.grad_norms_sq.resize(inputs.size());
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const auto r = rows.row(n);
        out.grad_norms_sq[n] = linalg::dot(r, r);
    }
    return out;
}

std::uint64_t fingerprint(const Inputs& inputs) {
    std::uint64_t h = mix64(inputs.size());
    for (const auto& x : inputs) {
        h = mix64(h ^ x.size());
        for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

double min_eigenvalue(const linalg::Matrix& sym) {
    if (sym.rows() != sym.cols() || sym.rows() == 0)
        throw Error(kModule, "min_eigenvalue needs a non-empty square matrix");
    const double asym = linalg::max_asymmetry(sym);
    if (asym > 1e-8)
        throw Error(kModule, "min_eigenvalue: matrix is not symmetric (max |a_ij - a_ji| = " +
                                 std::to_string(asym) + ")");
    return linalg::jacobi_eigen(sym, false, 1e-12).values.front();
}

TraceReport trace_identity_check(const NTKMatrix& ntk, std::span<const double> grad_norms_sq,
                                 std::size_t rank_product) {
    if (grad_norms_sq.size() != ntk.size())
        throw Error(kModule, "trace_identity_check: " + std::to_string(grad_norms_sq.size()) +
                                 " gradient norms for an NTK of size " + std::to_string(ntk.size()));
    if (rank_product == 0) throw Error(kModule, "trace_identity_check: rank product must be positive");
    TraceReport r;
    r.trace = ntk.trace();
    double max_norm = 0.0;
    for (double g : grad_norms_sq) {
        r.grad_norm_sum += g;
        max_norm = std::max(max_norm, g);
    }
    r.identity_error = std::abs(r.trace - r.grad_norm_sum);
    r.rank_product = rank_product;
    r.c_emp = max_norm / static_cast<double>(rank_product);
    r.bound = static_cast<double>(ntk.size()) * r.c_emp * static_cast<double>(rank_product);
    r.identity_holds = r.identity_error <= 1e-10 * std::max(1.0, r.trace);
    r.bound_holds = r.trace <= r.bound * (1.0 + 1e-12) + 1e-300;
    return r;
}

ConditioningSummary compare_conditioning(const ModelFactory& tt_model,
                                         const ModelFactory& direct_model,
                                         const InputFactory& inputs,
                                         const qsim::CircuitSpec& circuit,
                                         const qsim::Hamiltonian& h,
                                         std::span<const std::uint64_t> seeds) {
    ConditioningSummary summary;
    for (const std::uint64_t seed : seeds) {
        const auto tt = tt_model(seed);
        const auto direct = direct_model(seed);
        if (tt->trainable_count() > circuit.param_count)
            throw Error(kModule, "TT model has " + std::to_string(tt->trainable_count()) +
                                     " trainables, more than the circuit's " +
                                     std::to_string(circuit.param_count) + " angles");
        const auto xs = inputs(seed);
        const auto k_tt = ntk_matrix(*tt, xs, circuit, h);
        const auto k_direct = ntk_matrix(*direct, xs, circuit, h);

        ConditioningReport row;
        row.seed = seed;
        row.lambda_min_tt = min_eigenvalue(k_tt.gram);
        row.lambda_min_direct = min_eigenvalue(k_direct.gram);
        row.trace_tt = k_tt.trace();
        row.trace_direct = k_direct.trace();
        if (const auto* p = dynamic_cast<const model::TTParameterization*>(tt.get()))
            row.rank_product = p->generator().spec().rank_product();
        row.c_emp_tt = trace_identity_check(k_tt, k_tt.grad_norms_sq, row.rank_product).c_emp;
        if (row.lambda_min_tt >= row.lambda_min_direct) ++summary.tt_at_least_direct;
        summary.rows.push_back(row);
    }
    return summary;
}

void write_csv(std::ostream& out, const ConditioningSummary& summary) {
    out << "seed,lambda_min_tt,lambda_min_direct,trace_tt,trace_direct,rank_product\n";
    char buf[256];
    for (const auto& r : summary.rows) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%zu\n",
                      static_cast<unsigned long long>(r.seed), r.lambda_min_tt,
                      r.lambda_min_direct, r.trace_tt, r.trace_direct, r.rank_product);
        out << buf;
    }
}

DecayFit fit_exponential_decay(std::span<const double> losses) {
    std::vector<double> t, y;
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] > 0.0 && std::isfinite(losses[i])) {
            t.push_back(static_cast<double>(i));
            y.push_back(std::log(losses[i]));
        }
    DecayFit fit;
    fit.points = t.size();
    if (t.size() < 2) return fit;
    const double slope = grad::fit_slope(t, y);
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= t.size();
    my /= t.size();
    fit.rate = -slope;
    fit.c0 = std::exp(my - slope * mt);
    return fit;
}

} // namespace tensometa::ntk
