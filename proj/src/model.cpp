#include "tensometa/model.hpp"

#include <random>

#include "tensometa/common.hpp"
#include "tensometa/graddiff.hpp"

namespace tensometa::model {
namespace {
constexpr std::string_view kModule = "model";

void check_input(std::size_t expected, std::span<const double> x) {
    if (x.size() != expected)
        throw Error(kModule, "input has " + std::to_string(x.size()) + " entries, expected " +
                                 std::to_string(expected));
}
} // namespace

std::string to_string(Kind kind) { return kind == Kind::TensoMeta ? "tensometa" : "direct-vqc"; }

std::vector<double> Parameterization::gradient(std::span<const double> x,
                                               const qsim::CircuitSpec& circuit,
                                               const qsim::Hamiltonian& h) const {
    const auto w = angles(x);
    const auto grad_w = grad::grad_wrt_angles(circuit, w, h);
    return grad::chain_to_cores(grad_w, angle_jacobian(x));
}

double Parameterization::output(std::span<const double> x, const qsim::CircuitSpec& circuit,
                                const qsim::Hamiltonian& h) const {
    return qsim::expectation(qsim::simulate_state(circuit, angles(x)), h);
}

// ---------------------------------------------------------------------------

TTParameterization::TTParameterization(tt::TTGenerator gen, std::size_t angle_count,
                                       bool bias_only)
    : gen_(std::move(gen)), angle_count_(angle_count), bias_only_(bias_only) {
    if (angle_count_ == 0) throw Error(kModule, "angle count must be positive");
}

std::size_t TTParameterization::trainable_count() const {
    const auto c = tt::param_count(gen_.spec());
    return bias_only_ ? c.bias : c.total();
}

std::vector<double> TTParameterization::params() const {
    return bias_only_ ? gen_.bias() : gen_.flat_params();
}

void TTParameterization::set_params(std::span<const double> theta) {
    if (theta.size() != trainable_count())
        throw Error(kModule, "expected " + std::to_string(trainable_count()) + " parameters, got " +
                                 std::to_string(theta.size()));
    if (bias_only_)
        gen_ = gen_.with_bias(std::vector<double>(theta.begin(), theta.end()));
    else
        gen_ = tt::TTGenerator::from_flat(gen_.spec(), theta);
}

std::vector<double> TTParameterization::angles(std::span<const double> x) const {
    return tt::fit_length(tt::forward(gen_, x), angle_count_);
}

linalg::Matrix TTParameterization::angle_jacobian(std::span<const double> x) const {
    auto full = tt::fit_rows(tt::jacobian(gen_, x), angle_count_);
    if (!bias_only_) return full;
    const std::size_t offset = tt::param_count(gen_.spec()).cores;
    linalg::Matrix out(full.rows(), full.cols() - offset);
    for (std::size_t r = 0; r < full.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = full(r, offset + c);
    return out;
}

// ---------------------------------------------------------------------------

DirectParameterization::DirectParameterization(std::vector<double> w, linalg::Matrix encoding,
                                               std::size_t input_length)
    : w_(std::move(w)), encoding_(std::move(encoding)), input_length_(input_length) {
    if (w_.empty()) throw Error(kModule, "direct parameterization needs at least one angle");
    if (encoding_.rows() != 0 && (encoding_.rows() != w_.size() || encoding_.cols() != input_length_))
        throw Error(kModule, "encoding matrix must be " + std::to_string(w_.size()) + " x " +
                                 std::to_string(input_length_));
}

void DirectParameterization::set_params(std::span<const double> theta) {
    if (theta.size() != w_.size())
        throw Error(kModule, "expected " + std::to_string(w_.size()) + " parameters, got " +
                                 std::to_string(theta.size()));
    w_.assign(theta.begin(), theta.end());
}

std::vector<double> DirectParameterization::angles(std::span<const double> x) const {
    check_input(input_length_, x);
    auto out = w_;
    if (encoding_.rows() != 0) {
        const auto ex = linalg::multiply(encoding_, x);
        for (std::size_t u = 0; u < out.size(); ++u) out[u] += ex[u];
    }
    return out;
}

linalg::Matrix DirectParameterization::angle_jacobian(std::span<const double> x) const {
    check_input(input_length_, x);
    return linalg::Matrix::identity(w_.size());
}

linalg::Matrix block_mean_encoding(std::size_t qubits, std::size_t angle_count,
                                   std::size_t input_length, double scale) {
    if (qubits == 0 || 3 * qubits > angle_count)
        throw Error(kModule, "block_mean_encoding: circuit too small for " + std::to_string(qubits) +
                                 " qubits");
    if (input_length < qubits)
        throw Error(kModule, "block_mean_encoding: input shorter than the qubit count");
    linalg::Matrix e(angle_count, input_length);
    for (std::size_t u = 0; u < qubits; ++u) {
        const std::size_t begin = u * input_length / qubits;
        const std::size_t end = (u + 1) * input_length / qubits;
        const double w = scale / static_cast<double>(end - begin);
        for (std::size_t i = begin; i < end; ++i) e(3 * u + 1, i) = w;
    }
    return e;
}

std::vector<double> random_angles(std::size_t count, double range, std::uint64_t seed) {
    auto rng = make_rng(seed, stream::kDirectInit);
    std::uniform_real_distribution<double> dist(-range, range);
    std::vector<double> out(count);
    for (auto& v : out) v = dist(rng);
    return out;
}

} // namespace tensometa::model
