#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tensometa/linalg.hpp"

namespace tensometa::tt {

/// Shape of a TT-matrix: core k maps input mode d_k to output mode o_k and has
/// bond dimensions ranks[k] x ranks[k+1]. Boundary ranks are one.
struct TTSpec {
    std::vector<std::size_t> input_dims;
    std::vector<std::size_t> output_dims;
    std::vector<std::size_t> ranks;

    /// Throws tensometa::Error naming the offending field.
    void validate() const;

    [[nodiscard]] std::size_t order() const noexcept { return input_dims.size(); }
    [[nodiscard]] std::size_t input_length() const;
    [[nodiscard]] std::size_t output_length() const;
    /// Number of entries of core k: r_{k-1} * d_k * o_k * r_k.
    [[nodiscard]] std::size_t core_size(std::size_t k) const;
    /// Product of all ranks r_0..r_K (equal to the interior product since r_0 = r_K = 1).
    [[nodiscard]] std::size_t rank_product() const;

    friend bool operator==(const TTSpec&, const TTSpec&) = default;
};

struct ParamCount {
    std::size_t cores = 0;
    std::size_t bias = 0;
    [[nodiscard]] std::size_t total() const noexcept { return cores + bias; }
};

[[nodiscard]] ParamCount param_count(const TTSpec& spec);

enum class InputMode { LatentGaussian, TaskFeatures };

struct TTInput {
    InputMode mode = InputMode::TaskFeatures;
    std::vector<double> values;

    /// z ~ N(0, I) of length input_length(), drawn from a seeded stream.
    static TTInput latent(const TTSpec& spec, std::uint64_t seed);
    static TTInput features(std::vector<double> x);
};

class TTGenerator {
public:
    TTGenerator() = default;
    TTGenerator(TTSpec spec, std::vector<std::vector<double>> cores, std::vector<double> bias);

    static TTGenerator zeros(TTSpec spec);
    /// Cores i.i.d. N(0, 1/(r_{k-1} d_k)), bias zero.
    static TTGenerator random(TTSpec spec, std::uint64_t seed);
    /// Inverse of flat_params().
    static TTGenerator from_flat(TTSpec spec, std::span<const double> params);

    [[nodiscard]] const TTSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const std::vector<std::vector<double>>& cores() const noexcept { return cores_; }
    [[nodiscard]] const std::vector<double>& core(std::size_t k) const { return cores_.at(k); }
    [[nodiscard]] const std::vector<double>& bias() const noexcept { return bias_; }

    [[nodiscard]] double at(std::size_t k, std::size_t a, std::size_t i, std::size_t j,
                            std::size_t b) const;

    /// All trainables: cores in order (row-major over a, i, j, b), then the bias.
    [[nodiscard]] std::vector<double> flat_params() const;
    [[nodiscard]] std::size_t trainable_count() const { return param_count(spec_).total(); }

    [[nodiscard]] TTGenerator with_core(std::size_t k, std::vector<double> core) const;
    [[nodiscard]] TTGenerator with_bias(std::vector<double> bias) const;

private:
    TTSpec spec_;
    std::vector<std::vector<double>> cores_;
    std::vector<double> bias_;
};

/// Left-to-right contraction of the cores against x, plus the bias.
[[nodiscard]] std::vector<double> forward(const TTGenerator& gen, std::span<const double> x);
[[nodiscard]] std::vector<double> forward(const TTGenerator& gen, const TTInput& input);

inline constexpr std::size_t kDefaultDenseBudget = std::size_t{1} << 24;

/// Full operator as a (prod o) x (prod d) matrix; forward(x) == dense * x + bias.
[[nodiscard]] linalg::Matrix to_dense(const TTGenerator& gen,
                                      std::size_t budget = kDefaultDenseBudget);

/// d forward / d flat_params(): (prod o) x trainable_count().
[[nodiscard]] linalg::Matrix jacobian(const TTGenerator& gen, std::span<const double> x);
[[nodiscard]] linalg::Matrix jacobian(const TTGenerator& gen, const TTInput& input);

struct TruncationOptions {
    /// Interior rank caps r_1..r_{K-1}; empty means uncapped.
    std::vector<std::size_t> max_ranks;
    /// Absolute Frobenius target; split evenly over the K-1 unfoldings. Zero keeps
    /// every nonzero singular value.
    double tolerance = 0.0;
};

struct TruncationReport {
    std::vector<std::size_t> kept_ranks;             // r_0..r_K
    std::vector<std::vector<double>> discarded;      // per unfolding k = 1..K-1
    double error_bound = 0.0;                        // sqrt of the discarded energy
    bool clamped = false;                            // a requested rank exceeded its unfolding
};

struct TTSvdResult {
    TTGenerator generator;  // bias is zero
    TruncationReport report;
};

/// Sequential-unfolding TT-SVD of a dense (prod o) x (prod d) operator. A plain
/// tensor with modes n_1..n_K is the case output_dims = {1, ..., 1}, passed as a
/// single-row matrix.
[[nodiscard]] TTSvdResult tt_svd(const linalg::Matrix& dense,
                                 const std::vector<std::size_t>& input_dims,
                                 const std::vector<std::size_t>& output_dims,
                                 const TruncationOptions& options = {});

/// Fits a generator output to the circuit's parameter count: truncates when
/// longer, tiles cyclically when shorter.
[[nodiscard]] std::vector<double> fit_length(std::span<const double> values, std::size_t length);
/// Row-wise counterpart of fit_length for Jacobians.
[[nodiscard]] linalg::Matrix fit_rows(const linalg::Matrix& jac, std::size_t length);

// Checkpoint text format. Floats use 17 significant digits so parse(serialize(g))
// reproduces g bit-for-bit.
void write_checkpoint(std::ostream& out, const TTGenerator& gen);
[[nodiscard]] std::string serialize(const TTGenerator& gen);
[[nodiscard]] TTGenerator read_checkpoint(std::istream& in);
[[nodiscard]] TTGenerator parse(const std::string& text);

} // namespace tensometa::tt
