#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tensometa/linalg.hpp"
#include "tensometa/qsim.hpp"
#include "tensometa/ttcore.hpp"

namespace tensometa::model {

enum class Kind { TensoMeta, DirectVqc };

[[nodiscard]] std::string to_string(Kind kind);

/// Maps an input x to circuit angles through trainable parameters theta. The
/// scalar model output is f(x) = <H> of the circuit at angles(x).
class Parameterization {
public:
    virtual ~Parameterization() = default;

    [[nodiscard]] virtual Kind kind() const = 0;
    [[nodiscard]] virtual std::size_t angle_count() const = 0;
    [[nodiscard]] virtual std::size_t input_length() const = 0;
    [[nodiscard]] virtual std::size_t trainable_count() const = 0;

    [[nodiscard]] virtual std::vector<double> params() const = 0;
    virtual void set_params(std::span<const double> theta) = 0;

    [[nodiscard]] virtual std::vector<double> angles(std::span<const double> x) const = 0;
    /// d angles / d theta: angle_count() x trainable_count().
    [[nodiscard]] virtual linalg::Matrix angle_jacobian(std::span<const double> x) const = 0;

    /// Gradient of f w.r.t. theta (adjoint through the noiseless statevector).
    [[nodiscard]] std::vector<double> gradient(std::span<const double> x,
                                               const qsim::CircuitSpec& circuit,
                                               const qsim::Hamiltonian& h) const;
    [[nodiscard]] double output(std::span<const double> x, const qsim::CircuitSpec& circuit,
                                const qsim::Hamiltonian& h) const;

    [[nodiscard]] virtual std::unique_ptr<Parameterization> clone() const = 0;
};

/// Angles produced by a TT generator, fitted to the circuit's parameter count.
/// With `bias_only`, only the bias is trainable and the cores stay fixed.
class TTParameterization final : public Parameterization {
public:
    TTParameterization(tt::TTGenerator gen, std::size_t angle_count, bool bias_only = false);

    [[nodiscard]] Kind kind() const override { return Kind::TensoMeta; }
    [[nodiscard]] std::size_t angle_count() const override { return angle_count_; }
    [[nodiscard]] std::size_t input_length() const override { return gen_.spec().input_length(); }
    [[nodiscard]] std::size_t trainable_count() const override;

    [[nodiscard]] std::vector<double> params() const override;
    void set_params(std::span<const double> theta) override;

    [[nodiscard]] std::vector<double> angles(std::span<const double> x) const override;
    [[nodiscard]] linalg::Matrix angle_jacobian(std::span<const double> x) const override;

    [[nodiscard]] std::unique_ptr<Parameterization> clone() const override {
        return std::make_unique<TTParameterization>(*this);
    }

    [[nodiscard]] const tt::TTGenerator& generator() const noexcept { return gen_; }
    [[nodiscard]] bool bias_only() const noexcept { return bias_only_; }

private:
    tt::TTGenerator gen_;
    std::size_t angle_count_ = 0;
    bool bias_only_ = false;
};

/// Conventional VQC: angles = w + E x with trainable w and a fixed encoding E
/// (E may be empty, in which case the input is ignored).
class DirectParameterization final : public Parameterization {
public:
    DirectParameterization(std::vector<double> w, linalg::Matrix encoding, std::size_t input_length);

    [[nodiscard]] Kind kind() const override { return Kind::DirectVqc; }
    [[nodiscard]] std::size_t angle_count() const override { return w_.size(); }
    [[nodiscard]] std::size_t input_length() const override { return input_length_; }
    [[nodiscard]] std::size_t trainable_count() const override { return w_.size(); }

    [[nodiscard]] std::vector<double> params() const override { return w_; }
    void set_params(std::span<const double> theta) override;

    [[nodiscard]] std::vector<double> angles(std::span<const double> x) const override;
    [[nodiscard]] linalg::Matrix angle_jacobian(std::span<const double> x) const override;

    [[nodiscard]] std::unique_ptr<Parameterization> clone() const override {
        return std::make_unique<DirectParameterization>(*this);
    }

private:
    std::vector<double> w_;
    linalg::Matrix encoding_;
    std::size_t input_length_ = 0;
};

/// Fixed angle encoding for the hardware-efficient ansatz: the input is split
/// into `qubits` contiguous blocks and scale * mean(block u) is added to the
/// first-layer RY angle of qubit u.
[[nodiscard]] linalg::Matrix block_mean_encoding(std::size_t qubits, std::size_t angle_count,
                                                 std::size_t input_length, double scale);

/// Direct angles drawn uniformly from [-range, range].
[[nodiscard]] std::vector<double> random_angles(std::size_t count, double range,
                                                std::uint64_t seed);

} // namespace tensometa::model
