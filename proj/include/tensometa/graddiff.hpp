#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tensometa/common.hpp"
#include "tensometa/linalg.hpp"
#include "tensometa/qsim.hpp"
#include "tensometa/ttcore.hpp"

namespace tensometa::grad {

enum class Method { Adjoint, ParameterShift, FiniteDifference };

[[nodiscard]] std::string to_string(Method m);

/// Exact d<H>/d(params) by a reverse sweep over the noiseless statevector.
[[nodiscard]] std::vector<double> grad_wrt_angles(const qsim::CircuitSpec& circuit,
                                                  std::span<const double> params,
                                                  const qsim::Hamiltonian& h);

/// Two-term shift rule applied to every parameterized gate occurrence
/// (2 evaluations per occurrence). Noiseless statevector.
[[nodiscard]] std::vector<double> param_shift_grad(const qsim::CircuitSpec& circuit,
                                                   std::span<const double> params,
                                                   const qsim::Hamiltonian& h);

/// Shift rule on noisy expectations. Every shifted evaluation reuses `seed`,
/// so trajectory sampling is common across the two shifted circuits.
[[nodiscard]] std::vector<double> param_shift_grad(const qsim::CircuitSpec& circuit,
                                                   std::span<const double> params,
                                                   const qsim::Hamiltonian& h,
                                                   const qsim::NoiseSpec& noise,
                                                   qsim::Backend backend, std::uint64_t seed);

/// Number of circuit evaluations one call of param_shift_grad performs.
[[nodiscard]] std::size_t param_shift_cost(const qsim::CircuitSpec& circuit);

/// Central differences of f over each coordinate of x.
[[nodiscard]] std::vector<double> finite_difference(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x,
    double step = 1e-5);

/// grad^T J: d R / d theta_j = sum_u (d R / d w_u)(d w_u / d theta_j).
[[nodiscard]] std::vector<double> chain_to_cores(std::span<const double> grad_w,
                                                 const linalg::Matrix& jac);

/// grad_w + tau with tau_u i.i.d. N(0, sigma^2).
[[nodiscard]] std::vector<double> inject_measurement_noise(std::span<const double> grad_w,
                                                           double sigma, Rng& rng);

struct GradientReport {
    std::vector<double> grad_w;      // length P
    std::vector<double> grad_cores;  // length trainable_count()
    Method method = Method::Adjoint;
};

/// Gradient of <H> at the circuit parameters generated by `gen` from `input`
/// (fitted to the circuit's P by truncation or cyclic tiling).
[[nodiscard]] GradientReport tt_gradient(const tt::TTGenerator& gen, std::span<const double> input,
                                         const qsim::CircuitSpec& circuit,
                                         const qsim::Hamiltonian& h,
                                         Method method = Method::Adjoint);

struct VarianceScalingReport {
    std::vector<std::size_t> qubit_counts;
    std::vector<double> var_tt_empirical;   // mean over trainables of the sample variance
    std::vector<double> var_tt_analytic;    // sigma^2 * mean ||J_j||^2 after balancing
    std::vector<double> var_direct;         // mean over angles of the sample variance
    std::vector<double> unscaled_c;         // 3U * mean ||J_j||^2 before balancing
    std::vector<std::size_t> degenerate_columns;
    double slope = 0.0;                     // fit of log var_tt_empirical vs log U
    double direct_spread = 0.0;             // (max - min) / mean of var_direct
    bool degenerate = false;                // some U had all-zero Jacobian columns
    double sigma = 0.0;
    std::size_t trials = 0;
};

/// Builds the generator used for a given qubit count; its output is fitted to 3U.
using TTBuilder = std::function<tt::TTGenerator(std::size_t qubits)>;

/// Default builder: latent input dims {2, 2}, output dims factoring 3U, ranks {1, 2, 1}.
[[nodiscard]] TTBuilder default_variance_builder(std::uint64_t seed);

/// Balances every Jacobian column to ||J_j||^2 = c / (3U) with c = 1, then
/// samples tau ~ N(0, sigma^2 I) per trial and records the empirical variance of
/// tau^T J (TT cores) next to that of tau itself (direct parameterization).
[[nodiscard]] VarianceScalingReport variance_scaling_experiment(
    const std::vector<std::size_t>& qubit_counts, const TTBuilder& builder, double sigma,
    std::size_t trials, std::uint64_t seed);

/// Columns: U, var_tt_empirical, var_tt_analytic, var_direct.
void write_csv(std::ostream& out, const VarianceScalingReport& report);

/// Ordinary least-squares slope of y on x.
[[nodiscard]] double fit_slope(std::span<const double> x, std::span<const double> y);

} // namespace tensometa::grad
