#include "tensometa/graddiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "tensometa/parallel.hpp"

namespace tensometa::grad {
namespace {

constexpr std::string_view kModule = "graddiff";

// Circuit where every parameterized gate owns a slot with unit scale.
struct Unrolled {
    qsim::CircuitSpec circuit;
    std::vector<double> angles;
    std::vector<std::size_t> owner;  // original parameter index per slot
    std::vector<double> scale;       // original scale per slot
};

Unrolled unroll(const qsim::CircuitSpec& circuit, std::span<const double> params) {
    Unrolled u;
    u.circuit = circuit;
    int slot = 0;
    for (auto& g : u.circuit.gates) {
        if (!g.parameterized()) continue;
        if (g.kind == qsim::GateKind::CNOT || g.kind == qsim::GateKind::H)
            throw Error(kModule, "parameter shift needs Pauli-rotation gates");
        const auto p = static_cast<std::size_t>(g.param);
        u.angles.push_back(g.scale * params[p]);
        u.owner.push_back(p);
        u.scale.push_back(g.scale);
        g.param = slot++;
        g.scale = 1.0;
    }
    u.circuit.param_count = static_cast<std::size_t>(slot);
    return u;
}

template <typename Eval>
std::vector<double> shift_rule(const qsim::CircuitSpec& circuit, std::span<const double> params,
                               Eval&& eval) {
    if (params.size() != circuit.param_count)
        throw Error(kModule, "parameter vector has " + std::to_string(params.size()) +
                                 " entries, circuit expects " + std::to_string(circuit.param_count));
    const Unrolled u = unroll(circuit, params);
    const std::size_t slots = u.angles.size();
    std::vector<double> per_slot(slots);
    parallel_for(slots, [&](std::size_t k) {
        auto shifted = u.angles;
        shifted[k] = u.angles[k] + std::numbers::pi / 2.0;
        const double plus = eval(u.circuit, shifted);
        shifted[k] = u.angles[k] - std::numbers::pi / 2.0;
        const double minus = eval(u.circuit, shifted);
        per_slot[k] = 0.5 * (plus - minus);
    });
    std::vector<double> grad(circuit.param_count, 0.0);
    for (std::size_t k = 0; k < slots; ++k) grad[u.owner[k]] += u.scale[k] * per_slot[k];
    return grad;
}

void apply_generator(qsim::QuantumState& state, const qsim::Gate& g) {
    switch (g.kind) {
    case qsim::GateKind::RX: state.apply_pauli(g.q0, 1); break;
    case qsim::GateKind::RY: state.apply_pauli(g.q0, 2); break;
    case qsim::GateKind::RZ: state.apply_pauli(g.q0, 3); break;
    case qsim::GateKind::RZZ:
        state.apply_pauli(g.q0, 3);
        state.apply_pauli(g.q1, 3);
        break;
    default: throw Error(kModule, "gate has no rotation generator");
    }
}

} // namespace

std::string to_string(Method m) {
    switch (m) {
    case Method::Adjoint: return "adjoint";
    case Method::ParameterShift: return "parameter-shift";
    case Method::FiniteDifference: return "finite-difference";
    }
    return "?";
}

std::vector<double> grad_wrt_angles(const qsim::CircuitSpec& circuit,
                                    std::span<const double> params, const qsim::Hamiltonian& h) {
    auto psi = qsim::simulate_state(circuit, params, qsim::Backend::Statevector);
    if (h.qubits() != circuit.qubits)
        throw Error(kModule, "Hamiltonian and circuit qubit counts differ");
    auto lambda = psi;
    lambda.data() = qsim::apply_hamiltonian(h, psi.data());

    std::vector<double> grad(circuit.param_count, 0.0);
    for (std::size_t gi = circuit.gates.size(); gi-- > 0;) {
        const auto& g = circuit.gates[gi];
        const double angle = g.parameterized() ? g.scale * params[static_cast<std::size_t>(g.param)] : 0.0;
        if (g.parameterized()) {
            // d<H>/d angle = 2 Re <lambda| (-i/2) G |psi> = Im <lambda| G |psi>
            auto gpsi = psi;
            apply_generator(gpsi, g);
            qsim::cplx overlap = 0.0;
            const auto& l = lambda.data();
            const auto& r = gpsi.data();
            for (std::size_t i = 0; i < l.size(); ++i) overlap += std::conj(l[i]) * r[i];
            grad[static_cast<std::size_t>(g.param)] += g.scale * overlap.imag();
        }
        psi.apply_inverse(g, angle);
        lambda.apply_inverse(g, angle);
    }
    return grad;
}

std::vector<double> param_shift_grad(const qsim::CircuitSpec& circuit,
                                     std::span<const double> params, const qsim::Hamiltonian& h) {
    return shift_rule(circuit, params,
                      [&](const qsim::CircuitSpec& c, const std::vector<double>& angles) {
                          return qsim::expectation(qsim::simulate_state(c, angles), h);
                      });
}

std::vector<double> param_shift_grad(const qsim::CircuitSpec& circuit,
                                     std::span<const double> params, const qsim::Hamiltonian& h,
                                     const qsim::NoiseSpec& noise, qsim::Backend backend,
                                     std::uint64_t seed) {
    return shift_rule(circuit, params,
                      [&](const qsim::CircuitSpec& c, const std::vector<double>& angles) {
                          return qsim::noisy_expectation(c, angles, h, noise, backend, seed).value;
                      });
}

std::size_t param_shift_cost(const qsim::CircuitSpec& circuit) {
    return 2 * static_cast<std::size_t>(std::count_if(
                   circuit.gates.begin(), circuit.gates.end(),
                   [](const qsim::Gate& g) { return g.parameterized(); }));
}

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double step) {
    std::vector<double> grad(x.size());
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + step;
        const double plus = f(probe);
        probe[i] = x[i] - step;
        const double minus = f(probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

std::vector<double> chain_to_cores(std::span<const double> grad_w, const linalg::Matrix& jac) {
    if (grad_w.size() != jac.rows())
        throw Error(kModule, "chain_to_cores: gradient has " + std::to_string(grad_w.size()) +
                                 " entries, Jacobian has " + std::to_string(jac.rows()) + " rows");
    return linalg::left_multiply(grad_w, jac);
}

std::vector<double> inject_measurement_noise(std::span<const double> grad_w, double sigma,
                                             Rng& rng) {
    if (!(sigma >= 0.0)) throw Error(kModule, "measurement noise sigma must be >= 0");
    std::vector<double> out(grad_w.begin(), grad_w.end());
    if (sigma == 0.0) return out;
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : out) v += normal(rng);
    return out;
}

GradientReport tt_gradient(const tt::TTGenerator& gen, std::span<const double> input,
                           const qsim::CircuitSpec& circuit, const qsim::Hamiltonian& h,
                           Method method) {
    const auto raw = tt::forward(gen, input);
    const auto angles = tt::fit_length(raw, circuit.param_count);
    GradientReport report;
    report.method = method;
    switch (method) {
    case Method::Adjoint: report.grad_w = grad_wrt_angles(circuit, angles, h); break;
    case Method::ParameterShift: report.grad_w = param_shift_grad(circuit, angles, h); break;
    case Method::FiniteDifference:
        report.grad_w = finite_difference(
            [&](std::span<const double> w) {
                return qsim::expectation(qsim::simulate_state(circuit, w), h);
            },
            angles);
        break;
    }
    const auto jac = tt::fit_rows(tt::jacobian(gen, input), circuit.param_count);
    report.grad_cores = chain_to_cores(report.grad_w, jac);
    return report;
}

// ---------------------------------------------------------------------------

TTBuilder default_variance_builder(std::uint64_t seed) {
    return [seed](std::size_t qubits) {
        const std::size_t n = 3 * qubits;
        std::size_t a = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
        while (n % a != 0) --a;
        tt::TTSpec spec{{2, 2}, {a, n / a}, {1, 2, 1}};
        return tt::TTGenerator::random(spec, derive_seed(seed, qubits));
    };
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(kModule, "fit_slope needs >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

VarianceScalingReport variance_scaling_experiment(const std::vector<std::size_t>& qubit_counts,
                                                  const TTBuilder& builder, double sigma,
                                                  std::size_t trials, std::uint64_t seed) {
    if (trials < 1000) throw Error(kModule, "variance experiment needs trials >= 1000");
    if (!(sigma > 0.0)) throw Error(kModule, "variance experiment needs sigma > 0");
    if (qubit_counts.size() < 2) throw Error(kModule, "variance experiment needs >= 2 qubit counts");

    VarianceScalingReport report;
    report.sigma = sigma;
    report.trials = trials;
    std::vector<double> log_u, log_var;

    for (const std::size_t qubits : qubit_counts) {
        const std::size_t rows = 3 * qubits;
        const auto gen = builder(qubits);
        const auto input = tt::TTInput::latent(gen.spec(), derive_seed(seed, qubits));
        auto jac = tt::fit_rows(tt::jacobian(gen, input), rows);
        const std::size_t cols = jac.cols();

        // Balance every column to ||J_j||^2 = 1 / (3U).
        double raw_norm2 = 0.0;
        std::size_t zero_cols = 0;
        std::vector<bool> active(cols, true);
        for (std::size_t j = 0; j < cols; ++j) {
            double n2 = 0.0;
            for (std::size_t u = 0; u < rows; ++u) n2 += jac(u, j) * jac(u, j);
            raw_norm2 += n2;
            if (n2 == 0.0) {
                active[j] = false;
                ++zero_cols;
                continue;
            }
            const double f = std::sqrt(1.0 / (static_cast<double>(rows) * n2));
            for (std::size_t u = 0; u < rows; ++u) jac(u, j) *= f;
        }
        const std::size_t n_active = cols - zero_cols;
        report.qubit_counts.push_back(qubits);
        report.unscaled_c.push_back(static_cast<double>(rows) * raw_norm2 / static_cast<double>(cols));
        report.degenerate_columns.push_back(zero_cols);
        if (zero_cols > 0) report.degenerate = true;
        if (n_active == 0) {
            report.var_tt_empirical.push_back(0.0);
            report.var_tt_analytic.push_back(0.0);
            report.var_direct.push_back(sigma * sigma);
            continue;
        }

        std::vector<double> sum_tt(cols, 0.0), sq_tt(cols, 0.0);
        std::vector<double> sum_d(rows, 0.0), sq_d(rows, 0.0);
        std::vector<double> tau(rows);
        for (std::size_t t = 0; t < trials; ++t) {
            auto rng = make_rng(seed, stream::kVariance, qubits * 1000003ULL + t);
            const std::vector<double> zero(rows, 0.0);
            tau = inject_measurement_noise(zero, sigma, rng);
            const auto g = chain_to_cores(tau, jac);
            for (std::size_t j = 0; j < cols; ++j) {
                sum_tt[j] += g[j];
                sq_tt[j] += g[j] * g[j];
            }
            for (std::size_t u = 0; u < rows; ++u) {
                sum_d[u] += tau[u];
                sq_d[u] += tau[u] * tau[u];
            }
        }
        const double n = static_cast<double>(trials);
        auto sample_var = [n](double s, double q) { return (q - s * s / n) / (n - 1.0); };
        double var_tt = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
            if (active[j]) var_tt += sample_var(sum_tt[j], sq_tt[j]);
        var_tt /= static_cast<double>(n_active);
        double var_d = 0.0;
        for (std::size_t u = 0; u < rows; ++u) var_d += sample_var(sum_d[u], sq_d[u]);
        var_d /= static_cast<double>(rows);

        report.var_tt_empirical.push_back(var_tt);
        report.var_tt_analytic.push_back(sigma * sigma / static_cast<double>(rows));
        report.var_direct.push_back(var_d);
        log_u.push_back(std::log(static_cast<double>(qubits)));
        log_var.push_back(std::log(var_tt));
    }

    report.slope = log_u.size() >= 2 ? fit_slope(log_u, log_var) : 0.0;
    const auto [lo, hi] = std::minmax_element(report.var_direct.begin(), report.var_direct.end());
    double mean = 0.0;
    for (double v : report.var_direct) mean += v;
    mean /= static_cast<double>(report.var_direct.size());
    report.direct_spread = (*hi - *lo) / mean;
    return report;
}

void write_csv(std::ostream& out, const VarianceScalingReport& report) {
    char buf[128];
    out << "U,var_tt_empirical,var_tt_analytic,var_direct\n";
    for (std::size_t i = 0; i < report.qubit_counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.10e,%.10e,%.10e\n", report.qubit_counts[i],
                      report.var_tt_empirical[i], report.var_tt_analytic[i], report.var_direct[i]);
        out << buf;
    }
}

} // namespace tensometa::grad
