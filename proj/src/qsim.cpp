#include "tensometa/qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "tensometa/common.hpp"
#include "tensometa/linalg.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::qsim {
namespace {

constexpr std::string_view kModule = "qsim";
constexpr cplx kI{0.0, 1.0};

struct Mat2 {
    cplx m00, m01, m10, m11;
};

Mat2 rotation(GateKind kind, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    switch (kind) {
    case GateKind::RX: return {c, -kI * s, -kI * s, c};
    case GateKind::RY: return {c, -s, s, c};
    case GateKind::RZ: return {std::polar(1.0, -angle / 2.0), 0.0, 0.0, std::polar(1.0, angle / 2.0)};
    case GateKind::H: {
        const double r = 1.0 / std::sqrt(2.0);
        return {r, r, r, -r};
    }
    default: break;
    }
    throw Error(kModule, "rotation: not a single-qubit gate");
}

Mat2 conj(const Mat2& m) { return {std::conj(m.m00), std::conj(m.m01), std::conj(m.m10), std::conj(m.m11)}; }

void apply_1q(std::vector<cplx>& v, std::size_t bit, const Mat2& m) {
    const std::size_t mask = std::size_t{1} << bit;
    const std::size_t n = v.size();
    for (std::size_t base = 0; base < n; base += 2 * mask)
        for (std::size_t j = 0; j < mask; ++j) {
            const std::size_t i0 = base + j;
            const std::size_t i1 = i0 + mask;
            const cplx a = v[i0];
            const cplx b = v[i1];
            v[i0] = m.m00 * a + m.m01 * b;
            v[i1] = m.m10 * a + m.m11 * b;
        }
}

void apply_cnot(std::vector<cplx>& v, std::size_t control, std::size_t target) {
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    for (std::size_t i = 0; i < v.size(); ++i)
        if ((i & cmask) && !(i & tmask)) std::swap(v[i], v[i | tmask]);
}

void apply_gate(std::vector<cplx>& v, std::size_t qubits, bool density, const Gate& g,
                double angle) {
    switch (g.kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::H: {
        const Mat2 m = rotation(g.kind, angle);
        if (density) {
            apply_1q(v, g.q0 + qubits, m);
            apply_1q(v, g.q0, conj(m));
        } else {
            apply_1q(v, g.q0, m);
        }
        return;
    }
    case GateKind::CNOT:
        if (density) {
            apply_cnot(v, g.q0 + qubits, g.q1 + qubits);
            apply_cnot(v, g.q0, g.q1);
        } else {
            apply_cnot(v, g.q0, g.q1);
        }
        return;
    case GateKind::RZZ: {
        // Two distinct phases: even and odd parity of bits (q0, q1).
        const cplx even = std::polar(1.0, -angle / 2.0);
        const cplx odd = std::conj(even);
        auto phase = [&](std::size_t i) { return ((i >> g.q0) ^ (i >> g.q1)) & 1U ? odd : even; };
        if (density) {
            const std::size_t dim = std::size_t{1} << qubits;
            for (std::size_t r = 0; r < dim; ++r) {
                const cplx pr = phase(r);
                for (std::size_t c = 0; c < dim; ++c) v[r * dim + c] *= pr * std::conj(phase(c));
            }
        } else {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] *= phase(i);
        }
        return;
    }
    }
}

double gate_angle(const Gate& g, std::span<const double> params) {
    return g.parameterized() ? g.scale * params[static_cast<std::size_t>(g.param)] : 0.0;
}

void check_params(const CircuitSpec& c, std::span<const double> params) {
    if (params.size() != c.param_count)
        throw Error(kModule, "parameter vector has " + std::to_string(params.size()) +
                                 " entries, circuit expects " + std::to_string(c.param_count));
}

// i^k for k mod 4.
cplx i_power(int k) {
    switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

cplx pauli_phase(std::size_t index, const Hamiltonian::Masks& m) {
    const bool negative = std::popcount(static_cast<std::uint64_t>(index) & m.phase) & 1U;
    const cplx base = i_power(m.y_count);
    return negative ? -base : base;
}

bool is_identity_word(const std::string& w) {
    return std::all_of(w.begin(), w.end(), [](char c) { return c == 'I'; });
}

} // namespace

// ---------------------------------------------------------------------------

CircuitSpec build_ansatz(std::size_t qubits, std::size_t layers, Entangler entangler) {
    if (qubits == 0) throw Error(kModule, "build_ansatz: qubits must be >= 1");
    if (layers == 0) throw Error(kModule, "build_ansatz: layers must be >= 1");
    if (qubits > 30) throw Error(kModule, "build_ansatz: at most 30 qubits are supported");
    CircuitSpec c;
    c.qubits = qubits;
    c.layers = layers;
    c.param_count = 3 * qubits * layers;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t u = 0; u < qubits; ++u) {
            const int slot = static_cast<int>(3 * (l * qubits + u));
            c.gates.push_back({GateKind::RX, u, 0, slot, 1.0});
            c.gates.push_back({GateKind::RY, u, 0, slot + 1, 1.0});
            c.gates.push_back({GateKind::RZ, u, 0, slot + 2, 1.0});
        }
        if (entangler == Entangler::Ring && qubits >= 2) {
            // On two qubits the ring closes onto the same edge, so it is a single CNOT.
            const std::size_t count = qubits == 2 ? 1 : qubits;
            for (std::size_t u = 0; u < count; ++u)
                c.gates.push_back({GateKind::CNOT, u, (u + 1) % qubits, -1, 1.0});
        }
    }
    return c;
}

Hamiltonian::Hamiltonian(std::size_t qubits, std::vector<PauliString> terms) : qubits_(qubits) {
    if (qubits == 0 || qubits > 62) throw Error(kModule, "hamiltonian: qubit count out of range");
    std::map<std::string, std::size_t> seen;
    for (auto& t : terms) {
        if (t.word.size() != qubits)
            throw Error(kModule, "hamiltonian: term '" + t.word + "' has length " +
                                     std::to_string(t.word.size()) + ", expected " +
                                     std::to_string(qubits));
        if (!std::isfinite(t.coefficient))
            throw Error(kModule, "hamiltonian: non-finite coefficient on '" + t.word + "'");
        for (char ch : t.word)
            if (ch != 'I' && ch != 'X' && ch != 'Y' && ch != 'Z')
                throw Error(kModule, "hamiltonian: invalid Pauli letter '" + std::string(1, ch) +
                                         "' in '" + t.word + "'");
        if (auto it = seen.find(t.word); it != seen.end()) {
            terms_[it->second].coefficient += t.coefficient;
        } else {
            seen.emplace(t.word, terms_.size());
            terms_.push_back(std::move(t));
        }
    }
    for (const auto& t : terms_) {
        Masks m;
        for (std::size_t k = 0; k < qubits; ++k) {
            const std::uint64_t bit = std::uint64_t{1} << k;
            switch (t.word[k]) {
            case 'X': m.flip |= bit; break;
            case 'Y': m.flip |= bit; m.phase |= bit; ++m.y_count; break;
            case 'Z': m.phase |= bit; break;
            default: break;
            }
        }
        masks_.push_back(m);
    }
}

double Hamiltonian::identity_coefficient() const {
    double s = 0.0;
    for (const auto& t : terms_)
        if (is_identity_word(t.word)) s += t.coefficient;
    return s;
}

double Hamiltonian::one_norm() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.coefficient);
    return s;
}

Hamiltonian Hamiltonian::operator+(const Hamiltonian& other) const {
    if (other.qubits_ != qubits_) throw Error(kModule, "hamiltonian sum: qubit count mismatch");
    auto terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    return {qubits_, std::move(terms)};
}

Hamiltonian Hamiltonian::scaled(double factor) const {
    auto terms = terms_;
    for (auto& t : terms) t.coefficient *= factor;
    return {qubits_, std::move(terms)};
}

CircuitSpec build_qaoa(const Hamiltonian& cost, std::size_t depth) {
    if (depth == 0) throw Error(kModule, "build_qaoa: depth must be >= 1");
    const std::size_t n = cost.qubits();
    CircuitSpec c;
    c.qubits = n;
    c.layers = depth;
    c.param_count = 2 * depth;
    for (std::size_t u = 0; u < n; ++u) c.gates.push_back({GateKind::H, u, 0, -1, 1.0});
    for (std::size_t l = 0; l < depth; ++l) {
        const int gamma = static_cast<int>(2 * l);
        for (const auto& t : cost.terms()) {
            std::vector<std::size_t> support;
            for (std::size_t k = 0; k < n; ++k) {
                if (t.word[k] == 'Z') support.push_back(k);
                else if (t.word[k] != 'I')
                    throw Error(kModule, "build_qaoa: cost term '" + t.word + "' is not diagonal");
            }
            // exp(-i gamma c Z..) = R(2 c gamma)
            if (support.size() == 1)
                c.gates.push_back({GateKind::RZ, support[0], 0, gamma, 2.0 * t.coefficient});
            else if (support.size() == 2)
                c.gates.push_back({GateKind::RZZ, support[0], support[1], gamma, 2.0 * t.coefficient});
            else if (support.size() > 2)
                throw Error(kModule, "build_qaoa: cost term '" + t.word + "' is more than 2-local");
        }
        for (std::size_t u = 0; u < n; ++u) c.gates.push_back({GateKind::RX, u, 0, gamma + 1, 2.0});
    }
    return c;
}

Hamiltonian maxcut_hamiltonian(std::size_t n, const std::vector<Edge>& edges) {
    if (n == 0) throw Error(kModule, "maxcut_hamiltonian: graph needs at least one vertex");
    std::vector<PauliString> terms;
    terms.push_back({0.5 * static_cast<double>(edges.size()), std::string(n, 'I')});
    for (const auto& e : edges) {
        if (e.u == e.v)
            throw Error(kModule, "maxcut_hamiltonian: self-loop on vertex " + std::to_string(e.u));
        if (e.u >= n || e.v >= n)
            throw Error(kModule, "maxcut_hamiltonian: edge (" + std::to_string(e.u) + ", " +
                                     std::to_string(e.v) + ") outside [0, " + std::to_string(n) + ")");
        std::string w(n, 'I');
        w[e.u] = 'Z';
        w[e.v] = 'Z';
        terms.push_back({-0.5, std::move(w)});
    }
    return {n, std::move(terms)};
}

// ---------------------------------------------------------------------------

Backend parse_backend(const std::string& name) {
    if (name == "statevector") return Backend::Statevector;
    if (name == "density-matrix") return Backend::DensityMatrix;
    if (name == "trajectory") return Backend::Trajectory;
    throw Error(kModule, "unknown backend '" + name + "'");
}

std::string to_string(Backend backend) {
    switch (backend) {
    case Backend::Statevector: return "statevector";
    case Backend::DensityMatrix: return "density-matrix";
    case Backend::Trajectory: return "trajectory";
    }
    return "?";
}

QuantumState QuantumState::zero_state(std::size_t qubits, Backend backend) {
    if (qubits == 0) throw Error(kModule, "state needs at least one qubit");
    const std::size_t dim = std::size_t{1} << qubits;
    if (backend == Backend::DensityMatrix) {
        if (qubits > kDensityMatrixMaxQubits)
            throw Error(kModule, "density-matrix backend is limited to " +
                                     std::to_string(kDensityMatrixMaxQubits) + " qubits, got " +
                                     std::to_string(qubits));
        std::vector<cplx> rho(dim * dim, 0.0);
        rho[0] = 1.0;
        return {qubits, backend, std::move(rho)};
    }
    std::vector<cplx> psi(dim, 0.0);
    psi[0] = 1.0;
    return {qubits, Backend::Statevector, std::move(psi)};
}

cplx QuantumState::amplitude(std::size_t index) const {
    if (is_density_matrix()) throw Error(kModule, "amplitude: state is a density matrix");
    return data_.at(index);
}

cplx QuantumState::rho(std::size_t row, std::size_t col) const {
    if (!is_density_matrix()) throw Error(kModule, "rho: state is a statevector");
    const std::size_t dim = std::size_t{1} << qubits_;
    return data_.at(row * dim + col);
}

double QuantumState::norm() const {
    double s = 0.0;
    for (const auto& a : data_) s += std::norm(a);
    return std::sqrt(s);
}

cplx QuantumState::trace() const {
    if (!is_density_matrix()) return {norm() * norm(), 0.0};
    const std::size_t dim = std::size_t{1} << qubits_;
    cplx t = 0.0;
    for (std::size_t i = 0; i < dim; ++i) t += data_[i * dim + i];
    return t;
}

double QuantumState::max_hermitian_defect() const {
    if (!is_density_matrix()) return 0.0;
    const std::size_t dim = std::size_t{1} << qubits_;
    double worst = 0.0;
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = r; c < dim; ++c)
            worst = std::max(worst, std::abs(data_[r * dim + c] - std::conj(data_[c * dim + r])));
    return worst;
}

void QuantumState::apply(const Gate& gate, double angle) {
    apply_gate(data_, qubits_, is_density_matrix(), gate, angle);
}

void QuantumState::apply_inverse(const Gate& gate, double angle) {
    // Rotations invert by negating the angle; H and CNOT are involutions.
    apply_gate(data_, qubits_, is_density_matrix(), gate, -angle);
}

void QuantumState::apply_pauli(std::size_t qubit, int pauli) {
    if (is_density_matrix()) throw Error(kModule, "apply_pauli: statevector only");
    const std::size_t mask = std::size_t{1} << qubit;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (i & mask) continue;
        cplx& a = data_[i];
        cplx& b = data_[i | mask];
        switch (pauli) {
        case 1: std::swap(a, b); break;
        case 2: {
            const cplx a0 = a;
            a = -kI * b;
            b = kI * a0;
            break;
        }
        case 3: b = -b; break;
        default: throw Error(kModule, "apply_pauli: pauli index must be 1, 2 or 3");
        }
    }
}

QuantumState simulate_state(const CircuitSpec& circuit, std::span<const double> params,
                            Backend backend) {
    check_params(circuit, params);
    if (backend == Backend::Trajectory) backend = Backend::Statevector;
    auto state = QuantumState::zero_state(circuit.qubits, backend);
    for (const auto& g : circuit.gates) state.apply(g, gate_angle(g, params));
    return state;
}

std::vector<cplx> apply_hamiltonian(const Hamiltonian& h, std::span<const cplx> psi) {
    std::vector<cplx> out(psi.size(), 0.0);
    const auto& masks = h.masks();
    for (std::size_t t = 0; t < masks.size(); ++t) {
        const double c = h.terms()[t].coefficient;
        if (c == 0.0) continue;
        const auto& m = masks[t];
        for (std::size_t r = 0; r < psi.size(); ++r)
            out[r ^ m.flip] += c * pauli_phase(r, m) * psi[r];
    }
    return out;
}

double expectation(const QuantumState& state, const Hamiltonian& h) {
    if (state.qubits() != h.qubits())
        throw Error(kModule, "expectation: state has " + std::to_string(state.qubits()) +
                                 " qubits, Hamiltonian has " + std::to_string(h.qubits()));
    const auto& d = state.data();
    const auto& masks = h.masks();
    cplx total = 0.0;
    if (state.is_density_matrix()) {
        const std::size_t dim = std::size_t{1} << state.qubits();
        for (std::size_t t = 0; t < masks.size(); ++t) {
            const auto& m = masks[t];
            cplx s = 0.0;
            for (std::size_t r = 0; r < dim; ++r) s += d[r * dim + (r ^ m.flip)] * pauli_phase(r, m);
            total += h.terms()[t].coefficient * s;
        }
    } else {
        for (std::size_t t = 0; t < masks.size(); ++t) {
            const auto& m = masks[t];
            cplx s = 0.0;
            for (std::size_t r = 0; r < d.size(); ++r)
                s += std::conj(d[r ^ m.flip]) * pauli_phase(r, m) * d[r];
            total += h.terms()[t].coefficient * s;
        }
    }
    return total.real();
}

void apply_depolarizing(QuantumState& state, std::size_t qubit, double p) {
    if (!state.is_density_matrix())
        throw Error(kModule, "apply_depolarizing requires the density-matrix backend");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(kModule, "depolarizing rate must lie in [0, 1]");
    if (qubit >= state.qubits()) throw Error(kModule, "apply_depolarizing: qubit out of range");
    if (p == 0.0) return;
    const std::size_t n = state.qubits();
    const std::size_t rmask = std::size_t{1} << (qubit + n);
    const std::size_t cmask = std::size_t{1} << qubit;
    const double keep_diag = 1.0 - 2.0 * p / 3.0;
    const double swap_diag = 2.0 * p / 3.0;
    const double keep_off = 1.0 - 4.0 * p / 3.0;
    auto& d = state.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i & (rmask | cmask)) continue;
        const std::size_t i11 = i | rmask | cmask;
        const cplx a = d[i];
        const cplx b = d[i11];
        d[i] = keep_diag * a + swap_diag * b;
        d[i11] = keep_diag * b + swap_diag * a;
        d[i | rmask] *= keep_off;
        d[i | cmask] *= keep_off;
    }
}

void NoiseSpec::validate() const {
    if (!(depolarizing >= 0.0 && depolarizing <= 1.0))
        throw Error(kModule, "noise.depolarizing must lie in [0, 1]");
    if (!(measurement_sigma >= 0.0) || !std::isfinite(measurement_sigma))
        throw Error(kModule, "noise.measurement_sigma must be >= 0");
    if (trajectories == 0) throw Error(kModule, "noise.trajectories must be >= 1");
}

NoisyValue noisy_expectation(const CircuitSpec& circuit, std::span<const double> params,
                             const Hamiltonian& h, const NoiseSpec& noise, Backend backend,
                             std::uint64_t seed) {
    noise.validate();
    check_params(circuit, params);
    if (h.qubits() != circuit.qubits)
        throw Error(kModule, "noisy_expectation: Hamiltonian and circuit qubit counts differ");
    const double p = noise.depolarizing;
    NoisyValue out;

    switch (backend) {
    case Backend::Statevector:
        if (p > 0.0)
            throw Error(kModule, "statevector backend cannot model depolarizing noise; "
                                 "use density-matrix or trajectory");
        out.value = expectation(simulate_state(circuit, params), h);
        break;
    case Backend::DensityMatrix: {
        if (circuit.qubits > kDensityMatrixMaxQubits)
            throw Error(kModule, "density-matrix backend is limited to " +
                                     std::to_string(kDensityMatrixMaxQubits) + " qubits");
        auto state = QuantumState::zero_state(circuit.qubits, Backend::DensityMatrix);
        for (const auto& g : circuit.gates) {
            state.apply(g, gate_angle(g, params));
            if (p > 0.0) {
                apply_depolarizing(state, g.q0, p);
                if (g.two_qubit()) apply_depolarizing(state, g.q1, p);
            }
        }
        out.value = expectation(state, h);
        break;
    }
    case Backend::Trajectory: {
        const std::size_t m = p > 0.0 ? noise.trajectories : 1;
        // Noiseless prefix states: prefix[g] is the state before gate g. A
        // trajectory whose first error follows gate g resumes from prefix[g + 1].
        std::vector<std::vector<cplx>> prefix;
        const bool cache = (circuit.gates.size() + 1) << circuit.qubits <= (std::size_t{1} << 24);
        if (cache) {
            prefix.reserve(circuit.gates.size() + 1);
            auto state = QuantumState::zero_state(circuit.qubits, Backend::Statevector);
            prefix.push_back(state.data());
            for (const auto& g : circuit.gates) {
                state.apply(g, gate_angle(g, params));
                prefix.push_back(state.data());
            }
        }
        const double clean = expectation(simulate_state(circuit, params), h);

        std::vector<double> values(m);
        parallel_for(m, [&](std::size_t t) {
            auto rng = make_rng(seed, stream::kTrajectory, t);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::uniform_int_distribution<int> which(1, 3);
            // Error events (gate index, qubit, pauli), sampled in gate order.
            struct Event {
                std::size_t gate;
                std::size_t qubit;
                int pauli;
            };
            std::vector<Event> events;
            for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
                const auto& g = circuit.gates[gi];
                if (unit(rng) < p) events.push_back({gi, g.q0, which(rng)});
                if (g.two_qubit() && unit(rng) < p) events.push_back({gi, g.q1, which(rng)});
            }
            if (events.empty()) {
                values[t] = clean;
                return;
            }
            auto state = QuantumState::zero_state(circuit.qubits, Backend::Statevector);
            const std::size_t first = events.front().gate;
            if (cache) {
                state.data() = prefix[first + 1];
            } else {
                for (std::size_t gi = 0; gi <= first; ++gi)
                    state.apply(circuit.gates[gi], gate_angle(circuit.gates[gi], params));
            }
            std::size_t next_event = 0;
            for (std::size_t gi = first; gi < circuit.gates.size(); ++gi) {
                if (gi > first) state.apply(circuit.gates[gi], gate_angle(circuit.gates[gi], params));
                while (next_event < events.size() && events[next_event].gate == gi) {
                    state.apply_pauli(events[next_event].qubit, events[next_event].pauli);
                    ++next_event;
                }
            }
            values[t] = expectation(state, h);
        });
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        out.value = mean;
        out.std_error =
            m > 1 ? std::sqrt(var / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
        break;
    }
    }

    if (noise.measurement_sigma > 0.0) {
        auto rng = make_rng(seed, stream::kMeasurement);
        std::normal_distribution<double> normal(0.0, noise.measurement_sigma);
        out.value += normal(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_real_hamiltonian(const Hamiltonian& h) {
    return std::all_of(h.masks().begin(), h.masks().end(),
                       [](const Hamiltonian::Masks& m) { return m.y_count % 2 == 0; });
}

double dense_ground_energy(const Hamiltonian& h) {
    const std::size_t dim = std::size_t{1} << h.qubits();
    const auto& masks = h.masks();
    std::vector<cplx> m(dim * dim, 0.0);
    for (std::size_t t = 0; t < masks.size(); ++t)
        for (std::size_t r = 0; r < dim; ++r)
            m[(r ^ masks[t].flip) * dim + r] += h.terms()[t].coefficient * pauli_phase(r, masks[t]);

    if (is_real_hamiltonian(h)) {
        linalg::Matrix a(dim, dim);
        for (std::size_t i = 0; i < dim * dim; ++i) a.data()[i] = m[i].real();
        return linalg::jacobi_eigen(a).values.front();
    }
    // Real embedding [[A, -B], [B, A]] of A + iB doubles every eigenvalue.
    linalg::Matrix a(2 * dim, 2 * dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            const cplx v = m[r * dim + c];
            a(r, c) = v.real();
            a(r + dim, c + dim) = v.real();
            a(r, c + dim) = -v.imag();
            a(r + dim, c) = v.imag();
        }
    return linalg::jacobi_eigen(a).values.front();
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace

double lanczos_ground_energy(const Hamiltonian& h, double tol) {
    const std::size_t dim = std::size_t{1} << h.qubits();
    const std::size_t max_basis = std::min<std::size_t>(dim, 120);
    auto rng = make_rng(0x1a2c05ULL, h.qubits());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cplx> start(dim);
    for (auto& v : start) v = {normal(rng), normal(rng)};

    double best = 0.0;
    for (int restart = 0; restart < 60; ++restart) {
        const double n0 = std::sqrt(inner(start, start).real());
        for (auto& v : start) v /= n0;
        std::vector<std::vector<cplx>> basis{start};
        std::vector<double> alpha, beta;
        for (std::size_t j = 0; j < max_basis; ++j) {
            auto w = apply_hamiltonian(h, basis[j]);
            const double a = inner(basis[j], w).real();
            alpha.push_back(a);
            // Full reorthogonalization, applied twice.
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& q : basis) {
                    const cplx proj = inner(q, w);
                    for (std::size_t i = 0; i < dim; ++i) w[i] -= proj * q[i];
                }
            const double b = std::sqrt(inner(w, w).real());
            if (j + 1 == max_basis || b < 1e-12) break;
            beta.push_back(b);
            for (auto& v : w) v /= b;
            basis.push_back(std::move(w));
        }
        const std::size_t m = alpha.size();
        linalg::Matrix t(m, m);
        for (std::size_t i = 0; i < m; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        const auto eig = linalg::jacobi_eigen(t, true, 1e-14);
        best = eig.values.front();
        std::vector<cplx> ritz(dim, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double s = eig.vectors(j, 0);
            for (std::size_t i = 0; i < dim; ++i) ritz[i] += s * basis[j][i];
        }
        const auto hr = apply_hamiltonian(h, ritz);
        double res = 0.0;
        for (std::size_t i = 0; i < dim; ++i) res += std::norm(hr[i] - best * ritz[i]);
        if (std::sqrt(res) <= tol * std::max(1.0, std::abs(best)) || m == dim) return best;
        start = std::move(ritz);
    }
    return best;
}

double exact_ground_energy(const Hamiltonian& h) {
    if (h.qubits() > kExactMaxQubits)
        throw Error(kModule, "exact_ground_energy: " + std::to_string(h.qubits()) +
                                 " qubits exceeds the dense budget of " +
                                 std::to_string(kExactMaxQubits));
    const bool real = is_real_hamiltonian(h);
    if (h.qubits() <= (real ? 8U : 6U)) return dense_ground_energy(h);
    return lanczos_ground_energy(h);
}

// ---------------------------------------------------------------------------

Hamiltonian read_hamiltonian(std::istream& in) {
    std::vector<PauliString> terms;
    std::size_t qubits = 0;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string coeff_text, word, extra;
        if (!(ss >> coeff_text)) continue;
        auto fail = [&](const std::string& what) {
            return Error(kModule, "hamiltonian line " + std::to_string(line_no) + ": " + what);
        };
        if (!(ss >> word)) throw fail("expected '<coefficient> <pauli-word>'");
        if (ss >> extra) throw fail("unexpected token '" + extra + "'");
        char* end = nullptr;
        const double c = std::strtod(coeff_text.c_str(), &end);
        if (end != coeff_text.c_str() + coeff_text.size() || !std::isfinite(c))
            throw fail("bad coefficient '" + coeff_text + "'");
        if (qubits == 0) qubits = word.size();
        if (word.size() != qubits)
            throw fail("word '" + word + "' has length " + std::to_string(word.size()) +
                       ", earlier terms have " + std::to_string(qubits));
        if (word.find_first_not_of("IXYZ") != std::string::npos)
            throw fail("invalid Pauli word '" + word + "'");
        terms.push_back({c, word});
    }
    if (terms.empty()) throw Error(kModule, "hamiltonian file contains no terms");
    return {qubits, std::move(terms)};
}

Hamiltonian load_hamiltonian(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open Hamiltonian file '" + path + "'");
    return read_hamiltonian(in);
}

void write_hamiltonian(std::ostream& out, const Hamiltonian& h) {
    char buf[32];
    for (const auto& t : h.terms()) {
        std::snprintf(buf, sizeof buf, "%.17g", t.coefficient);
        out << buf << ' ' << t.word << '\n';
    }
}

} // namespace tensometa::qsim
