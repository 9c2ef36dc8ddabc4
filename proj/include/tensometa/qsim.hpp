#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tensometa::qsim {

using cplx = std::complex<double>;

enum class GateKind { RX, RY, RZ, RZZ, CNOT, H };

/// One gate of a circuit. Parameterized gates use angle = scale * params[param];
/// RZZ acts on (q0, q1), CNOT has control q0 and target q1.
struct Gate {
    GateKind kind = GateKind::H;
    std::size_t q0 = 0;
    std::size_t q1 = 0;
    int param = -1;
    double scale = 1.0;

    [[nodiscard]] bool parameterized() const noexcept { return param >= 0; }
    [[nodiscard]] bool two_qubit() const noexcept {
        return kind == GateKind::RZZ || kind == GateKind::CNOT;
    }
};

enum class Entangler { Ring, None };

/// A fixed circuit with P parameter slots.
struct CircuitSpec {
    std::size_t qubits = 0;
    std::size_t layers = 0;
    std::size_t param_count = 0;
    std::vector<Gate> gates;
};

/// L layers of RX, RY, RZ on every qubit (qubit order) followed by the
/// entangler. Slot of (layer l, qubit u, axis a) is 3 * (l * U + u) + a.
[[nodiscard]] CircuitSpec build_ansatz(std::size_t qubits, std::size_t layers,
                                       Entangler entangler);

struct PauliString {
    double coefficient = 0.0;
    std::string word;  // character k acts on qubit k; one of I, X, Y, Z
};

/// Weighted sum of Pauli strings on a fixed number of qubits. Duplicate
/// words are merged at construction, keeping first-occurrence order.
class Hamiltonian {
public:
    Hamiltonian() = default;
    Hamiltonian(std::size_t qubits, std::vector<PauliString> terms);

    [[nodiscard]] std::size_t qubits() const noexcept { return qubits_; }
    [[nodiscard]] const std::vector<PauliString>& terms() const noexcept { return terms_; }
    [[nodiscard]] double identity_coefficient() const;
    /// Sum of |coefficient| over terms; an upper bound on the spectral radius.
    [[nodiscard]] double one_norm() const;

    struct Masks {
        std::uint64_t flip = 0;   // X or Y
        std::uint64_t phase = 0;  // Z or Y
        int y_count = 0;
    };
    [[nodiscard]] const std::vector<Masks>& masks() const noexcept { return masks_; }

    [[nodiscard]] Hamiltonian operator+(const Hamiltonian& other) const;
    [[nodiscard]] Hamiltonian scaled(double factor) const;

private:
    std::size_t qubits_ = 0;
    std::vector<PauliString> terms_;
    std::vector<Masks> masks_;
};

/// Canonical alternating QAOA ansatz for a diagonal (I/Z only, at most
/// 2-local) cost Hamiltonian: H on all qubits, then per layer l the cost
/// unitary exp(-i gamma_l C) and the mixer exp(-i beta_l sum X). Parameter
/// slots are (gamma_l, beta_l) = (2l, 2l + 1).
[[nodiscard]] CircuitSpec build_qaoa(const Hamiltonian& cost, std::size_t depth);

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// sum over edges of (I - Z_u Z_v) / 2, with the constants merged into one
/// identity term.
[[nodiscard]] Hamiltonian maxcut_hamiltonian(std::size_t n, const std::vector<Edge>& edges);

// ---------------------------------------------------------------------------

enum class Backend { Statevector, DensityMatrix, Trajectory };

[[nodiscard]] Backend parse_backend(const std::string& name);
[[nodiscard]] std::string to_string(Backend backend);

inline constexpr std::size_t kDensityMatrixMaxQubits = 10;
inline constexpr std::size_t kExactMaxQubits = 12;

class QuantumState {
public:
    static QuantumState zero_state(std::size_t qubits, Backend backend);

    [[nodiscard]] Backend backend() const noexcept { return backend_; }
    [[nodiscard]] std::size_t qubits() const noexcept { return qubits_; }
    [[nodiscard]] bool is_density_matrix() const noexcept {
        return backend_ == Backend::DensityMatrix;
    }
    /// Amplitudes (length 2^U) or the row-major density matrix (2^U x 2^U).
    [[nodiscard]] const std::vector<cplx>& data() const noexcept { return data_; }
    [[nodiscard]] std::vector<cplx>& data() noexcept { return data_; }

    [[nodiscard]] cplx amplitude(std::size_t index) const;
    [[nodiscard]] cplx rho(std::size_t row, std::size_t col) const;

    [[nodiscard]] double norm() const;   // statevector 2-norm
    [[nodiscard]] cplx trace() const;    // density matrix trace
    [[nodiscard]] double max_hermitian_defect() const;

    void apply(const Gate& gate, double angle);
    void apply_inverse(const Gate& gate, double angle);
    /// Single-qubit Pauli (1 = X, 2 = Y, 3 = Z) on the statevector.
    void apply_pauli(std::size_t qubit, int pauli);

private:
    QuantumState(std::size_t qubits, Backend backend, std::vector<cplx> data)
        : qubits_(qubits), backend_(backend), data_(std::move(data)) {}

    std::size_t qubits_ = 0;
    Backend backend_ = Backend::Statevector;
    std::vector<cplx> data_;
};

/// Noiseless run of the circuit from |0...0>.
[[nodiscard]] QuantumState simulate_state(const CircuitSpec& circuit,
                                          std::span<const double> params,
                                          Backend backend = Backend::Statevector);

[[nodiscard]] double expectation(const QuantumState& state, const Hamiltonian& h);
/// H|psi> for a statevector.
[[nodiscard]] std::vector<cplx> apply_hamiltonian(const Hamiltonian& h, std::span<const cplx> psi);

/// rho <- (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z) on one qubit.
void apply_depolarizing(QuantumState& state, std::size_t qubit, double p);

struct NoiseSpec {
    double depolarizing = 0.0;        // per-gate rate p in [0, 1]
    double measurement_sigma = 0.0;   // std-dev of additive Gaussian noise on <H>
    std::size_t trajectories = 100;   // trajectory backend only

    void validate() const;
    [[nodiscard]] bool noiseless() const noexcept {
        return depolarizing == 0.0 && measurement_sigma == 0.0;
    }
};

struct NoisyValue {
    double value = 0.0;
    double std_error = 0.0;  // Monte Carlo standard error (trajectory backend)
};

/// <H> under per-gate depolarizing noise applied after every gate on each of
/// its qubits, plus optional Gaussian measurement noise. The seed drives
/// trajectory sampling and measurement noise; trajectory t uses its own stream.
[[nodiscard]] NoisyValue noisy_expectation(const CircuitSpec& circuit,
                                           std::span<const double> params, const Hamiltonian& h,
                                           const NoiseSpec& noise, Backend backend,
                                           std::uint64_t seed);

/// Lowest eigenvalue of H (U <= 12).
[[nodiscard]] double exact_ground_energy(const Hamiltonian& h);
/// Restarted Lanczos with full reorthogonalization; used above 8 qubits.
[[nodiscard]] double lanczos_ground_energy(const Hamiltonian& h, double tol = 1e-11);

// File formats -------------------------------------------------------------

/// One term per line: `<coefficient> <pauli-word>`; `#` starts a comment.
[[nodiscard]] Hamiltonian read_hamiltonian(std::istream& in);
[[nodiscard]] Hamiltonian load_hamiltonian(const std::string& path);
void write_hamiltonian(std::ostream& out, const Hamiltonian& h);

} // namespace tensometa::qsim
