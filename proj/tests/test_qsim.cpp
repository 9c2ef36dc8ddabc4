#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tensometa/common.hpp"
#include "tensometa/qsim.hpp"

using namespace tensometa;
using namespace tensometa::qsim;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
constexpr double kPi = std::numbers::pi;

namespace {

// ---- dense oracle (qubit k is bit k, so it is the k-th factor from the right)

Mat pauli(char c) {
    Mat m(2, 2);
    const cplx i(0, 1);
    switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1;
    }
    return m;
}

Mat embed(const Mat& op, std::size_t qubit, std::size_t n) {
    Mat out = Mat::Identity(1, 1);
    for (std::size_t k = n; k-- > 0;) {
        const Mat f = k == qubit ? op : Mat::Identity(2, 2);
        out = Eigen::kroneckerProduct(out, f).eval();
    }
    return out;
}

Mat word_matrix(const std::string& w) {
    Mat out = Mat::Identity(1, 1);
    for (std::size_t k = w.size(); k-- > 0;) out = Eigen::kroneckerProduct(out, pauli(w[k])).eval();
    return out;
}

Mat dense_h(const Hamiltonian& h) {
    const std::size_t dim = std::size_t{1} << h.qubits();
    Mat m = Mat::Zero(dim, dim);
    for (const auto& t : h.terms()) m += t.coefficient * word_matrix(t.word);
    return m;
}

Mat gate_matrix(const Gate& g, double angle, std::size_t n) {
    const cplx i(0, 1);
    auto rot = [&](char a) { return Mat((-i * angle / 2.0 * pauli(a)).exp()); };
    switch (g.kind) {
    case GateKind::RX: return embed(rot('X'), g.q0, n);
    case GateKind::RY: return embed(rot('Y'), g.q0, n);
    case GateKind::RZ: return embed(rot('Z'), g.q0, n);
    case GateKind::H: {
        Mat hm(2, 2);
        hm << 1, 1, 1, -1;
        return embed(hm / std::sqrt(2.0), g.q0, n);
    }
    case GateKind::RZZ: {
        const Mat zz = embed(pauli('Z'), g.q0, n) * embed(pauli('Z'), g.q1, n);
        return (-i * angle / 2.0 * zz).exp();
    }
    case GateKind::CNOT: {
        const std::size_t dim = std::size_t{1} << n;
        Mat m = Mat::Zero(dim, dim);
        for (std::size_t b = 0; b < dim; ++b) {
            const std::size_t t = ((b >> g.q0) & 1) ? b ^ (std::size_t{1} << g.q1) : b;
            m(t, b) = 1.0;
        }
        return m;
    }
    }
    return {};
}

Vec oracle_state(const CircuitSpec& c, const std::vector<double>& params) {
    Vec psi = Vec::Zero(std::size_t{1} << c.qubits);
    psi(0) = 1.0;
    for (const auto& g : c.gates) {
        const double angle = g.parameterized() ? g.scale * params[g.param] : 0.0;
        psi = gate_matrix(g, angle, c.qubits) * psi;
    }
    return psi;
}

Mat depolarize(const Mat& rho, std::size_t q, std::size_t n, double p) {
    Mat out = (1 - p) * rho;
    for (char a : {'X', 'Y', 'Z'}) {
        const Mat P = embed(pauli(a), q, n);
        out += (p / 3.0) * P * rho * P.adjoint();
    }
    return out;
}

Mat oracle_noisy_rho(const CircuitSpec& c, const std::vector<double>& params, double p) {
    const std::size_t dim = std::size_t{1} << c.qubits;
    Mat rho = Mat::Zero(dim, dim);
    rho(0, 0) = 1.0;
    for (const auto& g : c.gates) {
        const double angle = g.parameterized() ? g.scale * params[g.param] : 0.0;
        const Mat U = gate_matrix(g, angle, c.qubits);
        rho = U * rho * U.adjoint();
        rho = depolarize(rho, g.q0, c.qubits, p);
        if (g.two_qubit()) rho = depolarize(rho, g.q1, c.qubits, p);
    }
    return rho;
}

std::vector<double> random_params(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-kPi, kPi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

Hamiltonian random_hamiltonian(std::size_t n, std::size_t terms, std::uint64_t seed,
                               const std::string& alphabet = "IXYZ") {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> letter(0, alphabet.size() - 1);
    std::normal_distribution<double> coef;
    std::vector<PauliString> t;
    for (std::size_t k = 0; k < terms; ++k) {
        std::string w(n, 'I');
        for (auto& ch : w) ch = alphabet[letter(rng)];
        t.push_back({coef(rng), w});
    }
    return {n, t};
}

double oracle_expectation(const Vec& psi, const Hamiltonian& h) {
    return (psi.adjoint() * dense_h(h) * psi)(0, 0).real();
}

} // namespace

TEST_CASE("ansatz parameter counts and layout") {
    CHECK(build_ansatz(4, 2, Entangler::Ring).param_count == 24);
    CHECK(build_ansatz(20, 6, Entangler::Ring).param_count == 360);
    const auto c = build_ansatz(1, 1, Entangler::None);
    CHECK(c.param_count == 3);
    REQUIRE(c.gates.size() == 3);
    CHECK(c.gates[0].kind == GateKind::RX);
    CHECK(c.gates[1].kind == GateKind::RY);
    CHECK(c.gates[2].kind == GateKind::RZ);

    const auto r = build_ansatz(3, 2, Entangler::Ring);
    // layer 1, qubit 2, axis Y sits in slot 3 * (1 * 3 + 2) + 1.
    int found = -1;
    for (const auto& g : r.gates)
        if (g.kind == GateKind::RY && g.q0 == 2 && g.param >= 9) found = g.param;
    CHECK(found == 16);
    std::size_t cnots = 0;
    for (const auto& g : r.gates) cnots += g.kind == GateKind::CNOT;
    CHECK(cnots == 6);
    CHECK_THROWS_AS((void)build_ansatz(0, 1, Entangler::Ring), Error);
}

TEST_CASE("known single-gate and small-circuit states") {
    const auto c = build_ansatz(1, 1, Entangler::None);
    const auto s = simulate_state(c, std::vector<double>{kPi, 0, 0});
    CHECK(std::abs(s.amplitude(0)) <= 1e-15);
    CHECK(std::abs(s.amplitude(1) - cplx(0, -1)) <= 1e-15);

    const auto id = simulate_state(build_ansatz(3, 2, Entangler::None), std::vector<double>(18, 0.0));
    CHECK(id.amplitude(0) == cplx(1, 0));

    const auto two = simulate_state(build_ansatz(2, 1, Entangler::Ring),
                                    std::vector<double>{kPi, 0, 0, 0, 0, 0});
    CHECK(std::abs(two.amplitude(3)) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS((void)simulate_state(c, std::vector<double>{1.0}), Error);
}

TEST_CASE("statevector agrees with the dense oracle") {
    for (std::size_t trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + trial % 4;
        const auto c = build_ansatz(n, 2, trial % 2 ? Entangler::Ring : Entangler::None);
        const auto p = random_params(c.param_count, trial);
        const auto s = simulate_state(c, p);
        const Vec psi = oracle_state(c, p);
        for (std::size_t b = 0; b < psi.size(); ++b) CHECK(std::abs(s.amplitude(b) - psi(b)) <= 1e-12);
        const auto h = random_hamiltonian(n, 6, 50 + trial);
        CHECK(expectation(s, h) == doctest::Approx(oracle_expectation(psi, h)).epsilon(1e-12));
    }
}

TEST_CASE("norm drift stays below 1e-12 over 1000 gates") {
    const auto c = build_ansatz(5, 50, Entangler::Ring);  // 750 rotations + 250 CNOTs
    REQUIRE(c.gates.size() == 1000);
    const auto s = simulate_state(c, random_params(c.param_count, 3));
    CHECK(std::abs(s.norm() - 1.0) <= 1e-12);
}

TEST_CASE("rotations at 2 pi are minus identity, at 0 the identity") {
    for (GateKind k : {GateKind::RX, GateKind::RY, GateKind::RZ}) {
        auto s = simulate_state(build_ansatz(2, 1, Entangler::Ring), random_params(6, 8));
        const auto before = s.data();
        s.apply(Gate{k, 1, 0, 0, 1.0}, 2 * kPi);
        for (std::size_t b = 0; b < before.size(); ++b) CHECK(std::abs(s.data()[b] + before[b]) <= 1e-14);
        const auto rotated = s.data();
        s.apply(Gate{k, 0, 0, 0, 1.0}, 0.0);
        CHECK(s.data() == rotated);
    }
}

TEST_CASE("inverse gates undo the forward gates") {
    auto s = simulate_state(build_ansatz(3, 1, Entangler::Ring), random_params(9, 4));
    const auto before = s.data();
    const Gate g{GateKind::RZZ, 0, 2, 0, 1.0};
    s.apply(g, 0.7);
    s.apply_inverse(g, 0.7);
    for (std::size_t b = 0; b < before.size(); ++b) CHECK(std::abs(s.data()[b] - before[b]) <= 1e-14);
}

TEST_CASE("expectation examples") {
    const Hamiltonian z(1, {{1.0, "Z"}});
    CHECK(expectation(QuantumState::zero_state(1, Backend::Statevector), z) == 1.0);

    auto s = QuantumState::zero_state(2, Backend::Statevector);
    s.apply(Gate{GateKind::RX, 1, 0, 0, 1.0}, kPi);  // qubit 1 flipped
    const auto cut = maxcut_hamiltonian(2, {{0, 1}});
    CHECK(expectation(s, cut) == doctest::Approx(1.0).epsilon(1e-14));

    auto plus = QuantumState::zero_state(2, Backend::Statevector);
    plus.apply(Gate{GateKind::H, 0}, 0.0);
    plus.apply(Gate{GateKind::H, 1}, 0.0);
    CHECK(expectation(plus, cut) == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS((void)expectation(QuantumState::zero_state(3, Backend::Statevector), cut), Error);
}

TEST_CASE("maxcut Hamiltonian construction") {
    const auto one = maxcut_hamiltonian(2, {{0, 1}});
    REQUIRE(one.terms().size() == 2);
    CHECK(one.terms()[0].word == "II");
    CHECK(one.terms()[0].coefficient == 0.5);
    CHECK(one.terms()[1].word == "ZZ");
    CHECK(one.terms()[1].coefficient == -0.5);

    const auto empty = maxcut_hamiltonian(3, {});
    CHECK(empty.identity_coefficient() == 0.0);

    std::vector<Edge> k4;
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t v = u + 1; v < 4; ++v) k4.push_back({u, v});
    const auto h = maxcut_hamiltonian(4, k4);
    CHECK(h.identity_coefficient() == 3.0);
    std::size_t zz = 0;
    for (const auto& t : h.terms()) zz += t.word != "IIII";
    CHECK(zz == 6);

    CHECK_THROWS_AS((void)maxcut_hamiltonian(3, {{1, 1}}), Error);
    CHECK_THROWS_AS((void)maxcut_hamiltonian(3, {{0, 3}}), Error);
}

TEST_CASE("maxcut expectation on basis states equals the cut size (exhaustive, n <= 4)") {
    for (std::size_t n = 2; n <= 4; ++n) {
        std::vector<Edge> all;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v) all.push_back({u, v});
        for (std::size_t mask = 0; mask < (std::size_t{1} << all.size()); ++mask) {
            std::vector<Edge> edges;
            for (std::size_t e = 0; e < all.size(); ++e)
                if (mask >> e & 1) edges.push_back(all[e]);
            const auto h = maxcut_hamiltonian(n, edges);
            for (std::size_t basis = 0; basis < (std::size_t{1} << n); ++basis) {
                auto s = QuantumState::zero_state(n, Backend::Statevector);
                for (std::size_t q = 0; q < n; ++q)
                    if (basis >> q & 1) s.apply_pauli(q, 1);
                std::size_t cut = 0;
                for (const auto& e : edges) cut += ((basis >> e.u) & 1) != ((basis >> e.v) & 1);
                CHECK(expectation(s, h) == doctest::Approx(static_cast<double>(cut)).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("Hamiltonian merges duplicates and validates words") {
    const Hamiltonian h(2, {{1.0, "ZI"}, {2.0, "XX"}, {0.5, "ZI"}});
    REQUIRE(h.terms().size() == 2);
    CHECK(h.terms()[0].coefficient == 1.5);
    CHECK(h.one_norm() == 3.5);
    CHECK_THROWS_AS(Hamiltonian(2, {{1.0, "ZQ"}}), Error);
    CHECK_THROWS_AS(Hamiltonian(2, {{1.0, "Z"}}), Error);
    CHECK_THROWS_AS(Hamiltonian(2, {{std::nan(""), "ZZ"}}), Error);
}

TEST_CASE("depolarizing channel examples") {
    const Hamiltonian z(1, {{1.0, "Z"}});
    auto s = QuantumState::zero_state(1, Backend::DensityMatrix);
    apply_depolarizing(s, 0, 0.75);
    CHECK(std::abs(expectation(s, z)) <= 1e-12);
    CHECK(std::abs(s.rho(0, 0) - 0.5) <= 1e-15);

    auto same = QuantumState::zero_state(1, Backend::DensityMatrix);
    same.apply(Gate{GateKind::RY, 0, 0, 0, 1.0}, 0.4);
    const auto before = same.data();
    apply_depolarizing(same, 0, 0.0);
    CHECK(same.data() == before);

    auto small = QuantumState::zero_state(1, Backend::DensityMatrix);
    apply_depolarizing(small, 0, 0.001);
    CHECK(expectation(small, z) == doctest::Approx(1.0 - 4 * 0.001 / 3).epsilon(1e-15));

    auto sv = QuantumState::zero_state(1, Backend::Statevector);
    CHECK_THROWS_AS(apply_depolarizing(sv, 0, 0.1), Error);
}

TEST_CASE("density matrix agrees with the Kraus oracle and stays physical") {
    for (std::size_t trial = 0; trial < 5; ++trial) {
        const std::size_t n = 2 + trial % 2;
        const auto c = build_ansatz(n, 2, Entangler::Ring);
        const auto p = random_params(c.param_count, 70 + trial);
        const double rate = 0.05;
        const Mat rho = oracle_noisy_rho(c, p, rate);
        auto s = QuantumState::zero_state(n, Backend::DensityMatrix);
        for (const auto& g : c.gates) {
            s.apply(g, g.parameterized() ? g.scale * p[g.param] : 0.0);
            apply_depolarizing(s, g.q0, rate);
            if (g.two_qubit()) apply_depolarizing(s, g.q1, rate);
            CHECK(s.max_hermitian_defect() <= 1e-12);
            CHECK(std::abs(s.trace() - 1.0) <= 1e-12);
        }
        const std::size_t dim = std::size_t{1} << n;
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t col = 0; col < dim; ++col) CHECK(std::abs(s.rho(r, col) - rho(r, col)) <= 1e-12);
        const Eigen::SelfAdjointEigenSolver<Mat> es(rho);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);

        const auto h = random_hamiltonian(n, 5, 90 + trial);
        NoiseSpec noise;
        noise.depolarizing = rate;
        const double expected = (rho * dense_h(h)).trace().real();
        CHECK(noisy_expectation(c, p, h, noise, Backend::DensityMatrix, 1).value ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("noiseless backends agree") {
    const auto c = build_ansatz(3, 2, Entangler::Ring);
    const auto p = random_params(c.param_count, 5);
    const auto h = random_hamiltonian(3, 6, 6);
    const double exact = expectation(simulate_state(c, p), h);
    const NoiseSpec none;
    for (Backend b : {Backend::Statevector, Backend::DensityMatrix, Backend::Trajectory}) {
        const auto v = noisy_expectation(c, p, h, none, b, 11);
        CHECK(std::abs(v.value - exact) <= 1e-10);
    }
}

TEST_CASE("full mixing after a single gate") {
    CircuitSpec c;
    c.qubits = 1;
    c.param_count = 1;
    c.gates.push_back({GateKind::RY, 0, 0, 0, 1.0});
    NoiseSpec noise;
    noise.depolarizing = 0.75;
    const Hamiltonian z(1, {{1.0, "Z"}});
    CHECK(std::abs(noisy_expectation(c, std::vector<double>{0.3}, z, noise, Backend::DensityMatrix, 1).value) <= 1e-12);
}

TEST_CASE("trajectory backend matches the density matrix within 3 standard errors") {
    const auto c = build_ansatz(2, 2, Entangler::Ring);
    NoiseSpec noise;
    noise.depolarizing = 0.01;
    noise.trajectories = 20000;
    for (std::size_t trial = 0; trial < 3; ++trial) {
        const auto p = random_params(c.param_count, 200 + trial);
        const auto h = random_hamiltonian(2, 4, 300 + trial);
        const auto dm = noisy_expectation(c, p, h, noise, Backend::DensityMatrix, 0);
        const auto tr = noisy_expectation(c, p, h, noise, Backend::Trajectory, 1000 + trial);
        CHECK(tr.std_error > 0.0);
        CHECK(std::abs(tr.value - dm.value) <= 3.0 * tr.std_error);
    }
}

TEST_CASE("noisy evaluation is deterministic per seed and validates its inputs") {
    const auto c = build_ansatz(3, 1, Entangler::Ring);
    const auto p = random_params(c.param_count, 1);
    const auto h = random_hamiltonian(3, 4, 2);
    NoiseSpec noise;
    noise.depolarizing = 0.02;
    noise.measurement_sigma = 0.01;
    noise.trajectories = 50;
    const auto a = noisy_expectation(c, p, h, noise, Backend::Trajectory, 5);
    const auto b = noisy_expectation(c, p, h, noise, Backend::Trajectory, 5);
    CHECK(a.value == b.value);
    CHECK_THROWS_AS((void)noisy_expectation(c, p, h, noise, Backend::Statevector, 5), Error);
    noise.depolarizing = 1.5;
    CHECK_THROWS_AS((void)noisy_expectation(c, p, h, noise, Backend::DensityMatrix, 5), Error);
    CHECK_THROWS_AS((void)QuantumState::zero_state(11, Backend::DensityMatrix), Error);
}

TEST_CASE("exact ground energies") {
    CHECK(exact_ground_energy(Hamiltonian(1, {{1.0, "Z"}})) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(exact_ground_energy(Hamiltonian(2, {{1.0, "ZI"}, {1.0, "IZ"}})) == doctest::Approx(-2.0).epsilon(1e-12));
    const Hamiltonian tfim(2, {{-1.0, "ZZ"}, {-1.0, "XI"}, {-1.0, "IX"}});
    CHECK(std::abs(exact_ground_energy(tfim) - -2.23606797749979) <= 1e-9);

    for (std::size_t n : {3, 5, 7, 9, 10}) {
        const auto h = random_hamiltonian(n, 12, 400 + n);
        const Eigen::SelfAdjointEigenSolver<Mat> es(dense_h(h));
        CHECK(std::abs(exact_ground_energy(h) - es.eigenvalues().minCoeff()) <= 1e-9);
    }
    const auto big = random_hamiltonian(9, 10, 77, "IXZ");
    const Eigen::SelfAdjointEigenSolver<Mat> es(dense_h(big));
    CHECK(std::abs(lanczos_ground_energy(big) - es.eigenvalues().minCoeff()) <= 1e-9);
    CHECK_THROWS_AS((void)exact_ground_energy(random_hamiltonian(13, 2, 1)), Error);
}

TEST_CASE("QAOA circuit matches exp(-i beta B) exp(-i gamma C) on a triangle") {
    const auto cost = maxcut_hamiltonian(3, {{0, 1}, {1, 2}, {0, 2}});
    const auto c = build_qaoa(cost, 2);
    CHECK(c.param_count == 4);
    const std::vector<double> p{0.4, 0.9, -0.3, 0.2};
    const auto s = simulate_state(c, p);

    const cplx i(0, 1);
    Mat mixer = Mat::Zero(8, 8);
    for (std::size_t q = 0; q < 3; ++q) mixer += embed(pauli('X'), q, 3);
    const Mat C = dense_h(cost);
    Vec psi = Vec::Constant(8, 1.0 / std::sqrt(8.0));
    for (int l = 0; l < 2; ++l) {
        psi = (-i * p[2 * l] * C).exp() * psi;
        psi = (-i * p[2 * l + 1] * mixer).exp() * psi;
    }
    // Equal up to the global phase from the identity term.
    const cplx overlap = (psi.adjoint() * Eigen::Map<const Vec>(s.data().data(), 8))(0, 0);
    CHECK(std::abs(overlap) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)build_qaoa(Hamiltonian(2, {{1.0, "XX"}}), 1), Error);
}

TEST_CASE("Hamiltonian file round trip") {
    std::istringstream in("# transverse-field Ising\n-1.0 ZZ\n-1 XI  # field\n\n-1 IX\n");
    const auto h = read_hamiltonian(in);
    CHECK(h.qubits() == 2);
    CHECK(h.terms().size() == 3);
    std::ostringstream out;
    write_hamiltonian(out, h);
    std::istringstream again(out.str());
    const auto h2 = read_hamiltonian(again);
    CHECK(h2.terms().size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(h2.terms()[k].word == h.terms()[k].word);
        CHECK(h2.terms()[k].coefficient == h.terms()[k].coefficient);
    }
    std::istringstream bad("1.0 ZZ\n2.0 ZZZ\n");
    CHECK_THROWS_AS((void)read_hamiltonian(bad), Error);
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS((void)read_hamiltonian(empty), Error);
}
