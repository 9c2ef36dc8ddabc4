#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tensometa/graddiff.hpp"
#include "tensometa/ntk.hpp"

using namespace tensometa;
using namespace tensometa::qsim;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

ntk::Inputs random_inputs(std::size_t n, std::size_t d, std::uint64_t seed) {
    ntk::Inputs xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(random_vector(d, seed * 131 + i));
    return xs;
}

Hamiltonian readout(std::size_t qubits) {
    std::string w(qubits, 'I');
    w[0] = 'Z';
    return Hamiltonian(qubits, {{1.0, w}});
}

Eigen::MatrixXd to_eigen(const linalg::Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
    return e;
}

// Small TT model with fewer trainables than circuit angles.
std::unique_ptr<model::Parameterization> small_tt(std::size_t angles, std::uint64_t seed) {
    const tt::TTSpec spec{{2, 2}, {2, 2}, {1, 1, 1}};
    auto gen = tt::TTGenerator::random(spec, seed).with_bias(random_vector(4, seed + 1, 0.5));
    return std::make_unique<model::TTParameterization>(gen, angles);
}

std::unique_ptr<model::Parameterization> encoded_direct(std::size_t qubits, std::size_t angles,
                                                        std::uint64_t seed) {
    return std::make_unique<model::DirectParameterization>(
        model::random_angles(angles, std::numbers::pi, seed),
        model::block_mean_encoding(qubits, angles, 4, std::numbers::pi), 4);
}

} // namespace

TEST_CASE("min_eigenvalue examples") {
    linalg::Matrix d(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 1;
    CHECK(ntk::min_eigenvalue(d) == doctest::Approx(1.0).epsilon(1e-14));
    linalg::Matrix x(2, 2);
    x(0, 1) = x(1, 0) = 1;
    CHECK(ntk::min_eigenvalue(x) == doctest::Approx(-1.0).epsilon(1e-14));
    linalg::Matrix bad(2, 2);
    bad(0, 1) = 1;
    CHECK_THROWS_AS((void)ntk::min_eigenvalue(bad), Error);
}

TEST_CASE("min_eigenvalue matches an independent dense eigensolve") {
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 9;
        linalg::Matrix a(n, n);
        const auto v = random_vector(n * n, 500 + trial);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = v[i * n + j];
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a));
        CHECK(std::abs(ntk::min_eigenvalue(a) - es.eigenvalues()(0)) <= 1e-9);
    }
}

TEST_CASE("single input: gram is the squared gradient norm") {
    const auto c = build_ansatz(3, 2, Entangler::Ring);
    const auto m = small_tt(c.param_count, 3);
    const ntk::Inputs xs{random_vector(4, 9)};
    const auto k = ntk::ntk_matrix(*m, xs, c, readout(3));
    REQUIRE(k.size() == 1);
    const auto g = m->gradient(xs[0], c, readout(3));
    CHECK(k.gram(0, 0) == doctest::Approx(linalg::dot(g, g)).epsilon(1e-14));
    CHECK(k.trace() == k.gram(0, 0));
    CHECK(k.kind == model::Kind::TensoMeta);
}

TEST_CASE("duplicated inputs give a singular gram") {
    const auto c = build_ansatz(3, 1, Entangler::Ring);
    const auto m = small_tt(c.param_count, 4);
    auto xs = random_inputs(3, 4, 2);
    xs[1] = xs[0];
    const auto k = ntk::ntk_matrix(*m, xs, c, readout(3));
    for (std::size_t j = 0; j < 3; ++j) CHECK(k.gram(0, j) == k.gram(1, j));
    CHECK(std::abs(ntk::min_eigenvalue(k.gram)) <= 1e-10 * std::max(1.0, k.trace()));
}

TEST_CASE("gram equals J J^T from independently stacked shift-rule gradients") {
    const auto c = build_ansatz(3, 2, Entangler::Ring);
    const auto h = readout(3);
    const auto m = small_tt(c.param_count, 8);
    const auto xs = random_inputs(5, 4, 3);
    const auto k = ntk::ntk_matrix(*m, xs, c, h);

    Eigen::MatrixXd J(xs.size(), m->trainable_count());
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const auto gw = grad::param_shift_grad(c, m->angles(xs[n]), h);
        const auto gt = grad::chain_to_cores(gw, m->angle_jacobian(xs[n]));
        for (std::size_t j = 0; j < gt.size(); ++j) J(n, j) = gt[j];
    }
    const Eigen::MatrixXd G = J * J.transpose();
    CHECK((to_eigen(k.gram) - G).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gram symmetry, PSD and trace identity on 50 random instances") {
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t qubits = 2 + trial % 3;
        const auto c = build_ansatz(qubits, 1 + trial % 2, Entangler::Ring);
        const auto h = readout(qubits);
        std::unique_ptr<model::Parameterization> m;
        if (trial % 2)
            m = small_tt(c.param_count, 1000 + trial);
        else
            m = encoded_direct(qubits, c.param_count, 1000 + trial);
        const auto xs = random_inputs(2 + trial % 5, 4, 77 + trial);
        const auto k = ntk::ntk_matrix(*m, xs, c, h);
        CHECK(linalg::max_asymmetry(k.gram) <= 1e-10);
        CHECK(ntk::min_eigenvalue(k.gram) >= -1e-8);
        const auto report = ntk::trace_identity_check(k, k.grad_norms_sq, 8);
        CHECK(report.identity_error <= 1e-10);
        CHECK(report.identity_holds);
        CHECK(report.bound_holds);
        CHECK(report.trace <= xs.size() * report.c_emp * 8 * (1 + 1e-12));
    }
}

TEST_CASE("trace report records the rank product") {
    const tt::TTSpec cls{{5, 10, 5, 10}, {4, 2, 3, 9}, {1, 2, 2, 2, 1}};
    const auto c = build_ansatz(2, 1, Entangler::Ring);
    const auto m = small_tt(c.param_count, 5);
    const auto xs = random_inputs(3, 4, 1);
    const auto k = ntk::ntk_matrix(*m, xs, c, readout(2));
    const auto r = ntk::trace_identity_check(k, k.grad_norms_sq, cls.rank_product());
    CHECK(r.rank_product == 8);
    double mx = 0.0;
    for (double g : k.grad_norms_sq) mx = std::max(mx, g);
    CHECK(r.c_emp == doctest::Approx(mx / 8));
    CHECK_THROWS_AS((void)ntk::trace_identity_check(k, std::vector<double>{1.0}, 8), Error);
}

TEST_CASE("ntk_matrix rejects inconsistent inputs") {
    const auto c = build_ansatz(2, 1, Entangler::Ring);
    const auto m = small_tt(c.param_count, 5);
    ntk::Inputs xs{random_vector(4, 1), random_vector(3, 2)};
    CHECK_THROWS_AS((void)ntk::ntk_matrix(*m, xs, c, readout(2)), Error);
    CHECK_THROWS_AS((void)ntk::ntk_matrix(*m, ntk::Inputs{}, c, readout(2)), Error);
}

TEST_CASE("bias-only TT equal to the direct model has the same conditioning") {
    const auto c = build_ansatz(2, 1, Entangler::Ring);  // P = 6
    const auto h = readout(2);
    const auto w = model::random_angles(6, 1.0, 3);
    const tt::TTSpec spec{{2}, {6}, {1, 1}};
    const ntk::ModelFactory tt_f = [&](std::uint64_t) {
        return std::make_unique<model::TTParameterization>(tt::TTGenerator::zeros(spec).with_bias(w), 6, true);
    };
    const ntk::ModelFactory direct_f = [&](std::uint64_t) {
        return std::make_unique<model::DirectParameterization>(w, linalg::Matrix{}, 2);
    };
    const ntk::InputFactory in = [](std::uint64_t s) { return random_inputs(3, 2, s); };
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto summary = ntk::compare_conditioning(tt_f, direct_f, in, c, h, seeds);
    for (const auto& r : summary.rows) {
        CHECK(r.lambda_min_tt == r.lambda_min_direct);
        CHECK(r.trace_tt == r.trace_direct);
    }
    CHECK(summary.tt_at_least_direct == 2);
}

TEST_CASE("direct model with more data than parameters has a singular NTK") {
    const auto c = build_ansatz(1, 1, Entangler::None);  // P = 3
    const auto m = encoded_direct(1, 3, 4);
    const auto xs = random_inputs(6, 4, 9);
    const auto k = ntk::ntk_matrix(*m, xs, c, readout(1));
    CHECK(std::abs(ntk::min_eigenvalue(k.gram)) <= 1e-8);
}

TEST_CASE("conditioning comparison over 10 seeds writes a report") {
    const auto c = build_ansatz(4, 2, Entangler::Ring);  // P = 24
    const auto h = readout(4);
    const ntk::ModelFactory tt_f = [&](std::uint64_t s) { return small_tt(c.param_count, s); };
    const ntk::ModelFactory direct_f = [&](std::uint64_t s) { return encoded_direct(4, c.param_count, s); };
    const ntk::InputFactory in = [](std::uint64_t s) { return random_inputs(8, 4, s); };
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
    const auto summary = ntk::compare_conditioning(tt_f, direct_f, in, c, h, seeds);
    CHECK(summary.rows.size() == 10);
    CHECK(summary.fraction() >= 0.0);
    CHECK(summary.fraction() <= 1.0);
    for (const auto& r : summary.rows) {
        CHECK(r.trace_tt >= 0.0);
        CHECK(r.trace_direct >= 0.0);
        CHECK(r.rank_product == 1);
    }
    std::ostringstream csv;
    ntk::write_csv(csv, summary);
    CHECK(csv.str().rfind("seed,lambda_min_tt,lambda_min_direct,trace_tt,trace_direct,rank_product\n", 0) == 0);
}

TEST_CASE("exponential decay fit recovers rate and prefactor") {
    std::vector<double> losses;
    for (int t = 0; t < 20; ++t) losses.push_back(3.0 * std::exp(-0.25 * t));
    const auto fit = ntk::fit_exponential_decay(losses);
    CHECK(fit.rate == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fit.c0 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(ntk::fit_exponential_decay(std::vector<double>{1.0}).points == 1);
}
