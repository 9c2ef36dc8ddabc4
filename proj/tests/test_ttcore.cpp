#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

#include "tensometa/common.hpp"
#include "tensometa/ttcore.hpp"

using namespace tensometa;
using tt::TTGenerator;
using tt::TTSpec;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Independent oracle: sum over every multi-index of the product of core slices.
std::vector<double> brute_forward(const TTGenerator& g, const std::vector<double>& x) {
    const auto& s = g.spec();
    const std::size_t K = s.order();
    std::vector<double> y(s.output_length(), 0.0);
    std::vector<std::size_t> i(K, 0), j(K, 0);
    for (std::size_t in = 0; in < s.input_length(); ++in) {
        std::size_t rem = in;
        for (std::size_t k = K; k-- > 0;) {
            i[k] = rem % s.input_dims[k];
            rem /= s.input_dims[k];
        }
        for (std::size_t out = 0; out < s.output_length(); ++out) {
            rem = out;
            for (std::size_t k = K; k-- > 0;) {
                j[k] = rem % s.output_dims[k];
                rem /= s.output_dims[k];
            }
            std::vector<double> row{1.0};
            for (std::size_t k = 0; k < K; ++k) {
                std::vector<double> next(s.ranks[k + 1], 0.0);
                for (std::size_t a = 0; a < s.ranks[k]; ++a)
                    for (std::size_t b = 0; b < s.ranks[k + 1]; ++b)
                        next[b] += row[a] * g.at(k, a, i[k], j[k], b);
                row = next;
            }
            y[out] += row[0] * x[in];
        }
    }
    for (std::size_t out = 0; out < y.size(); ++out) y[out] += g.bias()[out];
    return y;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

TTSpec random_spec(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> order(1, 3), dim(1, 4), rank(1, 3);
    TTSpec s;
    const std::size_t K = order(rng);
    s.ranks.push_back(1);
    for (std::size_t k = 0; k < K; ++k) {
        s.input_dims.push_back(dim(rng));
        s.output_dims.push_back(dim(rng));
        s.ranks.push_back(k + 1 == K ? 1 : rank(rng));
    }
    return s;
}

TTGenerator with_random_bias(const TTGenerator& g, std::uint64_t seed) {
    return g.with_bias(random_vector(g.spec().output_length(), seed));
}

} // namespace

TEST_CASE("parameter counts") {
    const TTSpec cls{{5, 10, 5, 10}, {4, 2, 3, 9}, {1, 2, 2, 2, 1}};
    const auto c = tt::param_count(cls);
    CHECK(c.cores == 360);
    CHECK(c.bias == 216);
    CHECK(c.total() == 576);
    CHECK(cls.rank_product() == 8);

    const auto one = tt::param_count(TTSpec{{1}, {1}, {1, 1}});
    CHECK(one.cores == 1);
    CHECK(one.bias == 1);

    const auto small = tt::param_count(TTSpec{{4, 6}, {2, 3}, {1, 2, 1}});
    CHECK(small.cores == 1 * 4 * 2 * 2 + 2 * 6 * 3 * 1);
    CHECK(small.bias == 6);
}

TEST_CASE("spec validation names the field") {
    auto message = [](const TTSpec& s) {
        try {
            s.validate();
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(TTSpec{{2}, {2}, {2, 1}}).find("ranks") != std::string::npos);
    CHECK(message(TTSpec{{2, 2}, {2}, {1, 1, 1}}).find("output_dims") != std::string::npos);
    CHECK(message(TTSpec{{0}, {2}, {1, 1}}).find("input_dims") != std::string::npos);
    CHECK(message(TTSpec{{}, {}, {1}}) != "");
    CHECK(message(TTSpec{{2}, {3}, {1, 1}}).empty());
}

TEST_CASE("single-core dot product") {
    const TTGenerator g(TTSpec{{2}, {1}, {1, 1}}, {{1.0, 1.0}}, {0.0});
    const auto y = tt::forward(g, std::vector<double>{3.0, 4.0});
    REQUIRE(y.size() == 1);
    CHECK(y[0] == 7.0);
}

TEST_CASE("zero cores return the bias exactly") {
    const TTSpec s{{3, 2}, {2, 2}, {1, 2, 1}};
    const auto g = TTGenerator::zeros(s).with_bias({0.5, -1.25, 3.0, 7.0});
    const auto y = tt::forward(g, random_vector(6, 4));
    CHECK(y == std::vector<double>{0.5, -1.25, 3.0, 7.0});
    const auto dense = tt::to_dense(TTGenerator::zeros(s));
    for (double v : dense.data()) CHECK(v == 0.0);
}

TEST_CASE("forward agrees with the brute-force oracle and with to_dense") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = random_spec(rng);
        const auto g = with_random_bias(TTGenerator::random(spec, 100 + trial), 200 + trial);
        const auto dense = tt::to_dense(g);
        for (int n = 0; n < 5; ++n) {
            const auto x = random_vector(spec.input_length(), 1000 * trial + n);
            const auto y = tt::forward(g, x);
            CHECK(max_abs_diff(y, brute_forward(g, x)) <= 1e-10);
            auto d = linalg::multiply(dense, x);
            for (std::size_t u = 0; u < d.size(); ++u) d[u] += g.bias()[u];
            CHECK(max_abs_diff(y, d) <= 1e-10);
        }
    }
}

TEST_CASE("forward rejects a wrong input length") {
    const auto g = TTGenerator::random(TTSpec{{2, 3}, {1, 1}, {1, 1, 1}}, 1);
    CHECK_THROWS_AS((void)tt::forward(g, std::vector<double>(5, 0.0)), Error);
}

TEST_CASE("single-core dense equals the reshaped core") {
    const TTSpec s{{3}, {2}, {1, 1}};
    const auto g = TTGenerator::random(s, 9);
    const auto dense = tt::to_dense(g);
    REQUIRE(dense.rows() == 2);
    REQUIRE(dense.cols() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(dense(j, i) == g.at(0, 0, i, j, 0));
}

TEST_CASE("to_dense honours the budget") {
    const auto g = TTGenerator::random(TTSpec{{8, 8}, {8, 8}, {1, 2, 1}}, 3);
    CHECK_THROWS_AS((void)tt::to_dense(g, 100), Error);
}

TEST_CASE("forward is linear in each core") {
    const TTSpec s{{2, 3, 2}, {2, 1, 3}, {1, 2, 3, 1}};
    const auto g = with_random_bias(TTGenerator::random(s, 5), 6);
    const auto x = random_vector(s.input_length(), 7);
    for (std::size_t k = 0; k < s.order(); ++k) {
        const auto A = random_vector(s.core_size(k), 10 + k);
        const auto B = random_vector(s.core_size(k), 20 + k);
        const double a = 0.7, b = -1.3;
        std::vector<double> mix(A.size());
        for (std::size_t i = 0; i < A.size(); ++i) mix[i] = a * A[i] + b * B[i];
        const auto zero_bias = std::vector<double>(s.output_length(), 0.0);
        const auto fa = tt::forward(g.with_core(k, A).with_bias(zero_bias), x);
        const auto fb = tt::forward(g.with_core(k, B).with_bias(zero_bias), x);
        const auto fm = tt::forward(g.with_core(k, mix).with_bias(zero_bias), x);
        for (std::size_t u = 0; u < fm.size(); ++u) CHECK(std::abs(fm[u] - (a * fa[u] + b * fb[u])) <= 1e-10);
    }
}

TEST_CASE("jacobian matches central differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = random_spec(rng);
        const auto g = with_random_bias(TTGenerator::random(spec, 300 + trial), 400 + trial);
        const auto x = random_vector(spec.input_length(), 500 + trial);
        const auto jac = tt::jacobian(g, x);
        const auto theta = g.flat_params();
        REQUIRE(jac.rows() == spec.output_length());
        REQUIRE(jac.cols() == theta.size());
        const double h = 1e-6;
        for (std::size_t p = 0; p < theta.size(); ++p) {
            auto plus = theta, minus = theta;
            plus[p] += h;
            minus[p] -= h;
            const auto fp = tt::forward(TTGenerator::from_flat(spec, plus), x);
            const auto fm = tt::forward(TTGenerator::from_flat(spec, minus), x);
            for (std::size_t u = 0; u < fp.size(); ++u) {
                const double fd = (fp[u] - fm[u]) / (2 * h);
                CHECK(std::abs(fd - jac(u, p)) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("jacobian bias block is the identity and core columns scale with the input") {
    const TTSpec s{{3}, {2}, {1, 1}};
    const auto g = TTGenerator::random(s, 2);
    const auto x = random_vector(3, 8);
    const auto jac = tt::jacobian(g, x);
    const std::size_t off = tt::param_count(s).cores;
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t c = 0; c < 2; ++c) CHECK(jac(u, off + c) == (u == c ? 1.0 : 0.0));
    std::vector<double> x2(x);
    for (auto& v : x2) v *= 2.0;
    const auto jac2 = tt::jacobian(g, x2);
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t c = 0; c < off; ++c) CHECK(jac2(u, c) == doctest::Approx(2.0 * jac(u, c)));
}

TEST_CASE("tt_svd full rank is lossless") {
    for (int trial = 0; trial < 20; ++trial) {
        // A random 4x4x4 tensor passed as one row with unit output modes.
        linalg::Matrix dense(1, 64);
        dense.data() = random_vector(64, 600 + trial);
        const auto r = tt::tt_svd(dense, {4, 4, 4}, {1, 1, 1});
        const auto back = tt::to_dense(r.generator);
        CHECK(max_abs_diff(back.data(), dense.data()) <= 1e-10);
        CHECK(r.report.error_bound <= 1e-10);
    }
    // TT-matrix case.
    linalg::Matrix op(6, 12);
    op.data() = random_vector(72, 77);
    const auto r = tt::tt_svd(op, {3, 4}, {2, 3});
    CHECK(max_abs_diff(tt::to_dense(r.generator).data(), op.data()) <= 1e-10);
}

TEST_CASE("tt_svd of a rank-one tensor") {
    const auto a = random_vector(3, 1), b = random_vector(4, 2), c = random_vector(5, 3);
    linalg::Matrix dense(1, 60);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 5; ++k) dense(0, (i * 4 + j) * 5 + k) = a[i] * b[j] * c[k];
    tt::TruncationOptions opt;
    opt.max_ranks = {1, 1};
    const auto r = tt::tt_svd(dense, {3, 4, 5}, {1, 1, 1}, opt);
    CHECK(r.report.kept_ranks == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK(r.report.error_bound <= 1e-12);
    CHECK(max_abs_diff(tt::to_dense(r.generator).data(), dense.data()) <= 1e-12);
}

TEST_CASE("truncated tt_svd never exceeds its bound") {
    for (int trial = 0; trial < 20; ++trial) {
        linalg::Matrix dense(1, 4 * 5 * 3 * 4);
        dense.data() = random_vector(dense.cols(), 700 + trial);
        tt::TruncationOptions opt;
        opt.max_ranks = {std::size_t(1 + trial % 3), std::size_t(1 + trial % 2), 1};
        const auto r = tt::tt_svd(dense, {4, 5, 3, 4}, {1, 1, 1, 1}, opt);
        const auto back = tt::to_dense(r.generator);
        double err = 0.0;
        for (std::size_t i = 0; i < back.data().size(); ++i)
            err += std::pow(back.data()[i] - dense.data()[i], 2);
        err = std::sqrt(err);
        CHECK(err <= r.report.error_bound * (1 + 1e-9) + 1e-12);
        CHECK(r.report.error_bound > 0.0);
    }
}

TEST_CASE("tt_svd discarded values of the first unfolding match an Eigen SVD") {
    linalg::Matrix dense(1, 4 * 6 * 5);
    dense.data() = random_vector(dense.cols(), 99);
    tt::TruncationOptions opt;
    opt.max_ranks = {2, 5};
    const auto r = tt::tt_svd(dense, {4, 6, 5}, {1, 1, 1}, opt);
    Eigen::MatrixXd unfold(4, 30);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 30; ++j) unfold(i, j) = dense(0, i * 30 + j);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(unfold);
    const auto sv = svd.singularValues();
    REQUIRE(r.report.discarded[0].size() == 2);
    CHECK(r.report.discarded[0][0] == doctest::Approx(sv(2)).epsilon(1e-10));
    CHECK(r.report.discarded[0][1] == doctest::Approx(sv(3)).epsilon(1e-10));
}

TEST_CASE("tt_svd clamps ranks larger than the unfolding") {
    linalg::Matrix dense(1, 8);
    dense.data() = random_vector(8, 5);
    tt::TruncationOptions opt;
    opt.max_ranks = {10, 10};
    const auto r = tt::tt_svd(dense, {2, 2, 2}, {1, 1, 1}, opt);
    CHECK(r.report.clamped);
    CHECK(r.report.kept_ranks[1] <= 2);
    CHECK(r.report.kept_ranks[2] <= 2);
}

TEST_CASE("fit_length truncates or tiles") {
    const std::vector<double> v{1, 2, 3};
    CHECK(tt::fit_length(v, 2) == std::vector<double>{1, 2});
    CHECK(tt::fit_length(v, 7) == std::vector<double>{1, 2, 3, 1, 2, 3, 1});
    CHECK(tt::fit_length(v, 3) == v);

    linalg::Matrix j(2, 2);
    j(0, 0) = 1;
    j(1, 1) = 2;
    const auto t = tt::fit_rows(j, 3);
    CHECK(t(2, 0) == 1.0);
    CHECK(t(2, 1) == 0.0);
}

TEST_CASE("latent inputs are deterministic") {
    const TTSpec s{{2, 3}, {2, 2}, {1, 2, 1}};
    const auto a = tt::TTInput::latent(s, 42), b = tt::TTInput::latent(s, 42), c = tt::TTInput::latent(s, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.values.size() == 6);
    CHECK(a.mode == tt::InputMode::LatentGaussian);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const TTSpec s{{2, 3}, {3, 1}, {1, 2, 1}};
    const auto g = with_random_bias(TTGenerator::random(s, 4), 5);
    const auto text = tt::serialize(g);
    const auto back = tt::parse(text);
    CHECK(back.spec() == s);
    CHECK(back.flat_params() == g.flat_params());
    CHECK(tt::serialize(back) == text);
}

TEST_CASE("checkpoint parse errors cite the line") {
    const TTSpec s{{2}, {1}, {1, 1}};
    auto text = tt::serialize(TTGenerator::random(s, 1));
    text.replace(text.find("ranks"), 5, "rankz");
    try {
        (void)tt::parse(text);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    CHECK_THROWS_AS((void)tt::parse("not a checkpoint\n"), Error);
}

TEST_CASE("generator construction rejects non-finite entries") {
    const double nan = std::nan("");
    CHECK_THROWS_AS(TTGenerator(TTSpec{{2}, {1}, {1, 1}}, {{1.0, nan}}, {0.0}), Error);
    CHECK_THROWS_AS(TTGenerator(TTSpec{{2}, {1}, {1, 1}}, {{1.0}}, {0.0}), Error);
}
