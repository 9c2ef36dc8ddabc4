#include "tensometa/ttcore.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "tensometa/common.hpp"

namespace tensometa::tt {
namespace {

constexpr std::string_view kModule = "ttcore";

std::size_t product(const std::vector<std::size_t>& v, std::size_t begin, std::size_t end) {
    std::size_t p = 1;
    for (std::size_t k = begin; k < end; ++k) p *= v[k];
    return p;
}

// Contraction state after consuming cores 0..k-1: shape [out_prefix][rank][in_rest].
struct Partial {
    std::size_t out_prefix = 1;
    std::size_t rank = 1;
    std::size_t in_rest = 1;
    std::vector<double> data;
};

Partial contract_core(const Partial& t, const TTGenerator& gen, std::size_t k) {
    const auto& s = gen.spec();
    const std::size_t d = s.input_dims[k];
    const std::size_t o = s.output_dims[k];
    const std::size_t rn = s.ranks[k + 1];
    const std::size_t after = t.in_rest / d;
    const auto& core = gen.core(k);

    Partial next;
    next.out_prefix = t.out_prefix * o;
    next.rank = rn;
    next.in_rest = after;
    next.data.assign(next.out_prefix * rn * after, 0.0);
    for (std::size_t p = 0; p < t.out_prefix; ++p)
        for (std::size_t a = 0; a < t.rank; ++a)
            for (std::size_t i = 0; i < d; ++i) {
                const double* src = &t.data[(p * t.rank + a) * t.in_rest + i * after];
                for (std::size_t j = 0; j < o; ++j)
                    for (std::size_t b = 0; b < rn; ++b) {
                        const double g = core[((a * d + i) * o + j) * rn + b];
                        if (g == 0.0) continue;
                        double* dst = &next.data[((p * o + j) * rn + b) * after];
                        for (std::size_t s2 = 0; s2 < after; ++s2) dst[s2] += g * src[s2];
                    }
            }
    return next;
}

void check_input(const TTSpec& spec, std::span<const double> x) {
    const std::size_t expected = spec.input_length();
    if (x.size() == expected) {
        for (double v : x)
            if (!std::isfinite(v)) throw Error(kModule, "input contains a non-finite entry");
        return;
    }
    // Name the first mode whose extent cannot be matched by the given length.
    std::size_t prefix = 1;
    std::size_t mode = 0;
    for (; mode < spec.order(); ++mode) {
        prefix *= spec.input_dims[mode];
        if (x.size() % prefix != 0 || x.size() < prefix) break;
    }
    if (mode == spec.order()) mode = spec.order() - 1;
    throw Error(kModule, "input length " + std::to_string(x.size()) + " does not match prod(d) = " +
                             std::to_string(expected) + " (mismatch at input mode " +
                             std::to_string(mode) + ", d_" + std::to_string(mode) + " = " +
                             std::to_string(spec.input_dims[mode]) + ")");
}

} // namespace

// ---------------------------------------------------------------------------

void TTSpec::validate() const {
    const std::size_t k = input_dims.size();
    if (k == 0) throw Error(kModule, "input_dims: at least one core is required");
    if (output_dims.size() != k)
        throw Error(kModule, "output_dims: expected " + std::to_string(k) + " entries");
    if (ranks.size() != k + 1)
        throw Error(kModule, "ranks: expected " + std::to_string(k + 1) + " entries");
    for (std::size_t i = 0; i < k; ++i) {
        if (input_dims[i] == 0) throw Error(kModule, "input_dims: entries must be positive");
        if (output_dims[i] == 0) throw Error(kModule, "output_dims: entries must be positive");
    }
    for (auto r : ranks)
        if (r == 0) throw Error(kModule, "ranks: entries must be positive");
    if (ranks.front() != 1 || ranks.back() != 1)
        throw Error(kModule, "ranks: boundary ranks r_0 and r_K must be 1");
}

std::size_t TTSpec::input_length() const { return product(input_dims, 0, input_dims.size()); }
std::size_t TTSpec::output_length() const { return product(output_dims, 0, output_dims.size()); }

std::size_t TTSpec::core_size(std::size_t k) const {
    return ranks[k] * input_dims[k] * output_dims[k] * ranks[k + 1];
}

std::size_t TTSpec::rank_product() const { return product(ranks, 0, ranks.size()); }

ParamCount param_count(const TTSpec& spec) {
    spec.validate();
    ParamCount c;
    for (std::size_t k = 0; k < spec.order(); ++k) c.cores += spec.core_size(k);
    c.bias = spec.output_length();
    return c;
}

TTInput TTInput::latent(const TTSpec& spec, std::uint64_t seed) {
    spec.validate();
    auto rng = make_rng(seed, stream::kLatent);
    std::normal_distribution<double> normal(0.0, 1.0);
    TTInput in;
    in.mode = InputMode::LatentGaussian;
    in.values.resize(spec.input_length());
    for (auto& v : in.values) v = normal(rng);
    return in;
}

TTInput TTInput::features(std::vector<double> x) {
    return TTInput{InputMode::TaskFeatures, std::move(x)};
}

// ---------------------------------------------------------------------------

TTGenerator::TTGenerator(TTSpec spec, std::vector<std::vector<double>> cores,
                         std::vector<double> bias)
    : spec_(std::move(spec)), cores_(std::move(cores)), bias_(std::move(bias)) {
    spec_.validate();
    if (cores_.size() != spec_.order())
        throw Error(kModule, "expected " + std::to_string(spec_.order()) + " cores, got " +
                                 std::to_string(cores_.size()));
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        if (cores_[k].size() != spec_.core_size(k))
            throw Error(kModule, "core " + std::to_string(k) + " has " +
                                     std::to_string(cores_[k].size()) + " entries, expected " +
                                     std::to_string(spec_.core_size(k)));
        for (double v : cores_[k])
            if (!std::isfinite(v))
                throw Error(kModule, "core " + std::to_string(k) + " has a non-finite entry");
    }
    if (bias_.size() != spec_.output_length())
        throw Error(kModule, "bias length " + std::to_string(bias_.size()) + ", expected " +
                                 std::to_string(spec_.output_length()));
    for (double v : bias_)
        if (!std::isfinite(v)) throw Error(kModule, "bias has a non-finite entry");
}

TTGenerator TTGenerator::zeros(TTSpec spec) {
    spec.validate();
    std::vector<std::vector<double>> cores(spec.order());
    for (std::size_t k = 0; k < spec.order(); ++k) cores[k].assign(spec.core_size(k), 0.0);
    std::vector<double> bias(spec.output_length(), 0.0);
    return {std::move(spec), std::move(cores), std::move(bias)};
}

TTGenerator TTGenerator::random(TTSpec spec, std::uint64_t seed) {
    spec.validate();
    std::vector<std::vector<double>> cores(spec.order());
    for (std::size_t k = 0; k < spec.order(); ++k) {
        auto rng = make_rng(seed, stream::kInit, k);
        const double sd = 1.0 / std::sqrt(static_cast<double>(spec.ranks[k] * spec.input_dims[k]));
        std::normal_distribution<double> normal(0.0, sd);
        cores[k].resize(spec.core_size(k));
        for (auto& v : cores[k]) v = normal(rng);
    }
    std::vector<double> bias(spec.output_length(), 0.0);
    return {std::move(spec), std::move(cores), std::move(bias)};
}

TTGenerator TTGenerator::from_flat(TTSpec spec, std::span<const double> params) {
    const auto count = param_count(spec);
    if (params.size() != count.total())
        throw Error(kModule, "flat parameter vector has " + std::to_string(params.size()) +
                                 " entries, expected " + std::to_string(count.total()));
    std::vector<std::vector<double>> cores(spec.order());
    std::size_t offset = 0;
    for (std::size_t k = 0; k < spec.order(); ++k) {
        const std::size_t n = spec.core_size(k);
        cores[k].assign(params.begin() + offset, params.begin() + offset + n);
        offset += n;
    }
    std::vector<double> bias(params.begin() + offset, params.end());
    return {std::move(spec), std::move(cores), std::move(bias)};
}

double TTGenerator::at(std::size_t k, std::size_t a, std::size_t i, std::size_t j,
                       std::size_t b) const {
    const std::size_t d = spec_.input_dims[k];
    const std::size_t o = spec_.output_dims[k];
    const std::size_t rn = spec_.ranks[k + 1];
    return cores_[k][((a * d + i) * o + j) * rn + b];
}

std::vector<double> TTGenerator::flat_params() const {
    std::vector<double> out;
    out.reserve(trainable_count());
    for (const auto& c : cores_) out.insert(out.end(), c.begin(), c.end());
    out.insert(out.end(), bias_.begin(), bias_.end());
    return out;
}

TTGenerator TTGenerator::with_core(std::size_t k, std::vector<double> core) const {
    auto cores = cores_;
    cores.at(k) = std::move(core);
    return {spec_, std::move(cores), bias_};
}

TTGenerator TTGenerator::with_bias(std::vector<double> bias) const {
    return {spec_, cores_, std::move(bias)};
}

// ---------------------------------------------------------------------------

std::vector<double> forward(const TTGenerator& gen, std::span<const double> x) {
    const auto& spec = gen.spec();
    check_input(spec, x);
    Partial t{1, 1, x.size(), std::vector<double>(x.begin(), x.end())};
    for (std::size_t k = 0; k < spec.order(); ++k) t = contract_core(t, gen, k);
    std::vector<double> y = std::move(t.data);
    for (std::size_t u = 0; u < y.size(); ++u) y[u] += gen.bias()[u];
    return y;
}

std::vector<double> forward(const TTGenerator& gen, const TTInput& input) {
    return forward(gen, std::span<const double>(input.values));
}

linalg::Matrix to_dense(const TTGenerator& gen, std::size_t budget) {
    const auto& spec = gen.spec();
    const std::size_t n_in = spec.input_length();
    const std::size_t n_out = spec.output_length();
    if (n_in > budget / std::max<std::size_t>(n_out, 1))
        throw Error(kModule, "dense operator of " + std::to_string(n_out) + " x " +
                                 std::to_string(n_in) + " entries exceeds the budget of " +
                                 std::to_string(budget));
    // Multiply out the cores over the joint (input, output) index of each mode.
    // acc[(iprefix, jprefix), b] for cores processed so far.
    std::size_t in_prefix = 1;
    std::size_t out_prefix = 1;
    std::size_t rank = 1;
    std::vector<double> acc{1.0};
    for (std::size_t k = 0; k < spec.order(); ++k) {
        const std::size_t d = spec.input_dims[k];
        const std::size_t o = spec.output_dims[k];
        const std::size_t rn = spec.ranks[k + 1];
        const auto& core = gen.core(k);
        std::vector<double> next(in_prefix * d * out_prefix * o * rn, 0.0);
        for (std::size_t ip = 0; ip < in_prefix; ++ip)
            for (std::size_t jp = 0; jp < out_prefix; ++jp)
                for (std::size_t a = 0; a < rank; ++a) {
                    const double v = acc[(ip * out_prefix + jp) * rank + a];
                    if (v == 0.0) continue;
                    for (std::size_t i = 0; i < d; ++i)
                        for (std::size_t j = 0; j < o; ++j)
                            for (std::size_t b = 0; b < rn; ++b)
                                next[(((ip * d + i) * (out_prefix * o)) + jp * o + j) * rn + b] +=
                                    v * core[((a * d + i) * o + j) * rn + b];
                }
        acc = std::move(next);
        in_prefix *= d;
        out_prefix *= o;
        rank = rn;
    }
    linalg::Matrix dense(n_out, n_in);
    for (std::size_t i = 0; i < n_in; ++i)
        for (std::size_t j = 0; j < n_out; ++j) dense(j, i) = acc[i * n_out + j];
    return dense;
}

linalg::Matrix jacobian(const TTGenerator& gen, std::span<const double> x) {
    const auto& spec = gen.spec();
    check_input(spec, x);
    const std::size_t K = spec.order();
    const std::size_t n_out = spec.output_length();
    const auto counts = param_count(spec);
    linalg::Matrix jac(n_out, counts.total());

    // Left environments: lefts[k] is the contraction state before core k.
    std::vector<Partial> lefts;
    lefts.reserve(K);
    lefts.push_back(Partial{1, 1, x.size(), std::vector<double>(x.begin(), x.end())});
    for (std::size_t k = 0; k + 1 < K; ++k) lefts.push_back(contract_core(lefts.back(), gen, k));

    // Right environment R[b][s][q]: cores k+1..K-1 as a dense map from the
    // remaining input index s to the remaining output index q, per left bond b.
    std::size_t r_rank = 1;
    std::size_t r_in = 1;
    std::size_t r_out = 1;
    std::vector<double> right{1.0};

    std::size_t col_offset = counts.cores;
    for (std::size_t k = K; k-- > 0;) {
        const std::size_t d = spec.input_dims[k];
        const std::size_t o = spec.output_dims[k];
        const std::size_t ra = spec.ranks[k];
        const std::size_t rb = spec.ranks[k + 1];
        const Partial& left = lefts[k];
        col_offset -= spec.core_size(k);

        // dy[p, j, q] / dG[a, i, j, b] = sum_s left[p][a][i, s] * right[b][s][q]
        for (std::size_t p = 0; p < left.out_prefix; ++p)
            for (std::size_t a = 0; a < ra; ++a)
                for (std::size_t i = 0; i < d; ++i) {
                    const double* lrow = &left.data[(p * ra + a) * left.in_rest + i * r_in];
                    for (std::size_t b = 0; b < rb; ++b)
                        for (std::size_t q = 0; q < r_out; ++q) {
                            double s = 0.0;
                            for (std::size_t si = 0; si < r_in; ++si)
                                s += lrow[si] * right[(b * r_in + si) * r_out + q];
                            if (s == 0.0) continue;
                            for (std::size_t j = 0; j < o; ++j) {
                                const std::size_t row = (p * o + j) * r_out + q;
                                const std::size_t col = col_offset + ((a * d + i) * o + j) * rb + b;
                                jac(row, col) = s;
                            }
                        }
                }

        if (k == 0) break;
        // Absorb core k into the right environment.
        const auto& core = gen.core(k);
        std::vector<double> next(ra * (d * r_in) * (o * r_out), 0.0);
        const std::size_t n_in = d * r_in;
        const std::size_t n_o = o * r_out;
        for (std::size_t a = 0; a < ra; ++a)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < o; ++j)
                    for (std::size_t b = 0; b < rb; ++b) {
                        const double g = core[((a * d + i) * o + j) * rb + b];
                        if (g == 0.0) continue;
                        for (std::size_t si = 0; si < r_in; ++si)
                            for (std::size_t q = 0; q < r_out; ++q)
                                next[(a * n_in + i * r_in + si) * n_o + j * r_out + q] +=
                                    g * right[(b * r_in + si) * r_out + q];
                    }
        right = std::move(next);
        r_rank = ra;
        r_in = n_in;
        r_out = n_o;
    }
    (void)r_rank;

    for (std::size_t u = 0; u < n_out; ++u) jac(u, counts.cores + u) = 1.0;
    return jac;
}

linalg::Matrix jacobian(const TTGenerator& gen, const TTInput& input) {
    return jacobian(gen, std::span<const double>(input.values));
}

// ---------------------------------------------------------------------------

TTSvdResult tt_svd(const linalg::Matrix& dense, const std::vector<std::size_t>& input_dims,
                   const std::vector<std::size_t>& output_dims, const TruncationOptions& options) {
    const std::size_t K = input_dims.size();
    TTSpec spec{input_dims, output_dims, std::vector<std::size_t>(K + 1, 1)};
    spec.validate();
    const std::size_t n_in = spec.input_length();
    const std::size_t n_out = spec.output_length();
    if (dense.rows() != n_out || dense.cols() != n_in)
        throw Error(kModule, "tt_svd: dense operator is " + std::to_string(dense.rows()) + " x " +
                                 std::to_string(dense.cols()) + ", target dims require " +
                                 std::to_string(n_out) + " x " + std::to_string(n_in));
    if (!options.max_ranks.empty() && options.max_ranks.size() != K - 1)
        throw Error(kModule, "tt_svd: max_ranks needs " + std::to_string(K - 1) + " entries");

    // Interleave (i_k, j_k) into one mode of size d_k * o_k, row-major over modes.
    std::vector<std::size_t> modes(K);
    for (std::size_t k = 0; k < K; ++k) modes[k] = input_dims[k] * output_dims[k];
    std::vector<double> tensor(n_in * n_out);
    for (std::size_t i = 0; i < n_in; ++i)
        for (std::size_t j = 0; j < n_out; ++j) {
            std::size_t ri = i, rj = j, flat = 0, stride = 1;
            for (std::size_t k = K; k-- > 0;) {
                const std::size_t ik = ri % input_dims[k];
                const std::size_t jk = rj % output_dims[k];
                ri /= input_dims[k];
                rj /= output_dims[k];
                flat += (ik * output_dims[k] + jk) * stride;
                stride *= modes[k];
            }
            tensor[flat] = dense(j, i);
        }

    const double delta =
        K > 1 ? options.tolerance / std::sqrt(static_cast<double>(K - 1)) : 0.0;
    TruncationReport report;
    report.kept_ranks.assign(K + 1, 1);
    std::vector<std::vector<double>> cores(K);

    std::size_t rank = 1;
    std::size_t rest = n_in * n_out;
    std::vector<double> carry = std::move(tensor);  // (rank * n_k) x (rest / n_k)
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const std::size_t rows = rank * modes[k];
        const std::size_t cols = rest / modes[k];
        linalg::Matrix unfolding(rows, cols);
        unfolding.data() = carry;
        const auto svd = linalg::jacobi_svd(unfolding);
        const std::size_t full = svd.sigma.size();

        std::size_t keep = 0;
        for (double s : svd.sigma)
            if (s > 0.0) ++keep;
        keep = std::max<std::size_t>(keep, 1);
        if (delta > 0.0) {
            double tail = 0.0;
            while (keep > 1) {
                const double s = svd.sigma[keep - 1];
                if (tail + s * s > delta * delta) break;
                tail += s * s;
                --keep;
            }
        }
        if (!options.max_ranks.empty()) {
            const std::size_t cap = options.max_ranks[k];
            if (cap == 0) throw Error(kModule, "tt_svd: max_ranks entries must be positive");
            if (cap > full) report.clamped = true;
            keep = std::min(keep, cap);
        }
        keep = std::min(keep, full);

        report.discarded.emplace_back(svd.sigma.begin() + static_cast<std::ptrdiff_t>(keep),
                                      svd.sigma.end());
        report.kept_ranks[k + 1] = keep;

        cores[k].resize(rows * keep);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < keep; ++c) cores[k][r * keep + c] = svd.u(r, c);

        carry.assign(keep * cols, 0.0);
        for (std::size_t c = 0; c < keep; ++c)
            for (std::size_t m = 0; m < cols; ++m) carry[c * cols + m] = svd.sigma[c] * svd.v(m, c);
        rank = keep;
        rest = cols;
    }
    cores[K - 1] = std::move(carry);

    double energy = 0.0;
    for (const auto& d : report.discarded)
        for (double s : d) energy += s * s;
    report.error_bound = std::sqrt(energy);

    spec.ranks = report.kept_ranks;
    auto gen = TTGenerator(spec, std::move(cores), std::vector<double>(n_out, 0.0));
    return {std::move(gen), std::move(report)};
}

// ---------------------------------------------------------------------------

std::vector<double> fit_length(std::span<const double> values, std::size_t length) {
    if (values.empty()) throw Error(kModule, "cannot fit an empty output");
    std::vector<double> out(length);
    for (std::size_t u = 0; u < length; ++u) out[u] = values[u % values.size()];
    return out;
}

linalg::Matrix fit_rows(const linalg::Matrix& jac, std::size_t length) {
    if (jac.rows() == 0) throw Error(kModule, "cannot fit an empty Jacobian");
    if (jac.rows() == length) return jac;
    linalg::Matrix out(length, jac.cols());
    for (std::size_t u = 0; u < length; ++u) {
        const auto src = jac.row(u % jac.rows());
        std::copy(src.begin(), src.end(), out.row(u).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "tensometa-tt";
constexpr int kFormatVersion = 1;

void write_list(std::ostream& out, std::string_view key, const std::vector<std::size_t>& v) {
    out << key;
    for (auto x : v) out << ' ' << x;
    out << '\n';
}

void write_values(std::ostream& out, const std::vector<double>& v) {
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out << buf << ((i + 1) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ');
    }
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-empty, non-comment line split into whitespace tokens.
    std::vector<std::string> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            std::vector<std::string> tokens;
            for (std::string t; ss >> t;) tokens.push_back(std::move(t));
            if (!tokens.empty()) return tokens;
        }
        throw fail("unexpected end of checkpoint");
    }

    Error fail(const std::string& what) const {
        return Error(kModule, "checkpoint line " + std::to_string(line_no_) + ": " + what);
    }

    std::vector<std::size_t> list(std::string_view key) {
        auto t = next();
        if (t.front() != key) throw fail("expected '" + std::string(key) + "'");
        std::vector<std::size_t> out;
        for (std::size_t i = 1; i < t.size(); ++i) {
            try {
                std::size_t pos = 0;
                const long long v = std::stoll(t[i], &pos);
                if (pos != t[i].size() || v < 0) throw std::invalid_argument(t[i]);
                out.push_back(static_cast<std::size_t>(v));
            } catch (const std::exception&) {
                throw fail("bad integer '" + t[i] + "' in " + std::string(key));
            }
        }
        return out;
    }

    std::vector<double> values(std::size_t count) {
        std::vector<double> out;
        out.reserve(count);
        while (out.size() < count) {
            for (const auto& tok : next()) {
                char* end = nullptr;
                const double v = std::strtod(tok.c_str(), &end);
                if (end != tok.c_str() + tok.size()) throw fail("bad number '" + tok + "'");
                out.push_back(v);
            }
        }
        if (out.size() != count) throw fail("too many values in block");
        return out;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

} // namespace

void write_checkpoint(std::ostream& out, const TTGenerator& gen) {
    const auto& s = gen.spec();
    out << kMagic << ' ' << kFormatVersion << '\n';
    write_list(out, "input_dims", s.input_dims);
    write_list(out, "output_dims", s.output_dims);
    write_list(out, "ranks", s.ranks);
    for (std::size_t k = 0; k < s.order(); ++k) {
        out << "core " << k << ' ' << gen.core(k).size() << '\n';
        write_values(out, gen.core(k));
    }
    out << "bias " << gen.bias().size() << '\n';
    write_values(out, gen.bias());
}

std::string serialize(const TTGenerator& gen) {
    std::ostringstream out;
    write_checkpoint(out, gen);
    return out.str();
}

TTGenerator read_checkpoint(std::istream& in) {
    LineReader reader(in);
    const auto header = reader.next();
    if (header.size() != 2 || header[0] != kMagic || header[1] != std::to_string(kFormatVersion))
        throw reader.fail("not a tensometa-tt checkpoint (version " +
                          std::to_string(kFormatVersion) + ")");
    TTSpec spec;
    spec.input_dims = reader.list("input_dims");
    spec.output_dims = reader.list("output_dims");
    spec.ranks = reader.list("ranks");
    spec.validate();
    std::vector<std::vector<double>> cores(spec.order());
    for (std::size_t k = 0; k < spec.order(); ++k) {
        const auto head = reader.list("core");
        if (head.size() != 2 || head[0] != k || head[1] != spec.core_size(k))
            throw reader.fail("core header mismatch for core " + std::to_string(k));
        cores[k] = reader.values(head[1]);
    }
    const auto bias_head = reader.list("bias");
    if (bias_head.size() != 1 || bias_head[0] != spec.output_length())
        throw reader.fail("bias header mismatch");
    auto bias = reader.values(bias_head[0]);
    return {std::move(spec), std::move(cores), std::move(bias)};
}

TTGenerator parse(const std::string& text) {
    std::istringstream in(text);
    return read_checkpoint(in);
}

} // namespace tensometa::tt
