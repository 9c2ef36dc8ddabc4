#include "tensometa/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "tensometa/common.hpp"
#include "tensometa/linalg.hpp"

namespace tensometa::optim {
namespace {
constexpr std::string_view kModule = "optim";

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}
} // namespace

AdamState AdamState::create(std::size_t n, double lr) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    return s;
}

void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> grads) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw Error(kModule, "adam_step: " + std::to_string(params.size()) + " params, " +
                                 std::to_string(grads.size()) + " gradients, state of size " +
                                 std::to_string(state.m.size()));
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw Error(kModule, "adam_step: non-finite gradient at index " + std::to_string(i));
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

// ---------------------------------------------------------------------------

namespace {

DfoResult dfo_single(const Objective& f, std::vector<double> x0, const DfoOptions& options);

} // namespace

DfoResult dfo_minimize(const Objective& f, std::vector<double> x0, const DfoOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0) throw Error(kModule, "dfo_minimize: empty starting point");
    if (!(options.rho_end > 0.0) || options.rho_end > options.rho_begin)
        throw Error(kModule, "dfo_minimize: need 0 < rho_end <= rho_begin");
    if (options.budget < n + 2)
        throw Error(kModule, "dfo_minimize: budget " + std::to_string(options.budget) +
                                 " is below dimension + 2 = " + std::to_string(n + 2));
    auto result = dfo_single(f, std::move(x0), options);
    if (!options.exhaust_budget) return result;

    while (options.budget - result.evaluations >= n + 2) {
        DfoOptions again = options;
        again.budget = options.budget - result.evaluations;
        const auto r = dfo_single(f, result.x, again);
        result.evaluations += r.evaluations;
        ++result.restarts;
        if (r.f < result.f) {
            result.f = r.f;
            result.x = r.x;
        }
        result.final_rho = r.final_rho;
    }
    // Coordinate probes around the incumbent for the last few evaluations.
    for (std::size_t k = 0; result.evaluations < options.budget; ++k) {
        auto probe = result.x;
        probe[(k / 2) % n] += (k % 2 == 0 ? 1.0 : -1.0) * options.rho_end;
        const double v = f(probe);
        ++result.evaluations;
        if (v < result.f) {
            result.f = v;
            result.x = std::move(probe);
        }
    }
    result.budget_exhausted = true;
    return result;
}

namespace {

DfoResult dfo_single(const Objective& f, std::vector<double> x0, const DfoOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0) throw Error(kModule, "dfo_minimize: empty starting point");
    if (!(options.rho_end > 0.0) || options.rho_end > options.rho_begin)
        throw Error(kModule, "dfo_minimize: need 0 < rho_end <= rho_begin");
    if (options.budget < n + 2)
        throw Error(kModule, "dfo_minimize: budget " + std::to_string(options.budget) +
                                 " is below dimension + 2 = " + std::to_string(n + 2));

    DfoResult result;
    std::size_t used = 0;
    auto eval = [&](std::span<const double> x) {
        ++used;
        return f(x);
    };

    // Interpolation set: points[0..n]; the best one is tracked by index.
    std::vector<std::vector<double>> points(n + 1, x0);
    std::vector<double> values(n + 1);
    values[0] = eval(x0);
    double rho = options.rho_begin;
    for (std::size_t i = 0; i < n; ++i) {
        points[i + 1][i] += rho;
        values[i + 1] = eval(points[i + 1]);
    }
    auto best_index = [&] {
        std::size_t b = 0;
        for (std::size_t i = 1; i <= n; ++i)
            if (values[i] < values[b]) b = i;
        return b;
    };

    linalg::Matrix disp(n, n), inv(n, n);
    std::vector<std::size_t> others(n);
    std::vector<double> g(n), trial(n);

    while (true) {
        if (used >= options.budget) {
            result.budget_exhausted = true;
            break;
        }
        const std::size_t b = best_index();
        for (std::size_t k = 0, i = 0; i <= n; ++i)
            if (i != b) others[k++] = i;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) disp(k, j) = points[others[k]][j] - points[b][j];

        // Columns of the inverse: column k is normal to every displacement
        // except k, and 1/||col k|| is vertex k's distance to the opposite face.
        bool singular = false;
        for (std::size_t c = 0; c < n && !singular; ++c) {
            std::vector<double> e(n, 0.0);
            e[c] = 1.0;
            const auto col = linalg::solve(disp, e);
            if (col.empty()) {
                singular = true;
                break;
            }
            for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
        }

        // Geometry: worst vertex by distance (too far) or by face distance (too flat).
        std::size_t worst = n;
        double worst_score = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double dist = distance(points[others[k]], points[b]);
            double face = 0.0;
            if (!singular) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += inv(r, k) * inv(r, k);
                face = 1.0 / std::sqrt(s);
            }
            const double score = std::max(dist / (2.0 * rho), (0.1 * rho) / std::max(face, 1e-300));
            if (score > worst_score) {
                worst_score = score;
                worst = k;
            }
        }

        std::fill(g.begin(), g.end(), 0.0);
        if (!singular)
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t k = 0; k < n; ++k) g[r] += inv(r, k) * (values[others[k]] - values[b]);

        if (worst != n) {
            // Replace that vertex by one at distance rho along its face normal,
            // on the side the linear model prefers.
            std::vector<double> dir(n);
            if (!singular) {
                for (std::size_t r = 0; r < n; ++r) dir[r] = inv(r, worst);
            } else {
                // Degenerate set: fall back to the coordinate axis cycled by vertex slot.
                dir[worst % n] = 1.0;
            }
            const double len = linalg::norm2(dir);
            const double sign = linalg::dot(dir, g) > 0.0 ? -1.0 : 1.0;
            for (std::size_t r = 0; r < n; ++r) trial[r] = points[b][r] + sign * rho * dir[r] / len;
            const std::size_t slot = others[worst];
            points[slot] = trial;
            values[slot] = eval(trial);
            continue;
        }

        const double gnorm = linalg::norm2(g);
        bool improved = false;
        if (gnorm > 0.0 && std::isfinite(gnorm)) {
            for (std::size_t r = 0; r < n; ++r) trial[r] = points[b][r] - rho * g[r] / gnorm;
            const double ft = eval(trial);
            // The new point always joins the set in place of the vertex farthest
            // from it; that keeps the model local to the current radius.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = distance(points[others[k]], trial);
                if (d > far_d) {
                    far_d = d;
                    far = others[k];
                }
            }
            if (ft < values[b]) {
                improved = true;
                points[far] = trial;
                values[far] = ft;
            } else if (ft < values[far]) {
                points[far] = trial;
                values[far] = ft;
            }
        }
        if (!improved) {
            if (rho <= options.rho_end) break;
            rho *= 0.5;
            if (rho <= 1.5 * options.rho_end) rho = options.rho_end;
        }
    }

    const std::size_t b = best_index();
    result.x = points[b];
    result.f = values[b];
    result.evaluations = used;
    result.final_rho = rho;
    if (result.budget_exhausted && rho <= options.rho_end) result.budget_exhausted = false;
    return result;
}

} // namespace

// ---------------------------------------------------------------------------

TrainResult train_loop(std::vector<double> params, const TrainProblem& problem, AdamState state,
                       std::size_t epochs, std::uint64_t seed) {
    if (!problem.batch_gradient) throw Error(kModule, "train_loop: no gradient callback");
    if (problem.sample_count == 0) throw Error(kModule, "train_loop: sample_count must be positive");
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw Error(kModule, "train_loop: optimizer state does not match the parameter count");

    TrainResult out;
    const std::size_t batch =
        problem.batch_size == 0 ? problem.sample_count : std::min(problem.batch_size, problem.sample_count);
    std::vector<std::size_t> order(problem.sample_count);

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (batch < problem.sample_count) {
            auto rng = make_rng(seed, stream::kShuffle, epoch);
            std::shuffle(order.begin(), order.end(), rng);
        }
        double loss_sum = 0.0;
        std::size_t batches = 0;
        std::string failure;
        for (std::size_t begin = 0; begin < order.size() && failure.empty(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            auto br = problem.batch_gradient(
                params, std::span<const std::size_t>(order.data() + begin, end - begin));
            if (!std::isfinite(br.loss)) {
                failure = "non-finite loss";
                break;
            }
            if (std::any_of(br.grad.begin(), br.grad.end(), [](double v) { return !std::isfinite(v); })) {
                failure = "non-finite gradient";
                break;
            }
            adam_step(state, params, br.grad);
            loss_sum += br.loss;
            ++batches;
        }
        HistoryRow row;
        row.epoch = epoch;
        if (failure.empty()) {
            if (problem.evaluate) {
                const auto m = problem.evaluate(params);
                row.loss = m.loss;
                row.metric = m.metric;
                if (!std::isfinite(m.loss)) failure = "non-finite loss";
            } else {
                row.loss = loss_sum / static_cast<double>(batches);
            }
        }
        if (!failure.empty()) {
            out.history.aborted = true;
            out.history.failed_epoch = epoch;
            out.history.failure = failure;
            break;
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                          .count();
        out.history.rows.push_back(row);
    }
    out.params = std::move(params);
    return out;
}

void write_history_csv(std::ostream& out, const History& history, bool with_wall_time) {
    out << "epoch,loss,metric,wall_ms\n";
    char buf[160];
    for (const auto& r : history.rows) {
        if (with_wall_time)
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.3f\n", r.epoch, r.loss, r.metric, r.wall_ms);
        else
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,\n", r.epoch, r.loss, r.metric);
        out << buf;
    }
}

} // namespace tensometa::optim
