#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tensometa::optim {

struct AdamState {
    std::size_t t = 0;
    std::vector<double> m;
    std::vector<double> v;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    [[nodiscard]] static AdamState create(std::size_t n, double lr = 0.001);
};

/// One bias-corrected Adam update, in place. Throws on length mismatch or a
/// non-finite gradient (state and params are left untouched in that case).
void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> grads);

struct DfoOptions {
    double rho_begin = 0.5;
    double rho_end = 1e-6;
    std::size_t budget = 500;
    /// Keep going after convergence until exactly `budget` evaluations are used:
    /// restart from the best point, and spend any remainder too small for a
    /// restart on coordinate probes of length rho_end.
    bool exhaust_budget = false;
};

struct DfoResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evaluations = 0;
    bool budget_exhausted = false;  // stopped on budget before rho reached rho_end
    double final_rho = 0.0;
    std::size_t restarts = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained linear-model trust-region minimizer in the style of COBYLA:
/// n + 1 interpolation points define a linear model, steps have length rho,
/// and rho halves toward rho_end when a poised model stops making progress.
/// Uses at most `budget` evaluations and returns the best point seen.
[[nodiscard]] DfoResult dfo_minimize(const Objective& f, std::vector<double> x0,
                                     const DfoOptions& options = {});

// ---------------------------------------------------------------------------

struct BatchResult {
    double loss = 0.0;
    std::vector<double> grad;
};

struct EpochMetrics {
    double loss = 0.0;
    double metric = 0.0;
};

/// Wiring for gradient-based training. Samples 0..sample_count-1 are shuffled
/// each epoch and split into batches of `batch_size` (0 means full batch).
struct TrainProblem {
    std::size_t sample_count = 1;
    std::size_t batch_size = 0;
    std::function<BatchResult(std::span<const double> params, std::span<const std::size_t> batch)>
        batch_gradient;
    /// Epoch-end loss and metric; when absent the loss is the mean batch loss
    /// and the metric is 0.
    std::function<EpochMetrics(std::span<const double> params)> evaluate;
};

struct HistoryRow {
    std::size_t epoch = 0;
    double loss = 0.0;
    double metric = 0.0;
    double wall_ms = 0.0;
};

struct History {
    std::vector<HistoryRow> rows;
    bool aborted = false;
    std::size_t failed_epoch = 0;
    std::string failure;
};

struct TrainResult {
    std::vector<double> params;
    History history;
};

/// Runs `epochs` passes of Adam. Shuffling uses a stream derived from `seed`
/// and the epoch. A non-finite loss or gradient stops training and records
/// the epoch (1-based) in the history.
[[nodiscard]] TrainResult train_loop(std::vector<double> params, const TrainProblem& problem,
                                     AdamState state, std::size_t epochs, std::uint64_t seed);

/// Columns: epoch, loss, metric, wall_ms. Wall time is nondeterministic, so it
/// is written only with `with_wall_time`; otherwise the column is left empty.
void write_history_csv(std::ostream& out, const History& history, bool with_wall_time = false);

} // namespace tensometa::optim
