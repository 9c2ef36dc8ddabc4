#include <algorithm>
#include <cmath>

#include "harness_detail.hpp"
#include "tensometa/common.hpp"
#include "tensometa/graddiff.hpp"
#include "tensometa/harness.hpp"
#include "tensometa/model.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";

struct Evaluation {
    double loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

double cross_entropy(double p, int label) {
    constexpr double kFloor = 1e-12;
    return label == 1 ? -std::log(std::max(p, kFloor)) : -std::log(std::max(1.0 - p, kFloor));
}

class Trainer {
public:
    Trainer(const Dataset& data, const ClassifierConfig& config, const qsim::CircuitSpec& circuit,
            const qsim::Hamiltonian& readout)
        : data_(data), config_(config), circuit_(circuit), readout_(readout) {
        for (std::size_t i = 0; i < data.samples.size(); ++i)
            (data.samples[i].split == Split::Train ? train_ : test_).push_back(i);
    }

    [[nodiscard]] double readout(const model::Parameterization& m, std::size_t sample) const {
        return qsim::expectation(qsim::simulate_state(circuit_, m.angles(data_.samples[sample].x)), readout_);
    }

    Evaluation evaluate(const model::Parameterization& m) const {
        const auto& all = data_.samples;
        std::vector<double> z(all.size());
        parallel_for(all.size(), [&](std::size_t i) { z[i] = readout(m, i); });
        Evaluation e;
        std::size_t train_hits = 0, test_hits = 0;
        for (std::size_t i : train_) {
            const double p = class_probability(z[i], config_.temperature);
            e.loss += cross_entropy(p, all[i].label);
            train_hits += (p >= 0.5) == (all[i].label == 1);
        }
        for (std::size_t i : test_) {
            const double p = class_probability(z[i], config_.temperature);
            test_hits += (p >= 0.5) == (all[i].label == 1);
        }
        if (!train_.empty()) {
            e.loss /= static_cast<double>(train_.size());
            e.train_accuracy = static_cast<double>(train_hits) / static_cast<double>(train_.size());
        }
        if (!test_.empty()) e.test_accuracy = static_cast<double>(test_hits) / static_cast<double>(test_.size());
        return e;
    }

    /// Trains a copy of `initial`; returns the per-epoch table (epoch 0 = untrained).
    Table train(const model::Parameterization& initial, const std::string& name, std::uint64_t seed,
                std::string& failure) const {
        Table history{name, {"epoch", "loss", "train_accuracy", "test_accuracy"}, {}};
        const auto start = evaluate(initial);
        history.add_row({0.0, start.loss, start.train_accuracy, start.test_accuracy});
        if (config_.epochs == 0 || train_.empty()) return history;

        std::vector<Evaluation> per_epoch;
        std::size_t batch_calls = 0;
        optim::TrainProblem problem;
        problem.sample_count = train_.size();
        problem.batch_size = config_.batch_size;
        problem.batch_gradient = [&](std::span<const double> theta, std::span<const std::size_t> batch) {
            auto m = initial.clone();
            m->set_params(theta);
            const std::uint64_t call = batch_calls++;
            std::vector<std::vector<double>> grads(batch.size());
            std::vector<double> losses(batch.size());
            parallel_for(batch.size(), [&](std::size_t b) {
                const auto& s = data_.samples[train_[batch[b]]];
                const auto angles = m->angles(s.x);
                const double z =
                    qsim::expectation(qsim::simulate_state(circuit_, angles), readout_);
                const double p = class_probability(z, config_.temperature);
                losses[b] = cross_entropy(p, s.label);
                auto gw = grad::grad_wrt_angles(circuit_, angles, readout_);
                if (config_.gradient_sigma > 0.0) {
                    auto rng = make_rng(seed, stream::kMeasurement, call * problem.sample_count + b);
                    gw = grad::inject_measurement_noise(gw, config_.gradient_sigma, rng);
                }
                // d loss / d z for p = logistic(-z / (2T)).
                const double dz = (p - static_cast<double>(s.label)) * (-0.5 / config_.temperature);
                grads[b] = grad::chain_to_cores(gw, m->angle_jacobian(s.x));
                for (auto& v : grads[b]) v *= dz;
            });
            optim::BatchResult r;
            r.grad.assign(theta.size(), 0.0);
            const double inv = 1.0 / static_cast<double>(batch.size());
            for (std::size_t b = 0; b < batch.size(); ++b) {
                r.loss += losses[b] * inv;
                for (std::size_t k = 0; k < theta.size(); ++k) r.grad[k] += grads[b][k] * inv;
            }
            return r;
        };
        problem.evaluate = [&](std::span<const double> theta) {
            auto m = initial.clone();
            m->set_params(theta);
            per_epoch.push_back(evaluate(*m));
            return optim::EpochMetrics{per_epoch.back().loss, per_epoch.back().test_accuracy};
        };
        const auto result = optim::train_loop(initial.params(), problem,
                                              optim::AdamState::create(initial.trainable_count(), config_.lr),
                                              config_.epochs, derive_seed(seed, stream::kShuffle));
        for (std::size_t e = 0; e < result.history.rows.size(); ++e)
            history.add_row({static_cast<double>(e + 1), per_epoch[e].loss, per_epoch[e].train_accuracy,
                             per_epoch[e].test_accuracy});
        if (result.history.aborted)
            failure = name + ": training stopped at epoch " + std::to_string(result.history.failed_epoch) +
                      " (" + result.history.failure + ")";
        return history;
    }

private:
    const Dataset& data_;
    const ClassifierConfig& config_;
    const qsim::CircuitSpec& circuit_;
    const qsim::Hamiltonian& readout_;
    std::vector<std::size_t> train_, test_;
};

} // namespace

void ClassifierConfig::validate() const {
    if (qubits == 0 || qubits > 16) throw Error(kModule, "classify: 'qubits' must lie in [1, 16]");
    if (layers == 0) throw Error(kModule, "classify: 'layers' must be positive");
    tt.validate();
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(kModule, "classify: 'lr' must be >= 0");
    if (!(temperature > 0.0)) throw Error(kModule, "classify: 'temperature' must be positive");
    if (!(gradient_sigma >= 0.0)) throw Error(kModule, "classify: 'gradient_sigma' must be >= 0");
    if (!(direct_init_range >= 0.0)) throw Error(kModule, "classify: 'direct_init_range' must be >= 0");
}

double class_probability(double z_expectation, double temperature) {
    // Centered logistic on (1 - <Z>)/2: <Z> = +1 maps to class 0, -1 to class 1.
    return 1.0 / (1.0 + std::exp(((1.0 - z_expectation) / 2.0 - 0.5) / -temperature));
}

ExperimentResult run_classifier(const Dataset& data, const ClassifierConfig& config, std::uint64_t seed) {
    config.validate();
    data.validate();
    if (data.samples.empty()) throw Error(kModule, "run_classifier: empty dataset");
    if (data.feature_length() != config.tt.input_length())
        throw Error(kModule, "run_classifier: features have length " + std::to_string(data.feature_length()) +
                                 " but the TT input length is " + std::to_string(config.tt.input_length()));

    const auto circuit = qsim::build_ansatz(config.qubits, config.layers, qsim::Entangler::Ring);
    std::string word(config.qubits, 'I');
    word[0] = 'Z';
    const qsim::Hamiltonian readout(config.qubits, {{1.0, word}});
    const Trainer trainer(data, config, circuit, readout);

    ExperimentResult result;
    result.kind = "classify";
    result.seed = seed;
    Table summary{"classifier",
                  {"arm", "trainables", "initial_test_accuracy", "final_train_accuracy", "final_test_accuracy",
                   "final_loss"},
                  {}};
    std::vector<std::string> failures;

    auto run_arm = [&](const model::Parameterization& m, double arm, const std::string& name) {
        std::string failure;
        auto history = trainer.train(m, name, derive_seed(seed, static_cast<std::uint64_t>(arm)), failure);
        if (!failure.empty()) failures.push_back(failure);
        const auto& first = history.rows.front();
        const auto& last = history.rows.back();
        summary.add_row({arm, static_cast<double>(m.trainable_count()), first[3], last[2], last[3], last[1]});
        result.tables.push_back(std::move(history));
    };

    const model::TTParameterization tt_model(tt::TTGenerator::random(config.tt, derive_seed(seed, stream::kInit)),
                                             circuit.param_count);
    run_arm(tt_model, 0.0, "history_tt");
    if (config.run_direct) {
        const model::DirectParameterization direct(
            model::random_angles(circuit.param_count, config.direct_init_range,
                                 derive_seed(seed, stream::kDirectInit)),
            model::block_mean_encoding(config.qubits, circuit.param_count, data.feature_length(),
                                       config.direct_encoding_scale),
            data.feature_length());
        run_arm(direct, 1.0, "history_direct");
    }

    const std::size_t col = summary.column("final_test_accuracy");
    result.metrics.push_back({"test_accuracy_tt", summary.rows[0][col]});
    if (config.run_direct) result.metrics.push_back({"test_accuracy_direct", summary.rows[1][col]});
    result.metrics.push_back({"train_samples", static_cast<double>(data.count(Split::Train))});
    result.metrics.push_back({"test_samples", static_cast<double>(data.count(Split::Test))});
    result.notes = {{"readout", "logistic(((1 - <Z0>)/2 - 1/2) / T) on qubit 0"},
                    {"direct_encoding", "block means added to layer-0 RY angles"}};
    result.checks.push_back({"training_finite", failures.empty(), failures.empty() ? "" : failures.front()});
    result.tables.insert(result.tables.begin(), std::move(summary));
    return result;
}

} // namespace tensometa::harness
