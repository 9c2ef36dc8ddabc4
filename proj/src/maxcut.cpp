#include <cmath>
#include <numeric>

#include "harness_detail.hpp"
#include "tensometa/common.hpp"
#include "tensometa/harness.hpp"
#include "tensometa/model.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";

// Test graphs use sub-streams 0..num_graphs-1; pre-training graphs live far away.
constexpr std::uint64_t kTrainGraphOffset = 1'000'000;

struct GraphProblem {
    Graph graph;
    qsim::Hamiltonian cost;
    qsim::CircuitSpec circuit;
    std::vector<double> features;
};

GraphProblem make_problem(const Graph& g, const MaxCutConfig& config) {
    GraphProblem p;
    p.graph = g;
    p.cost = qsim::maxcut_hamiltonian(g.n, g.edges);
    p.circuit = maxcut_circuit(g, config);
    p.features = graph_features(g, config.tt.input_length());
    return p;
}

} // namespace

void MaxCutConfig::validate() const {
    if (n < 2 || n > 20) throw Error(kModule, "maxcut: 'n' must lie in [2, 20]");
    if (!(p_edge >= 0.0 && p_edge <= 1.0)) throw Error(kModule, "maxcut: 'p_edge' must lie in [0, 1]");
    if (num_graphs == 0) throw Error(kModule, "maxcut: 'num_graphs' must be positive");
    if (depth == 0) throw Error(kModule, "maxcut: 'depth' must be positive");
    tt.validate();
    if (!(meta_lr >= 0.0) || !std::isfinite(meta_lr)) throw Error(kModule, "maxcut: 'meta_lr' must be >= 0");
    if (meta_epochs > 0 && train_graphs == 0)
        throw Error(kModule, "maxcut: 'train_graphs' must be positive when 'meta_epochs' > 0");
    if (!(direct_init_range >= 0.0)) throw Error(kModule, "maxcut: 'direct_init_range' must be >= 0");
    noise.validate();
    if (!noise.noiseless() && backend == qsim::Backend::Statevector && noise.depolarizing > 0.0)
        throw Error(kModule, "maxcut: depolarizing noise needs the 'trajectory' or 'density-matrix' backend");
}

qsim::CircuitSpec maxcut_circuit(const Graph& g, const MaxCutConfig& config) {
    if (config.ansatz == MaxCutAnsatz::Qaoa)
        return qsim::build_qaoa(qsim::maxcut_hamiltonian(g.n, g.edges), config.depth);
    return qsim::build_ansatz(g.n, config.depth, qsim::Entangler::Ring);
}

ExperimentResult run_maxcut(const MaxCutConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<Graph> graphs;
    for (std::size_t i = 0; i < config.num_graphs; ++i)
        graphs.push_back(gen_erdos_renyi(config.n, config.p_edge, derive_seed(seed, stream::kGraph, i)));
    return run_maxcut(config, graphs, seed);
}

ExperimentResult run_maxcut(const MaxCutConfig& config, const std::vector<Graph>& graphs,
                            std::uint64_t seed) {
    config.validate();
    if (graphs.empty()) throw Error(kModule, "run_maxcut: no graphs");
    for (const auto& g : graphs)
        if (g.n < 2 || g.n > config.n)
            throw Error(kModule, "run_maxcut: graph with " + std::to_string(g.n) +
                                     " vertices does not fit n = " + std::to_string(config.n));

    ExperimentResult result;
    result.kind = "maxcut";
    result.seed = seed;

    // Stage 1: pre-train the generator on separate graphs so it maps graph
    // statistics to good circuit parameters (noiseless, adjoint gradients).
    std::vector<GraphProblem> train;
    for (std::size_t j = 0; j < config.train_graphs && config.meta_epochs > 0; ++j)
        train.push_back(make_problem(
            gen_erdos_renyi(config.n, config.p_edge, derive_seed(seed, stream::kGraph, kTrainGraphOffset + j)),
            config));

    const std::size_t angle_count = make_problem(graphs.front(), config).circuit.param_count;
    const model::TTParameterization base(tt::TTGenerator::random(config.tt, derive_seed(seed, stream::kInit)),
                                         angle_count);
    std::vector<double> meta_params = base.params();

    Table meta{"meta_history", {"epoch", "loss"}, {}};
    if (!train.empty()) {
        optim::TrainProblem problem;
        problem.sample_count = train.size();
        problem.batch_gradient = [&](std::span<const double> theta, std::span<const std::size_t> batch) {
            std::vector<std::vector<double>> grads(batch.size());
            std::vector<double> losses(batch.size());
            parallel_for(batch.size(), [&](std::size_t b) {
                auto m = base.clone();
                m->set_params(theta);
                const auto& gp = train[batch[b]];
                const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(1, gp.graph.edges.size()));
                losses[b] = -scale * m->output(gp.features, gp.circuit, gp.cost);
                grads[b] = m->gradient(gp.features, gp.circuit, gp.cost);
                for (auto& v : grads[b]) v *= -scale;
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
        auto trained = optim::train_loop(meta_params, problem,
                                         optim::AdamState::create(meta_params.size(), config.meta_lr),
                                         config.meta_epochs, derive_seed(seed, stream::kShuffle));
        if (trained.history.aborted)
            throw Error(kModule, "run_maxcut: pre-training stopped at epoch " +
                                     std::to_string(trained.history.failed_epoch) + " (" +
                                     trained.history.failure + ")");
        meta_params = std::move(trained.params);
        for (const auto& row : trained.history.rows)
            meta.add_row({static_cast<double>(row.epoch), row.loss});
    }

    // Stage 2: per-graph derivative-free optimization, same budget for both arms.
    Table table{"maxcut",
                {"graph", "edges", "max_cut", "h_tt", "h_direct", "improvement", "improvement_pct",
                 "ratio_tt", "ratio_direct", "h_tt_start", "h_direct_start", "evals_tt", "evals_direct"},
                {}};
    std::vector<std::vector<double>> rows(graphs.size());
    parallel_for(graphs.size(), [&](std::size_t i) {
        const auto gp = make_problem(graphs[i], config);
        const std::uint64_t opt_seed = derive_seed(seed, stream::kTrajectory, i);
        const std::uint64_t eval_seed = derive_seed(seed, stream::kMeasurement, i);
        auto energy = [&](std::span<const double> angles, std::uint64_t s) {
            return detail::energy(gp.circuit, angles, gp.cost, config.noise, config.backend, s);
        };

        const model::TTParameterization graph_base(base.generator(), gp.circuit.param_count);
        auto m = graph_base.clone();
        std::size_t calls_tt = 0;
        const auto tt_res = optim::dfo_minimize(
            [&](std::span<const double> theta) {
                ++calls_tt;
                auto local = graph_base.clone();
                local->set_params(theta);
                return -energy(local->angles(gp.features), opt_seed);
            },
            meta_params, config.dfo);
        m->set_params(tt_res.x);
        const auto tt_angles = m->angles(gp.features);

        std::size_t calls_direct = 0;
        const auto w0 = model::random_angles(gp.circuit.param_count, config.direct_init_range,
                                             derive_seed(seed, stream::kDirectInit, i));
        const auto direct_res = optim::dfo_minimize(
            [&](std::span<const double> w) {
                ++calls_direct;
                return -energy(w, opt_seed);
            },
            w0, config.dfo);

        auto start = graph_base.clone();
        start->set_params(meta_params);
        const double h_tt = energy(tt_angles, eval_seed);
        const double h_direct = energy(direct_res.x, eval_seed);
        const double max_cut = static_cast<double>(brute_force_maxcut(gp.graph));
        const double improvement = h_tt - h_direct;
        rows[i] = {static_cast<double>(i),
                   static_cast<double>(gp.graph.edges.size()),
                   max_cut,
                   h_tt,
                   h_direct,
                   improvement,
                   h_direct != 0.0 ? 100.0 * improvement / h_direct : 0.0,
                   max_cut > 0 ? h_tt / max_cut : 1.0,
                   max_cut > 0 ? h_direct / max_cut : 1.0,
                   energy(start->angles(gp.features), eval_seed),
                   energy(w0, eval_seed),
                   static_cast<double>(calls_tt),
                   static_cast<double>(calls_direct)};
    });
    for (auto& r : rows) table.add_row(std::move(r));

    const auto means = table.column_means();
    std::size_t improved = 0, fair = 0, bounded = 0;
    for (const auto& r : table.rows) {
        improved += r[table.column("improvement")] > 0.0;
        fair += r[table.column("evals_tt")] == r[table.column("evals_direct")];
        const double cap = r[table.column("max_cut")] + 1e-9;
        bounded += r[table.column("h_tt")] <= cap && r[table.column("h_direct")] <= cap;
    }
    const double graphs_n = static_cast<double>(graphs.size());
    result.metrics = {
        {"mean_h_tt", means[table.column("h_tt")]},
        {"mean_h_direct", means[table.column("h_direct")]},
        {"mean_improvement_pct", means[table.column("improvement_pct")]},
        {"graphs_improved", static_cast<double>(improved)},
        {"graphs", graphs_n},
        {"trainables_tt", static_cast<double>(base.trainable_count())},
        {"params_direct", static_cast<double>(angle_count)},
        {"pretraining_gradients", static_cast<double>(train.size() * meta.rows.size())},
    };
    result.notes = {
        {"ansatz", config.ansatz == MaxCutAnsatz::Qaoa ? "qaoa" : "hardware-efficient"},
        {"backend", qsim::to_string(config.backend)},
        {"pretraining", "noiseless adjoint gradients on separate random graphs"},
    };
    result.checks = {
        {"equal_evaluations", fair == graphs.size(), std::to_string(fair) + "/" + std::to_string(graphs.size())},
        {"cut_upper_bound", bounded == graphs.size(),
         std::to_string(bounded) + "/" + std::to_string(graphs.size()) + " graphs with <H> <= max cut"},
    };
    result.tables.push_back(std::move(table));
    result.tables.push_back(std::move(meta));
    return result;
}

} // namespace tensometa::harness
