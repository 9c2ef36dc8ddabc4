#include <algorithm>
#include <cmath>
#include <limits>

#include "harness_detail.hpp"
#include "tensometa/common.hpp"
#include "tensometa/harness.hpp"
#include "tensometa/model.hpp"
#include "tensometa/parallel.hpp"

namespace tensometa::harness {
namespace {
constexpr std::string_view kModule = "harness";
constexpr std::size_t kDensityMatrixQubits = 10;
} // namespace

void VqeConfig::validate() const {
    if (layers == 0) throw Error(kModule, "vqe: 'layers' must be positive");
    if (seeds == 0) throw Error(kModule, "vqe: 'seeds' must be positive");
    if (!tt.output_dims.empty()) tt.validate();
    if (!(direct_init_range >= 0.0)) throw Error(kModule, "vqe: 'direct_init_range' must be >= 0");
    noise.validate();
    if (noise.depolarizing > 0.0 && backend == qsim::Backend::Statevector)
        throw Error(kModule, "vqe: depolarizing noise needs the 'density-matrix' or 'trajectory' backend");
}

tt::TTSpec default_vqe_spec(std::size_t qubits, std::size_t layers) {
    // A U x (3L) output grid covers every slot once; with a scalar latent the
    // grid is a rank-2 matrix.
    return tt::TTSpec{{1, 1}, {qubits, 3 * layers}, {1, 2, 1}};
}

ExperimentResult run_vqe(const qsim::Hamiltonian& h, const VqeConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t qubits = h.qubits();
    if (qubits == 0) throw Error(kModule, "run_vqe: empty Hamiltonian");
    if (!config.noise.noiseless() && config.backend == qsim::Backend::DensityMatrix &&
        qubits > kDensityMatrixQubits)
        throw Error(kModule, "run_vqe: density-matrix runs are limited to " +
                                 std::to_string(kDensityMatrixQubits) + " qubits");

    const auto circuit = qsim::build_ansatz(qubits, config.layers, config.entangler);
    const std::size_t angle_count = circuit.param_count;
    const tt::TTSpec spec = config.tt.output_dims.empty() ? default_vqe_spec(qubits, config.layers) : config.tt;
    spec.validate();
    const double ground = qsim::exact_ground_energy(h);

    ExperimentResult result;
    result.kind = "vqe";
    result.seed = seed;

    Table table{"vqe",
                {"seed", "exact", "energy_tt", "energy_direct", "error_tt", "error_direct",
                 "noiseless_energy_tt", "noiseless_energy_direct", "min_margin", "evals_tt",
                 "evals_direct"},
                {}};
    std::vector<std::vector<double>> rows(config.seeds);
    std::size_t trainables_tt = 0;
    parallel_for(config.seeds, [&](std::size_t s) {
        const std::uint64_t run_seed = derive_seed(seed, s);
        const std::uint64_t noise_seed = derive_seed(run_seed, stream::kTrajectory);
        double min_seen = std::numeric_limits<double>::infinity();
        auto energy = [&](std::span<const double> angles) {
            const double e = detail::energy(circuit, angles, h, config.noise, config.backend, noise_seed);
            // Shot noise can legitimately dip below the ground energy; skip those.
            if (config.noise.measurement_sigma == 0.0) min_seen = std::min(min_seen, e);
            return e;
        };

        const auto latent = tt::TTInput::latent(spec, derive_seed(run_seed, stream::kLatent));
        const model::TTParameterization base(
            tt::TTGenerator::random(spec, derive_seed(run_seed, stream::kInit)), angle_count);
        // Search space: all flat parameters, or only the leading core block.
        const std::size_t searched =
            config.tt_train_bias ? base.trainable_count() : tt::param_count(spec).cores;
        auto tt_angles_of = [&](std::span<const double> theta) {
            auto full = base.params();
            std::copy(theta.begin(), theta.end(), full.begin());
            auto m = base.clone();
            m->set_params(full);
            return m->angles(latent.values);
        };
        std::size_t calls_tt = 0;
        const auto start = base.params();
        const auto tt_res = optim::dfo_minimize(
            [&](std::span<const double> theta) {
                ++calls_tt;
                return energy(tt_angles_of(theta));
            },
            std::vector<double>(start.begin(), start.begin() + static_cast<std::ptrdiff_t>(searched)),
            config.dfo);
        const auto tt_angles = tt_angles_of(tt_res.x);

        std::size_t calls_direct = 0;
        const auto direct_res = optim::dfo_minimize(
            [&](std::span<const double> w) {
                ++calls_direct;
                return energy(w);
            },
            model::random_angles(angle_count, config.direct_init_range,
                                 derive_seed(run_seed, stream::kDirectInit)),
            config.dfo);

        auto exact_energy = [&](std::span<const double> w) {
            const double e = qsim::expectation(qsim::simulate_state(circuit, w), h);
            min_seen = std::min(min_seen, e);
            return e;
        };
        const double e_tt = tt_res.f, e_direct = direct_res.f;
        const double n_tt = exact_energy(tt_angles), n_direct = exact_energy(direct_res.x);
        rows[s] = {static_cast<double>(s), ground, e_tt, e_direct, e_tt - ground, e_direct - ground, n_tt,
                   n_direct, min_seen - ground, static_cast<double>(calls_tt),
                   static_cast<double>(calls_direct)};
        if (s == 0) trainables_tt = searched;
    });
    for (auto& r : rows) table.add_row(std::move(r));

    std::size_t tt_wins = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double best_tt = std::numeric_limits<double>::infinity();
    for (const auto& r : table.rows) {
        best_tt = std::min(best_tt, r[table.column("error_tt")]);
        tt_wins += r[table.column("error_tt")] <= r[table.column("error_direct")];
        worst_margin = std::min(worst_margin, r[table.column("min_margin")]);
    }
    const auto means = table.column_means();
    result.metrics = {
        {"exact_ground_energy", ground},
        {"mean_error_tt", means[table.column("error_tt")]},
        {"mean_error_direct", means[table.column("error_direct")]},
        {"best_error_tt", best_tt},
        {"seeds_tt_at_least_as_good", static_cast<double>(tt_wins)},
        {"seeds", static_cast<double>(config.seeds)},
        {"trainables_tt", static_cast<double>(trainables_tt)},
        {"params_direct", static_cast<double>(angle_count)},
        {"worst_variational_margin", worst_margin},
    };
    result.notes = {{"backend", config.noise.noiseless() ? "statevector" : qsim::to_string(config.backend)}};
    result.checks = {{"variational_principle", worst_margin >= -1e-9,
                      "min over all evaluations of E - E_ground = " + detail::fmt(worst_margin)}};
    result.tables.push_back(std::move(table));
    return result;
}

} // namespace tensometa::harness
