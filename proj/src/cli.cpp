#include "tensometa/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tensometa/common.hpp"
#include "tensometa/parallel.hpp"
#include "tensometa/qsim.hpp"

namespace tensometa::cli {
namespace {
constexpr std::string_view kModule = "cli";
namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail_key(const std::string& key, const std::string& what) {
    throw Error(kModule, "key '" + key + "': " + what);
}

// One JSON object being read. Every key that is looked up is remembered so
// that finish() can reject the ones nobody asked for.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            if (path_.empty()) throw Error(kModule, "config must be a JSON object");
            fail_key(path_, "expected an object");
        }
    }

    [[nodiscard]] std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

    const json* find(const std::string& name) {
        seen_.insert(name);
        const auto it = node_.find(name);
        return it == node_.end() ? nullptr : &*it;
    }

    void get(const std::string& name, std::size_t& out) {
        if (const json* v = find(name)) {
            if (v->is_number_unsigned())
                out = v->get<std::size_t>();
            else if (v->is_number_integer())
                fail_key(key(name), "must be non-negative");
            else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>() &&
                     v->get<double>() >= 0.0 && v->get<double>() < 9.0e15)
                out = static_cast<std::size_t>(v->get<double>());
            else
                fail_key(key(name), "expected a non-negative integer, got " + v->dump());
        }
    }

    void get_u64(const std::string& name, std::uint64_t& out) {
        if (const json* v = find(name)) {
            if (!v->is_number_unsigned()) fail_key(key(name), "expected a non-negative integer, got " + v->dump());
            out = v->get<std::uint64_t>();
        }
    }

    void get(const std::string& name, double& out) {
        if (const json* v = find(name)) {
            if (!v->is_number()) fail_key(key(name), "expected a number, got " + v->dump());
            out = v->get<double>();
        }
    }

    void get(const std::string& name, bool& out) {
        if (const json* v = find(name)) {
            if (!v->is_boolean()) fail_key(key(name), "expected true or false, got " + v->dump());
            out = v->get<bool>();
        }
    }

    void get(const std::string& name, std::string& out) {
        if (const json* v = find(name)) {
            if (!v->is_string()) fail_key(key(name), "expected a string, got " + v->dump());
            out = v->get<std::string>();
        }
    }

    void get(const std::string& name, std::vector<std::size_t>& out) {
        if (const json* v = find(name)) {
            if (!v->is_array()) fail_key(key(name), "expected an array of non-negative integers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_unsigned()) fail_key(key(name), "expected non-negative integers, got " + e.dump());
                out.push_back(e.get<std::size_t>());
            }
        }
    }

    void get(const std::string& name, std::vector<std::string>& out) {
        if (const json* v = find(name)) {
            if (!v->is_array()) fail_key(key(name), "expected an array of strings");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_string()) fail_key(key(name), "expected strings, got " + e.dump());
                out.push_back(e.get<std::string>());
            }
        }
    }

    std::optional<Section> sub(const std::string& name) {
        if (const json* v = find(name)) return Section(*v, key(name));
        return std::nullopt;
    }

    void finish() const {
        for (const auto& [k, v] : node_.items())
            if (!seen_.count(k)) throw Error(kModule, "unknown key '" + key(k) + "'");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// Runs a module validation and reports failures against the config key.
template <class F>
void checked(const std::string& key, F&& validate) {
    try {
        validate();
    } catch (const Error& e) {
        fail_key(key, e.what());
    }
}

void read_tt(Section& parent, const std::string& name, tt::TTSpec& spec) {
    auto s = parent.sub(name);
    if (!s) return;
    s->get("input_dims", spec.input_dims);
    s->get("output_dims", spec.output_dims);
    s->get("ranks", spec.ranks);
    s->finish();
    checked(s->path(), [&] { spec.validate(); });
}

void read_dfo(Section& parent, optim::DfoOptions& dfo) {
    auto s = parent.sub("dfo");
    if (!s) return;
    s->get("rho_begin", dfo.rho_begin);
    s->get("rho_end", dfo.rho_end);
    s->get("budget", dfo.budget);
    s->get("exhaust_budget", dfo.exhaust_budget);
    s->finish();
    if (!(dfo.rho_begin > 0.0)) fail_key(s->key("rho_begin"), "must be positive");
    if (!(dfo.rho_end > 0.0 && dfo.rho_end <= dfo.rho_begin))
        fail_key(s->key("rho_end"), "must lie in (0, rho_begin]");
    if (dfo.budget == 0) fail_key(s->key("budget"), "must be positive");
}

void read_noise(Section& parent, qsim::NoiseSpec& noise, qsim::Backend& backend) {
    if (auto s = parent.sub("noise")) {
        s->get("depolarizing", noise.depolarizing);
        s->get("measurement_sigma", noise.measurement_sigma);
        s->get("trajectories", noise.trajectories);
        s->finish();
        checked(s->path(), [&] { noise.validate(); });
    }
    std::string name = qsim::to_string(backend);
    parent.get("backend", name);
    checked(parent.key("backend"), [&] { backend = qsim::parse_backend(name); });
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

void parse_maxcut(Section& s, ExperimentConfig& c, const std::string& base) {
    auto& m = c.maxcut;
    s.get("n", m.n);
    s.get("p_edge", m.p_edge);
    s.get("graphs", m.num_graphs);
    std::string ansatz = m.ansatz == harness::MaxCutAnsatz::Qaoa ? "qaoa" : "hardware-efficient";
    s.get("ansatz", ansatz);
    if (ansatz == "qaoa")
        m.ansatz = harness::MaxCutAnsatz::Qaoa;
    else if (ansatz == "hardware-efficient")
        m.ansatz = harness::MaxCutAnsatz::HardwareEfficient;
    else
        fail_key(s.key("ansatz"), "expected 'qaoa' or 'hardware-efficient', got '" + ansatz + "'");
    s.get("depth", m.depth);
    read_tt(s, "tt", m.tt);
    s.get("train_graphs", m.train_graphs);
    s.get("meta_epochs", m.meta_epochs);
    s.get("meta_lr", m.meta_lr);
    read_dfo(s, m.dfo);
    s.get("direct_init_range", m.direct_init_range);
    read_noise(s, m.noise, m.backend);
    s.get("graph_files", c.graph_files);
    for (auto& f : c.graph_files) f = resolve(f, base);
    s.finish();
    checked(s.path(), [&] { m.validate(); });
}

void parse_vqe(Section& s, ExperimentConfig& c, const std::string& base) {
    auto& v = c.vqe;
    s.get("layers", v.layers);
    std::string ent = v.entangler == qsim::Entangler::Ring ? "ring" : "none";
    s.get("entangler", ent);
    if (ent == "ring")
        v.entangler = qsim::Entangler::Ring;
    else if (ent == "none")
        v.entangler = qsim::Entangler::None;
    else
        fail_key(s.key("entangler"), "expected 'ring' or 'none', got '" + ent + "'");
    read_tt(s, "tt", v.tt);
    s.get("tt_train_bias", v.tt_train_bias);
    s.get("seeds", v.seeds);
    read_dfo(s, v.dfo);
    s.get("direct_init_range", v.direct_init_range);
    read_noise(s, v.noise, v.backend);
    if (auto h = s.sub("hamiltonian")) {
        h->get("file", c.hamiltonian.file);
        h->get("qubits", c.hamiltonian.qubits);
        h->get("coupling", c.hamiltonian.coupling);
        h->get("field", c.hamiltonian.field);
        h->finish();
        c.hamiltonian.file = resolve(c.hamiltonian.file, base);
        if (c.hamiltonian.file.empty() && (c.hamiltonian.qubits == 0 || c.hamiltonian.qubits > qsim::kExactMaxQubits))
            fail_key(h->key("qubits"), "must lie in [1, " + std::to_string(qsim::kExactMaxQubits) + "]");
    }
    s.finish();
    checked(s.path(), [&] { v.validate(); });
}

void parse_classify(Section& s, ExperimentConfig& c, const std::string& base) {
    auto& k = c.classify;
    s.get("qubits", k.qubits);
    s.get("layers", k.layers);
    read_tt(s, "tt", k.tt);
    s.get("epochs", k.epochs);
    s.get("lr", k.lr);
    s.get("batch_size", k.batch_size);
    s.get("temperature", k.temperature);
    s.get("direct_encoding_scale", k.direct_encoding_scale);
    s.get("direct_init_range", k.direct_init_range);
    s.get("run_direct", k.run_direct);
    s.get("gradient_sigma", k.gradient_sigma);
    if (auto d = s.sub("data")) {
        d->get("directory", c.data.directory);
        d->get("samples", c.data.samples);
        d->get("side", c.data.side);
        d->get("pixel_noise", c.data.pixel_noise);
        d->get("test_samples", c.data.test_samples);
        d->finish();
        c.data.directory = resolve(c.data.directory, base);
        if (c.data.directory.empty()) {
            if (c.data.side < 8) fail_key(d->key("side"), "must be at least 8");
            if (c.data.samples == 0) fail_key(d->key("samples"), "must be positive");
            if (c.data.test_samples > c.data.samples) fail_key(d->key("test_samples"), "exceeds 'samples'");
            if (!(c.data.pixel_noise >= 0.0)) fail_key(d->key("pixel_noise"), "must be >= 0");
        }
    }
    s.finish();
    checked(s.path(), [&] { k.validate(); });
    if (c.data.directory.empty() && c.data.side * c.data.side != k.tt.input_length())
        fail_key(s.key("tt"), "input length " + std::to_string(k.tt.input_length()) +
                                  " does not match the synthetic image size " + std::to_string(c.data.side) + "^2");
}

void parse_variance(Section& s, ExperimentConfig& c) {
    auto& v = c.variance;
    s.get("qubit_counts", v.qubit_counts);
    s.get("sigma", v.sigma);
    s.get("trials", v.trials);
    s.get("slope_min", v.slope_min);
    s.get("slope_max", v.slope_max);
    s.get("max_direct_spread", v.max_direct_spread);
    s.finish();
    checked(s.path(), [&] { v.validate(); });
}

void parse_ntk(Section& s, ExperimentConfig& c) {
    auto& n = c.ntk;
    s.get("qubits", n.qubits);
    s.get("layers", n.layers);
    s.get("inputs", n.inputs);
    s.get("seeds", n.seeds);
    read_tt(s, "tt", n.tt);
    s.get("direct_encoding_scale", n.direct_encoding_scale);
    s.get("direct_init_range", n.direct_init_range);
    s.finish();
    checked(s.path(), [&] { n.validate(); });
}

void parse_selftest(Section& s, ExperimentConfig& c) {
    s.get("tensors", c.selftest.tensors);
    s.finish();
    checked(s.path(), [&] { c.selftest.validate(); });
}

json tt_json(const tt::TTSpec& t) {
    return {{"input_dims", t.input_dims}, {"output_dims", t.output_dims}, {"ranks", t.ranks}};
}

json dfo_json(const optim::DfoOptions& d) {
    return {{"rho_begin", d.rho_begin}, {"rho_end", d.rho_end}, {"budget", d.budget},
            {"exhaust_budget", d.exhaust_budget}};
}

json noise_json(const qsim::NoiseSpec& n) {
    return {{"depolarizing", n.depolarizing},
            {"measurement_sigma", n.measurement_sigma},
            {"trajectories", n.trajectories}};
}

std::string section_name(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::MaxCut: return "maxcut";
    case ExperimentKind::Vqe: return "vqe";
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::VarianceScaling: return "variance";
    case ExperimentKind::NtkCompare: return "ntk";
    case ExperimentKind::TtSelftest: return "selftest";
    }
    return "";
}

json section_json(const ExperimentConfig& c) {
    switch (c.kind) {
    case ExperimentKind::MaxCut: {
        const auto& m = c.maxcut;
        return {{"n", m.n},
                {"p_edge", m.p_edge},
                {"graphs", m.num_graphs},
                {"ansatz", m.ansatz == harness::MaxCutAnsatz::Qaoa ? "qaoa" : "hardware-efficient"},
                {"depth", m.depth},
                {"tt", tt_json(m.tt)},
                {"train_graphs", m.train_graphs},
                {"meta_epochs", m.meta_epochs},
                {"meta_lr", m.meta_lr},
                {"dfo", dfo_json(m.dfo)},
                {"direct_init_range", m.direct_init_range},
                {"noise", noise_json(m.noise)},
                {"backend", qsim::to_string(m.backend)},
                {"graph_files", c.graph_files}};
    }
    case ExperimentKind::Vqe: {
        const auto& v = c.vqe;
        return {{"layers", v.layers},
                {"entangler", v.entangler == qsim::Entangler::Ring ? "ring" : "none"},
                {"tt", v.tt.output_dims.empty() ? json(nullptr) : tt_json(v.tt)},
                {"tt_train_bias", v.tt_train_bias},
                {"seeds", v.seeds},
                {"dfo", dfo_json(v.dfo)},
                {"direct_init_range", v.direct_init_range},
                {"noise", noise_json(v.noise)},
                {"backend", qsim::to_string(v.backend)},
                {"hamiltonian",
                 {{"file", c.hamiltonian.file},
                  {"qubits", c.hamiltonian.qubits},
                  {"coupling", c.hamiltonian.coupling},
                  {"field", c.hamiltonian.field}}}};
    }
    case ExperimentKind::Classify: {
        const auto& k = c.classify;
        return {{"qubits", k.qubits},
                {"layers", k.layers},
                {"tt", tt_json(k.tt)},
                {"epochs", k.epochs},
                {"lr", k.lr},
                {"batch_size", k.batch_size},
                {"temperature", k.temperature},
                {"direct_encoding_scale", k.direct_encoding_scale},
                {"direct_init_range", k.direct_init_range},
                {"run_direct", k.run_direct},
                {"gradient_sigma", k.gradient_sigma},
                {"data",
                 {{"directory", c.data.directory},
                  {"samples", c.data.samples},
                  {"side", c.data.side},
                  {"pixel_noise", c.data.pixel_noise},
                  {"test_samples", c.data.test_samples}}}};
    }
    case ExperimentKind::VarianceScaling: {
        const auto& v = c.variance;
        return {{"qubit_counts", v.qubit_counts}, {"sigma", v.sigma},         {"trials", v.trials},
                {"slope_min", v.slope_min},       {"slope_max", v.slope_max}, {"max_direct_spread", v.max_direct_spread}};
    }
    case ExperimentKind::NtkCompare: {
        const auto& n = c.ntk;
        return {{"qubits", n.qubits},
                {"layers", n.layers},
                {"inputs", n.inputs},
                {"seeds", n.seeds},
                {"tt", tt_json(n.tt)},
                {"direct_encoding_scale", n.direct_encoding_scale},
                {"direct_init_range", n.direct_init_range}};
    }
    case ExperimentKind::TtSelftest: return {{"tensors", c.selftest.tensors}};
    }
    return json::object();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(kModule, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(kModule, "write failed for '" + path.string() + "'");
}

} // namespace

ExperimentKind parse_kind(const std::string& name) {
    if (name == "maxcut") return ExperimentKind::MaxCut;
    if (name == "vqe") return ExperimentKind::Vqe;
    if (name == "classify") return ExperimentKind::Classify;
    if (name == "variance-scaling") return ExperimentKind::VarianceScaling;
    if (name == "ntk-compare") return ExperimentKind::NtkCompare;
    if (name == "tt-selftest") return ExperimentKind::TtSelftest;
    throw Error(kModule, "key 'kind': unknown experiment kind '" + name +
                             "' (expected maxcut, vqe, classify, variance-scaling, ntk-compare or tt-selftest)");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::MaxCut: return "maxcut";
    case ExperimentKind::Vqe: return "vqe";
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::VarianceScaling: return "variance-scaling";
    case ExperimentKind::NtkCompare: return "ntk-compare";
    case ExperimentKind::TtSelftest: return "tt-selftest";
    }
    return "";
}

std::string ExperimentConfig::canonical() const {
    // nlohmann::json keeps object keys sorted, so key order in the input is irrelevant.
    json doc;
    doc["kind"] = to_string(kind);
    doc["seed"] = seed;
    doc["enforce_checks"] = enforce_checks;
    doc[section_name(kind)] = section_json(*this);
    return doc.dump();
}

std::string ExperimentConfig::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(kModule, std::string("config is not valid JSON: ") + e.what());
    }
    Section top(doc, "");
    ExperimentConfig c;
    std::string kind;
    top.get("kind", kind);
    if (kind.empty()) throw Error(kModule, "key 'kind' is required");
    c.kind = parse_kind(kind);
    top.get_u64("seed", c.seed);
    top.get("output", c.output_dir);
    c.output_dir = resolve(c.output_dir, base_dir);
    top.get("enforce_checks", c.enforce_checks);

    // Only the section belonging to the chosen kind is accepted; any other
    // section is reported as an unknown key by finish().
    const std::string name = section_name(c.kind);
    json empty = json::object();
    const json* node = top.find(name);
    Section s(node ? *node : empty, name);
    switch (c.kind) {
    case ExperimentKind::MaxCut: parse_maxcut(s, c, base_dir); break;
    case ExperimentKind::Vqe: parse_vqe(s, c, base_dir); break;
    case ExperimentKind::Classify: parse_classify(s, c, base_dir); break;
    case ExperimentKind::VarianceScaling: parse_variance(s, c); break;
    case ExperimentKind::NtkCompare: parse_ntk(s, c); break;
    case ExperimentKind::TtSelftest: parse_selftest(s, c); break;
    }
    top.finish();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), fs::path(path).parent_path().string());
    } catch (const Error& e) {
        throw Error(kModule, path + ": " + std::string(e.what()).substr(kModule.size() + 2));
    }
}

harness::ExperimentResult execute(const ExperimentConfig& c) {
    harness::ExperimentResult r;
    switch (c.kind) {
    case ExperimentKind::MaxCut:
        if (c.graph_files.empty()) {
            r = harness::run_maxcut(c.maxcut, c.seed);
        } else {
            std::vector<harness::Graph> graphs;
            for (const auto& f : c.graph_files) graphs.push_back(harness::load_graph(f));
            r = harness::run_maxcut(c.maxcut, graphs, c.seed);
        }
        break;
    case ExperimentKind::Vqe: {
        const auto h = c.hamiltonian.file.empty()
                           ? harness::transverse_ising(c.hamiltonian.qubits, c.hamiltonian.coupling,
                                                       c.hamiltonian.field)
                           : qsim::load_hamiltonian(c.hamiltonian.file);
        r = harness::run_vqe(h, c.vqe, c.seed);
        break;
    }
    case ExperimentKind::Classify: {
        const auto data = c.data.directory.empty()
                              ? harness::synth_quantum_dot(c.data.samples, c.data.side, c.seed, c.data.pixel_noise,
                                                           c.data.test_samples)
                              : harness::load_dataset(c.data.directory);
        r = harness::run_classifier(data, c.classify, c.seed);
        break;
    }
    case ExperimentKind::VarianceScaling: r = harness::run_variance_scaling(c.variance, c.seed); break;
    case ExperimentKind::NtkCompare: r = harness::run_ntk_compare(c.ntk, c.seed); break;
    case ExperimentKind::TtSelftest: r = harness::run_tt_selftest(c.selftest, c.seed); break;
    }
    r.fingerprint = c.fingerprint();
    return r;
}

RunOutcome run(const ExperimentConfig& config, std::ostream& log) {
    RunOutcome outcome;
    const auto started = std::chrono::steady_clock::now();
    fs::path out;
    try {
        if (config.output_dir.empty()) throw Error(kModule, "no output directory given");
        out = fs::absolute(config.output_dir).lexically_normal();
        if (out.filename().empty()) out = out.parent_path();
        std::error_code ec;
        if (fs::exists(out, ec) && (!fs::is_directory(out, ec) || !fs::is_empty(out, ec)))
            throw Error(kModule, "output directory '" + out.string() + "' exists and is not empty");
        fs::create_directories(out.parent_path(), ec);
        if (ec || !fs::is_directory(out.parent_path()))
            throw Error(kModule, "cannot create the parent of output directory '" + out.string() + "'");
        outcome.output_dir = out.string();

        log << "tensometa " << kVersion << ": " << to_string(config.kind) << " seed " << config.seed
            << " fingerprint " << config.fingerprint() << " threads " << thread_count() << '\n';
        outcome.result = execute(config);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        outcome.exit_code = 2;
        return outcome;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto& result = outcome.result;

    std::ostringstream run_log;
    run_log << "version " << kVersion << '\n'
            << "kind " << to_string(config.kind) << '\n'
            << "fingerprint " << config.fingerprint() << '\n'
            << "seed " << config.seed << '\n'
            << "threads " << thread_count() << '\n'
            << "wall_seconds " << wall << '\n';
    for (const auto& c : result.checks)
        run_log << "check " << c.name << ' ' << (c.passed ? "PASS" : "FAIL") << (c.detail.empty() ? "" : " ")
                << c.detail << '\n';
    const bool ok = result.all_checks_pass();
    outcome.exit_code = ok || !config.enforce_checks ? 0 : 1;
    run_log << "status " << (ok ? "ok" : "checks-failed") << '\n';

    const fs::path staging = out.parent_path() / ("." + out.filename().string() + ".partial");
    try {
        fs::remove_all(staging);
        fs::create_directory(staging);
        for (const auto& t : result.tables) {
            std::ostringstream csv;
            t.write_csv(csv);
            write_file(staging / (t.name + ".csv"), csv.str());
        }
        std::ostringstream summary;
        result.write_json(summary);
        write_file(staging / "summary.json", summary.str());
        write_file(staging / "config.json", json::parse(config.canonical()).dump(2) + "\n");
        write_file(staging / "run.log", run_log.str());
        if (fs::exists(out)) fs::remove(out);  // known to be an empty directory
        fs::rename(staging, out);
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        log << "error: " << e.what() << '\n';
        outcome.exit_code = 2;
        return outcome;
    }
    log << run_log.str() << "artifacts in " << out.string() << '\n';
    return outcome;
}

} // namespace tensometa::cli
