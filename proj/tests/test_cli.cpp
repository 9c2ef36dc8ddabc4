#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tensometa/cli.hpp"
#include "tensometa/common.hpp"

using namespace tensometa;
using namespace tensometa::cli;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("tensometa_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("minimal maxcut config gets defaults and a stable fingerprint") {
    const auto c = parse_config(R"({"kind": "maxcut"})");
    CHECK(c.kind == ExperimentKind::MaxCut);
    CHECK(c.seed == 1);
    CHECK(c.maxcut.n == 12);
    CHECK(c.maxcut.depth == 3);
    CHECK(c.maxcut.dfo.budget == 120);
    CHECK(c.fingerprint().size() == 16);
    CHECK(parse_config(R"({"kind": "maxcut"})").fingerprint() == c.fingerprint());
    // Spelling out a default does not change the meaning, so neither does the fingerprint.
    CHECK(parse_config(R"({"kind": "maxcut", "maxcut": {"n": 12}})").fingerprint() == c.fingerprint());
    CHECK(parse_config(R"({"kind": "maxcut", "maxcut": {"n": 10}})").fingerprint() != c.fingerprint());
    CHECK(parse_config(R"({"kind": "maxcut", "seed": 2})").fingerprint() != c.fingerprint());
}

TEST_CASE("reordered keys give the same fingerprint") {
    const auto a = parse_config(R"({"kind": "vqe", "seed": 4,
        "vqe": {"layers": 1, "dfo": {"budget": 50, "rho_begin": 0.3}, "hamiltonian": {"qubits": 3, "field": 0.5}}})");
    const auto b = parse_config(R"({"vqe": {"hamiltonian": {"field": 0.5, "qubits": 3},
        "dfo": {"rho_begin": 0.3, "budget": 50}, "layers": 1}, "seed": 4, "kind": "vqe"})");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.fingerprint() == b.fingerprint());
}

TEST_CASE("the output directory does not enter the fingerprint") {
    const auto a = parse_config(R"({"kind": "tt-selftest", "output": "x"})");
    const auto b = parse_config(R"({"kind": "tt-selftest", "output": "y"})");
    CHECK(a.fingerprint() == b.fingerprint());
}

TEST_CASE("errors name the offending key") {
    auto msg = error_of(R"({"kind": "maxcut", "maxcut": {"tt": {"input_dims": [2], "output_dims": [3], "ranks": [2, 1]}}})");
    CHECK(contains(msg, "maxcut.tt"));
    CHECK(contains(msg, "ranks"));

    msg = error_of(R"({"kind": "maxcut", "maxcut": {"depht": 2}})");
    CHECK(contains(msg, "unknown key 'maxcut.depht'"));

    msg = error_of(R"({"kind": "maxcut", "colour": "blue"})");
    CHECK(contains(msg, "unknown key 'colour'"));

    // A section for another experiment kind is not silently ignored.
    msg = error_of(R"({"kind": "maxcut", "vqe": {}})");
    CHECK(contains(msg, "unknown key 'vqe'"));

    msg = error_of(R"({"kind": "maxcut", "maxcut": {"n": "twelve"}})");
    CHECK(contains(msg, "maxcut.n"));
    CHECK(contains(msg, "non-negative integer"));

    msg = error_of(R"({"kind": "maxcut", "maxcut": {"n": 40}})");
    CHECK(contains(msg, "'n'"));

    msg = error_of(R"({"kind": "vqe", "vqe": {"noise": {"depolarizing": 2}}})");
    CHECK(contains(msg, "vqe.noise"));

    msg = error_of(R"({"kind": "vqe", "vqe": {"backend": "abacus"}})");
    CHECK(contains(msg, "vqe.backend"));

    msg = error_of(R"({"kind": "classify", "classify": {"data": {"side": 20}}})");
    CHECK(contains(msg, "classify.tt"));

    msg = error_of(R"({"kind": "quantum-supremacy"})");
    CHECK(contains(msg, "kind"));

    msg = error_of(R"({"seed": 3})");
    CHECK(contains(msg, "'kind'"));

    msg = error_of(R"({"kind": "vqe", "seed": -3})");
    CHECK(contains(msg, "seed"));

    CHECK(contains(error_of("{not json"), "not valid JSON"));
    CHECK(contains(error_of("[1, 2]"), "JSON object"));
}

TEST_CASE("relative paths resolve against the config directory") {
    const auto c = parse_config(R"({"kind": "vqe", "output": "out", "vqe": {"hamiltonian": {"file": "h.txt"}}})", "/data/cfg");
    CHECK(c.hamiltonian.file == "/data/cfg/h.txt");
    CHECK(c.output_dir == "/data/cfg/out");
}

TEST_CASE("tt-selftest run writes artifacts and exits 0") {
    auto c = parse_config(R"({"kind": "tt-selftest", "selftest": {"tensors": 5}})");
    const auto dir = fresh_dir("selftest");
    c.output_dir = dir.string();
    std::ostringstream log;
    const auto outcome = run(c, log);
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "selftest.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "config.json"));
    const auto run_log = slurp(dir / "run.log");
    CHECK(contains(run_log, "fingerprint " + c.fingerprint()));
    CHECK(contains(run_log, "seed 1"));
    CHECK(contains(run_log, "wall_seconds "));
    CHECK(contains(run_log, "version " + std::string(kVersion)));
    CHECK(contains(slurp(dir / "summary.json"), c.fingerprint()));
    // config.json parses back to the same experiment.
    CHECK(parse_config(slurp(dir / "config.json")).fingerprint() == c.fingerprint());

    // Refuses to overwrite a finished run.
    std::ostringstream again;
    CHECK(run(c, again).exit_code == 2);
    CHECK(contains(again.str(), "not empty"));
}

TEST_CASE("reruns give byte-identical CSV artifacts") {
    auto c = parse_config(R"({"kind": "maxcut", "seed": 5,
        "maxcut": {"n": 5, "graphs": 2, "train_graphs": 2, "meta_epochs": 3, "dfo": {"budget": 50}}})");
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    std::ostringstream log;
    c.output_dir = a.string();
    REQUIRE(run(c, log).exit_code == 0);
    c.output_dir = b.string();
    REQUIRE(run(c, log).exit_code == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        ++compared;
    }
    CHECK(compared == 2);
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("an invalid output directory fails without partial files") {
    const auto base = fresh_dir("invalid");
    fs::create_directories(base);
    std::ofstream(base / "file") << "x";
    auto c = parse_config(R"({"kind": "tt-selftest"})");
    c.output_dir = (base / "file" / "out").string();
    std::ostringstream log;
    CHECK(run(c, log).exit_code == 2);
    CHECK(contains(log.str(), "error"));
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(base)) ++entries;
    CHECK(entries == 1);

    c.output_dir.clear();
    CHECK(run(c, log).exit_code == 2);
}

TEST_CASE("module errors propagate with their module prefix") {
    auto c = parse_config(R"({"kind": "vqe", "vqe": {"hamiltonian": {"file": "/nonexistent/h.txt"}}})");
    const auto dir = fresh_dir("module_error");
    c.output_dir = dir.string();
    std::ostringstream log;
    CHECK(run(c, log).exit_code == 2);
    CHECK(contains(log.str(), "qsim: "));
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("failed checks set exit status 1 unless checks are not enforced") {
    // An impossible slope window makes the variance check fail.
    const std::string text = R"({"kind": "variance-scaling", "variance": {"trials": 1000, "slope_min": 5, "slope_max": 6}})";
    auto c = parse_config(text);
    c.output_dir = fresh_dir("checks_on").string();
    std::ostringstream log;
    CHECK(run(c, log).exit_code == 1);
    CHECK(contains(slurp(fs::path(c.output_dir) / "run.log"), "FAIL"));
    c.enforce_checks = false;
    c.output_dir = fresh_dir("checks_off").string();
    CHECK(run(c, log).exit_code == 0);
}
