// Command-line front end: compute rate regions and outer boxes, detect
// special-case chain structures, run codec simulations, and check inner
// vs outer consistency. Machine outputs go to --out; stdout is a summary.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skpk/codec.hpp"
#include "skpk/io.hpp"
#include "skpk/region.hpp"

namespace fs = std::filesystem;
using namespace skpk;

static constexpr const char* kVersion = "1.0.0";

namespace {

// exit codes: 0 ok, 2 file/parse, 3 invalid pmf, 4 no chain, 5 containment
constexpr int kExitParse = 2;
constexpr int kExitBadPmf = 3;
constexpr int kExitNoChain = 4;
constexpr int kExitContainment = 5;

std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

struct Global {
    std::uint64_t seed = 0;
    std::string out_dir = "./out";
    double tol = 1e-6;
    int threads = 0; // accepted for compatibility; execution is serial and
                     // schedule-independent either way
};

JointPmf4 load_pmf_or_exit(const std::string& path) {
    json j;
    try {
        j = load_json_file(path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::exit(kExitParse);
    }
    try {
        return pmf_from_json(j);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::exit(kExitParse);
    } catch (const Error& e) {
        std::cerr << "invalid pmf: " << e.what() << "\n";
        std::exit(kExitBadPmf);
    }
}

void persist_record(const Global& g, const std::string& command, const json& config,
                    const json& payload, double duration_s) {
    ExperimentRecord rec;
    rec.command = command;
    rec.config = config;
    rec.seed = g.seed;
    rec.version = kVersion;
    rec.timestamp = now_iso8601();
    rec.duration_seconds = duration_s;
    rec.payload = payload;
    fs::create_directories(g.out_dir);
    write_file(g.out_dir + "/" + command + "_record.json", record_to_json(rec).dump(2) + "\n");
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

SearchConfig make_search_config(const Global& g, std::size_t random_samples,
                                std::size_t sweeps) {
    SearchConfig cfg;
    cfg.seed = g.seed;
    cfg.random_samples = random_samples;
    cfg.refine_sweeps = sweeps;
    return cfg;
}

json search_config_to_json(const SearchConfig& c) {
    json j;
    j["card_u0"] = c.card_u0;
    j["card_u1"] = c.card_u1;
    j["card_u2"] = c.card_u2;
    j["card_q"] = c.card_q;
    j["exhaustive_budget"] = c.exhaustive_budget;
    j["random_samples"] = c.random_samples;
    j["refine_sweeps"] = c.refine_sweeps;
    j["seed"] = c.seed;
    return j;
}

int cmd_region(const Global& g, const std::string& pmf_path, std::size_t random_samples,
               std::size_t sweeps) {
    Timer timer;
    JointPmf4 pmf = load_pmf_or_exit(pmf_path);
    SearchConfig cfg = make_search_config(g, random_samples, sweeps);
    RegionFrontier fr = search_inner_region(pmf, cfg);
    fs::create_directories(g.out_dir);
    write_file(g.out_dir + "/frontier.csv", frontier_to_csv(fr));
    json prov = frontier_to_json(fr);
    write_file(g.out_dir + "/frontier_provenance.json", prov.dump(2) + "\n");
    double m0 = 0, m1 = 0, m2 = 0;
    for (const auto& p : fr.points) {
        m0 = std::max(m0, p.r0);
        m1 = std::max(m1, p.r1);
        m2 = std::max(m2, p.r2);
    }
    std::cout << "corners: " << fr.points.size() << "\n"
              << "max r0: " << m0 << "\nmax r1: " << m1 << "\nmax r2: " << m2 << "\n";
    json config;
    config["pmf"] = pmf_path;
    config["search"] = search_config_to_json(cfg);
    persist_record(g, "region", config, prov, timer.seconds());
    return 0;
}

int cmd_outer(const Global& g, const std::string& pmf_path) {
    Timer timer;
    JointPmf4 pmf = load_pmf_or_exit(pmf_path);
    OuterBox box = outer_bound(pmf);
    fs::create_directories(g.out_dir);
    write_file(g.out_dir + "/outer.csv", outer_to_csv(box));
    std::cout << "outer box: (" << box.b0 << ", " << box.b1 << ", " << box.b2 << ")\n";
    json payload;
    payload["box"] = {box.b0, box.b1, box.b2};
    json config;
    config["pmf"] = pmf_path;
    persist_record(g, "outer", config, payload, timer.seconds());
    return 0;
}

int cmd_corollary(const Global& g, const std::string& pmf_path) {
    Timer timer;
    JointPmf4 pmf = load_pmf_or_exit(pmf_path);
    SearchConfig scfg = make_search_config(g, 50, 1);
    auto rep = corollary_capacity(pmf, g.tol, scfg);
    if (!rep) {
        std::cout << "no special-case chain structure detected (tol " << g.tol << ")\n";
        return kExitNoChain;
    }
    static const char* names[] = {"X1", "X2", "X3", "X4"};
    std::string chain;
    for (std::size_t k = 0; k < 4; ++k)
        chain += std::string(k ? " - " : "") + names[rep->chain[k]];
    std::cout << rep->label << "\nchain: " << chain << "\n";
    json payload;
    payload["label"] = rep->label;
    payload["chain"] = chain;
    payload["tight"] = rep->tight;
    if (rep->closed_form) {
        std::cout << "capacity region corner: (" << rep->capacity.r0 << ", " << rep->capacity.r1
                  << ", " << rep->capacity.r2 << ")\n";
        payload["capacity"] = {rep->capacity.r0, rep->capacity.r1, rep->capacity.r2};
    } else {
        const char* kind = rep->tight ? "capacity region (auxiliary-parameterized)"
                                      : "achievable (inner bound only)";
        std::cout << kind << ", " << rep->frontier->points.size() << " corner(s)\n";
        payload["kind"] = kind;
        payload["frontier"] = frontier_to_json(*rep->frontier);
    }
    json config;
    config["pmf"] = pmf_path;
    config["tol"] = g.tol;
    persist_record(g, "corollary", config, payload, timer.seconds());
    return 0;
}

int cmd_simulate(const Global& g, const std::string& config_path) {
    Timer timer;
    json cfg_json;
    SimConfig cfg;
    try {
        cfg_json = load_json_file(config_path);
        cfg = sim_config_from_json(cfg_json);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    // pmf path is resolved relative to the config file
    fs::path pmf_path = cfg.pmf_path;
    if (pmf_path.is_relative()) pmf_path = fs::path(config_path).parent_path() / pmf_path;
    JointPmf4 pmf = load_pmf_or_exit(pmf_path.string());
    AuxChannelSet aux = aux_from_json(cfg.aux_spec, pmf.alphabet_sizes()[X3]);
    std::vector<SimulationReport> reports;
    for (std::size_t n : cfg.n_list) {
        reports.push_back(run_trials(pmf, aux, n, cfg.codec, cfg.trials, cfg.seed));
        const auto& r = reports.back();
        std::cout << "n=" << r.n << " err_common=" << r.err_common << " err_pk1=" << r.err_pk1
                  << " err_pk2=" << r.err_pk2 << " leak_eve=" << r.leak_eve_per_symbol
                  << " enc_fail=" << r.encoder_failure_rate << "\n";
    }
    fs::create_directories(g.out_dir);
    write_file(g.out_dir + "/simulate.csv", reports_to_csv(reports));
    json payload = json::array();
    for (const auto& r : reports) payload.push_back(report_to_json(r));
    write_file(g.out_dir + "/simulate.json", payload.dump(2) + "\n");
    persist_record(g, "simulate", cfg_json, payload, timer.seconds());
    return 0;
}

int cmd_check(const Global& g, const std::string& pmf_path, std::size_t random_samples,
              std::size_t sweeps, const std::string& frontier_file) {
    Timer timer;
    JointPmf4 pmf = load_pmf_or_exit(pmf_path);
    OuterBox box = outer_bound(pmf);
    RegionFrontier fr;
    if (!frontier_file.empty()) {
        // test-only injection path: read corners from a CSV instead of searching
        std::ifstream in(frontier_file);
        if (!in) {
            std::cerr << "error: cannot open " << frontier_file << "\n";
            return kExitParse;
        }
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            RateTriple p;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.r0, &p.r1, &p.r2) != 3) {
                std::cerr << "error: bad frontier row: " << line << "\n";
                return kExitParse;
            }
            fr.points.push_back(p);
            fr.provenance.push_back(AuxChannelSet::all_constant(pmf.alphabet_sizes()[X3]));
        }
    } else {
        fr = search_inner_region(pmf, make_search_config(g, random_samples, sweeps));
    }
    for (const auto& p : fr.points) {
        if (p.r0 > box.b0 + 1e-9 || p.r1 > box.b1 + 1e-9 || p.r2 > box.b2 + 1e-9) {
            std::cout << "containment VIOLATION: corner (" << p.r0 << ", " << p.r1 << ", " << p.r2
                      << ") exceeds outer box (" << box.b0 << ", " << box.b1 << ", " << box.b2
                      << ")\n";
            return kExitContainment;
        }
    }
    std::cout << "inner frontier (" << fr.points.size() << " corner(s)) is inside the outer box\n";
    json payload;
    payload["box"] = {box.b0, box.b1, box.b2};
    payload["corners"] = json::array();
    for (const auto& p : fr.points) payload["corners"].push_back({p.r0, p.r1, p.r2});
    json config;
    config["pmf"] = pmf_path;
    persist_record(g, "check", config, payload, timer.seconds());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"secret-key / private-keys rate region and codec simulator"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--seed", g.seed, "base RNG seed")->capture_default_str();
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--tol", g.tol, "tolerance for Markov-chain tests")->capture_default_str();
    app.add_option("--threads", g.threads, "thread count (results are identical for any value)");

    std::string pmf_path, config_path, frontier_file;
    std::size_t random_samples = 200, sweeps = 2;

    auto* region = app.add_subcommand("region", "compute the achievable-rate frontier");
    region->add_option("pmf", pmf_path, "joint pmf JSON file")->required();
    region->add_option("--random-samples", random_samples)->capture_default_str();
    region->add_option("--sweeps", sweeps)->capture_default_str();

    auto* outer = app.add_subcommand("outer", "compute the outer bounding box");
    outer->add_option("pmf", pmf_path, "joint pmf JSON file")->required();

    auto* corollary = app.add_subcommand("corollary", "detect special-case chain structure");
    corollary->add_option("pmf", pmf_path, "joint pmf JSON file")->required();

    auto* simulate = app.add_subcommand("simulate", "run the layered-codebook simulation");
    simulate->add_option("config", config_path, "simulation config JSON")->required();

    auto* check = app.add_subcommand("check", "verify inner frontier is inside the outer box");
    check->add_option("pmf", pmf_path, "joint pmf JSON file")->required();
    check->add_option("--random-samples", random_samples)->capture_default_str();
    check->add_option("--sweeps", sweeps)->capture_default_str();
    check->add_option("--frontier-file", frontier_file,
                      "read corners from CSV instead of searching (testing)");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();
    CLI11_PARSE(app, argc, argv);

    try {
        if (region->parsed()) return cmd_region(g, pmf_path, random_samples, sweeps);
        if (outer->parsed()) return cmd_outer(g, pmf_path);
        if (corollary->parsed()) return cmd_corollary(g, pmf_path);
        if (simulate->parsed()) return cmd_simulate(g, config_path);
        if (check->parsed()) return cmd_check(g, pmf_path, random_samples, sweeps, frontier_file);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
