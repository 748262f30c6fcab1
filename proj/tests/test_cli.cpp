#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = CLI_PATH;
const std::string kFixtures = FIXTURES_DIR;

fs::path tmp_root() {
    static fs::path root = [] {
        fs::path p = fs::current_path() / "cli_test_tmp";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const fs::path& stdout_file = {}) {
    std::string cmd = kCli + " " + args;
    if (stdout_file.empty())
        cmd += " > /dev/null 2>&1";
    else
        cmd += " > " + stdout_file.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

// X1 = X2 = X3 uniform binary, X4 uniform independent
std::string degenerate_pmf_json() {
    std::string probs;
    for (std::size_t f = 0; f < 16; ++f) {
        std::size_t x1 = f >> 3 & 1, x2 = f >> 2 & 1, x3 = f >> 1 & 1;
        probs += (x1 == x3 && x2 == x3) ? "0.25" : "0";
        if (f + 1 < 16) probs += ",";
    }
    return "{\"alphabet_sizes\":[2,2,2,2],\"probs\":[" + probs + "]}";
}

std::string independent_pmf_json() {
    std::string probs;
    for (std::size_t f = 0; f < 16; ++f) {
        probs += "0.0625";
        if (f + 1 < 16) probs += ",";
    }
    return "{\"alphabet_sizes\":[2,2,2,2],\"probs\":[" + probs + "]}";
}

} // namespace

TEST_CASE("malformed input exits with the parse code") {
    fs::path bad = tmp_root() / "bad.json";
    write_text(bad, "{ this is not json");
    fs::path out = tmp_root() / "out_parse";
    CHECK(run("region " + quoted(bad) + " --out " + quoted(out)) == 2);
    CHECK(run("outer " + quoted(bad) + " --out " + quoted(out)) == 2);
    CHECK(run("simulate " + quoted(bad) + " --out " + quoted(out)) == 2);
    CHECK(run("region " + quoted(tmp_root() / "missing.json") + " --out " + quoted(out)) == 2);
}

TEST_CASE("an invalid distribution exits with its own code") {
    fs::path bad = tmp_root() / "badpmf.json";
    // negative entry: parses fine, rejected as a distribution
    std::string body = "{\"alphabet_sizes\":[2,2,2,2],\"probs\":[-0.1,0.2";
    for (int i = 0; i < 14; ++i) body += ",0.064285714285714285";
    body += "]}";
    write_text(bad, body);
    fs::path out = tmp_root() / "out_badpmf";
    CHECK(run("outer " + quoted(bad) + " --out " + quoted(out)) == 3);
}

TEST_CASE("structure detection on fixtures and rejection of generic inputs") {
    fs::path out = tmp_root() / "out_corollary";
    fs::path log = tmp_root() / "corollary.txt";
    CHECK(run("corollary " + quoted(fs::path(kFixtures) / "chainb_cor1.json") + " --out " +
                  quoted(out),
              log) == 0);
    std::string text = slurp(log);
    CHECK(text.find("capacity region corner") != std::string::npos);

    CHECK(run("corollary " + quoted(fs::path(kFixtures) / "chainb_cor5.json") + " --out " +
                  quoted(out),
              log) == 0);
    CHECK(slurp(log).find("achievable (inner bound only)") != std::string::npos);

    // a smooth non-chain joint: every conditional-independence test fails
    fs::path generic = tmp_root() / "generic.json";
    write_text(generic,
               "{\"alphabet_sizes\":[2,2,2,2],\"probs\":[0.10,0.02,0.07,0.03,0.09,0.04,0.05,"
               "0.06,0.08,0.03,0.09,0.02,0.07,0.10,0.05,0.10]}");
    CHECK(run("corollary " + quoted(generic) + " --out " + quoted(out)) == 4);
}

TEST_CASE("independent sources produce a single origin corner") {
    fs::path pmf = tmp_root() / "indep.json";
    write_text(pmf, independent_pmf_json());
    fs::path out = tmp_root() / "out_indep";
    CHECK(run("region " + quoted(pmf) + " --random-samples 20 --sweeps 1 --out " + quoted(out)) ==
          0);
    std::ifstream csv(out / "frontier.csv");
    std::string header, row, extra;
    REQUIRE(bool(std::getline(csv, header)));
    CHECK(header == "r0,r1,r2");
    REQUIRE(bool(std::getline(csv, row)));
    double r0 = -1, r1 = -1, r2 = -1;
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf", &r0, &r1, &r2) == 3);
    CHECK(r0 == 0.0);
    CHECK(r1 == 0.0);
    CHECK(r2 == 0.0);
    CHECK_FALSE(bool(std::getline(csv, extra)));
}

TEST_CASE("outer bounding box is printed and exported") {
    fs::path pmf = tmp_root() / "degen.json";
    write_text(pmf, degenerate_pmf_json());
    fs::path out = tmp_root() / "out_outer";
    fs::path log = tmp_root() / "outer.txt";
    CHECK(run("outer " + quoted(pmf) + " --out " + quoted(out), log) == 0);
    CHECK(slurp(log).find("(1, 0, 0)") != std::string::npos);
    std::ifstream csv(out / "outer.csv");
    std::string header, row;
    REQUIRE(bool(std::getline(csv, header)));
    CHECK(header == "b0,b1,b2");
    REQUIRE(bool(std::getline(csv, row)));
    double b0 = -1, b1 = -1, b2 = -1;
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf", &b0, &b1, &b2) == 3);
    CHECK(b0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b1 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(b2 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("containment check accepts real frontiers and flags injected ones") {
    fs::path out = tmp_root() / "out_check";
    CHECK(run("check " + quoted(fs::path(kFixtures) / "chainb_cor3.json") +
              " --random-samples 20 --sweeps 1 --out " + quoted(out)) == 0);

    fs::path pmf = tmp_root() / "degen2.json";
    write_text(pmf, degenerate_pmf_json());
    fs::path injected = tmp_root() / "fake_frontier.csv";
    write_text(injected, "r0,r1,r2\n2,0,0\n");
    CHECK(run("check " + quoted(pmf) + " --frontier-file " + quoted(injected) + " --out " +
              quoted(out)) == 5);
}

TEST_CASE("machine payloads are byte-identical across reruns and thread counts") {
    fs::path pmf = fs::path(kFixtures) / "chainb_cor1.json";
    fs::path a = tmp_root() / "rep_a", b = tmp_root() / "rep_b", c = tmp_root() / "rep_c";
    std::string flags = " --random-samples 40 --sweeps 1 --seed 9 --out ";
    CHECK(run("region " + quoted(pmf) + flags + quoted(a) + " --threads 1") == 0);
    CHECK(run("region " + quoted(pmf) + flags + quoted(b) + " --threads 1") == 0);
    CHECK(run("region " + quoted(pmf) + flags + quoted(c) + " --threads 4") == 0);
    CHECK(slurp(a / "frontier.csv") == slurp(b / "frontier.csv"));
    CHECK(slurp(a / "frontier_provenance.json") == slurp(b / "frontier_provenance.json"));
    CHECK(slurp(a / "frontier.csv") == slurp(c / "frontier.csv"));
    CHECK(slurp(a / "frontier_provenance.json") == slurp(c / "frontier_provenance.json"));
    CHECK(!slurp(a / "frontier.csv").empty());
}

TEST_CASE("simulation runs from a config file and reproduces its payload") {
    fs::path cfg = tmp_root() / "sim.json";
    fs::path pmf = fs::path(kFixtures) / "chainb_codec.json";
    write_text(cfg, std::string("{\n") + "\"pmf\": \"" + pmf.string() + "\",\n" +
                        "\"aux\": {\"card_u0\":1,\"card_u1\":2,\"card_u2\":1,\"card_q\":1,\n"
                        " \"ch_u0\":{\"in_dims\":[2],\"out_card\":1,\"rows\":[1.0,1.0]},\n"
                        " \"ch_u1\":{\"in_dims\":[1,2],\"out_card\":2,\"rows\":[1.0,0.0,0.0,1.0]},\n"
                        " \"ch_u2\":{\"in_dims\":[1,2],\"out_card\":1,\"rows\":[1.0,1.0]},\n"
                        " \"ch_q\":{\"in_dims\":[1,2,1],\"out_card\":1,\"rows\":[1.0,1.0]}},\n"
                        "\"n\": [8],\n\"eps1\": 0.2,\n\"typ_eps\": 0.05,\n\"typ_z\": 2.5,\n"
                        "\"backoff\": 0.25,\n\"trials\": 60,\n\"seed\": 11\n}\n");
    fs::path a = tmp_root() / "sim_a", b = tmp_root() / "sim_b";
    CHECK(run("simulate " + quoted(cfg) + " --out " + quoted(a)) == 0);
    CHECK(run("simulate " + quoted(cfg) + " --out " + quoted(b)) == 0);
    CHECK(slurp(a / "simulate.json") == slurp(b / "simulate.json"));
    CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));

    std::ifstream csv(a / "simulate.csv");
    std::string header, row;
    REQUIRE(bool(std::getline(csv, header)));
    CHECK(header ==
          "n,err_common,err_pk1,err_pk2,leak_eve,leak_12,leak_21,unif_gap0,unif_gap1,unif_gap2,"
          "enc_fail");
    REQUIRE(bool(std::getline(csv, row)));
    CHECK(row.substr(0, 2) == "8,");
}
