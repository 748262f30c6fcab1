#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skpk/codec.hpp"
#include "skpk/errors.hpp"
#include "skpk/pmf.hpp"
#include "skpk/region.hpp"

namespace skpk {

using nlohmann::json;

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("JSON parse error in ") + path + ": " + e.what());
    }
    return j;
}

// PMF file format: {"alphabet_sizes": [a,b,c,d], "probs": [flat row-major]}
inline JointPmf4 pmf_from_json(const json& j) {
    if (!j.contains("alphabet_sizes") || !j.contains("probs"))
        throw ParseError("pmf json needs alphabet_sizes and probs");
    auto sz = j.at("alphabet_sizes");
    if (!sz.is_array() || sz.size() != 4) throw ParseError("alphabet_sizes must have 4 entries");
    std::array<std::size_t, 4> sizes{};
    for (std::size_t k = 0; k < 4; ++k) {
        if (!sz[k].is_number_unsigned() || sz[k].get<std::size_t>() == 0)
            throw ParseError("alphabet sizes must be positive integers");
        sizes[k] = sz[k].get<std::size_t>();
    }
    auto& pj = j.at("probs");
    if (!pj.is_array()) throw ParseError("probs must be an array");
    std::vector<double> probs;
    probs.reserve(pj.size());
    for (auto& v : pj) {
        if (!v.is_number()) throw ParseError("probs entries must be numbers");
        probs.push_back(v.get<double>());
    }
    return JointPmf4(sizes, std::move(probs)); // validates shape/sign/normalization
}

inline JointPmf4 load_pmf(const std::string& path) { return pmf_from_json(load_json_file(path)); }

inline json pmf_to_json(const JointPmf4& pmf) {
    json j;
    j["alphabet_sizes"] = pmf.alphabet_sizes();
    j["probs"] = pmf.table().probs();
    return j;
}

inline json cond_table_to_json(const CondTable& t) {
    json j;
    j["in_dims"] = t.in_dims;
    j["out_card"] = t.out_card;
    j["rows"] = t.rows;
    return j;
}

inline CondTable cond_table_from_json(const json& j) {
    return CondTable(j.at("in_dims").get<std::vector<std::size_t>>(),
                     j.at("out_card").get<std::size_t>(),
                     j.at("rows").get<std::vector<double>>());
}

inline json aux_to_json(const AuxChannelSet& aux) {
    json j;
    j["card_u0"] = aux.card_u0;
    j["card_u1"] = aux.card_u1;
    j["card_u2"] = aux.card_u2;
    j["card_q"] = aux.card_q;
    j["ch_u0"] = cond_table_to_json(aux.ch_u0);
    j["ch_u1"] = cond_table_to_json(aux.ch_u1);
    j["ch_u2"] = cond_table_to_json(aux.ch_u2);
    j["ch_q"] = cond_table_to_json(aux.ch_q);
    return j;
}

// aux spec: "identity-u0" / "constant" shorthands or an explicit object
inline AuxChannelSet aux_from_json(const json& j, std::size_t card_x3) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "identity-u0") return AuxChannelSet::identity_u0(card_x3);
        if (s == "constant") return AuxChannelSet::all_constant(card_x3);
        throw ParseError("unknown aux shorthand: " + s);
    }
    try {
        AuxChannelSet a;
        a.card_u0 = j.at("card_u0").get<std::size_t>();
        a.card_u1 = j.at("card_u1").get<std::size_t>();
        a.card_u2 = j.at("card_u2").get<std::size_t>();
        a.card_q = j.value("card_q", std::size_t{1});
        a.ch_u0 = cond_table_from_json(j.at("ch_u0"));
        a.ch_u1 = cond_table_from_json(j.at("ch_u1"));
        a.ch_u2 = cond_table_from_json(j.at("ch_u2"));
        if (j.contains("ch_q"))
            a.ch_q = cond_table_from_json(j.at("ch_q"));
        else
            a.ch_q = CondTable::constant({a.card_u0, a.card_u1, a.card_u2});
        return a;
    } catch (const json::exception& e) {
        throw ParseError(std::string("aux spec: ") + e.what());
    }
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string frontier_to_csv(const RegionFrontier& fr) {
    std::string out = "r0,r1,r2\n";
    for (const auto& p : fr.points)
        out += fmt_double(p.r0) + "," + fmt_double(p.r1) + "," + fmt_double(p.r2) + "\n";
    return out;
}

inline json frontier_to_json(const RegionFrontier& fr) {
    json corners = json::array();
    for (std::size_t i = 0; i < fr.points.size(); ++i) {
        json c;
        c["rates"] = {fr.points[i].r0, fr.points[i].r1, fr.points[i].r2};
        c["aux"] = aux_to_json(fr.provenance[i]);
        corners.push_back(std::move(c));
    }
    json j;
    j["corners"] = std::move(corners);
    return j;
}

inline std::string outer_to_csv(const OuterBox& box) {
    return "b0,b1,b2\n" + fmt_double(box.b0) + "," + fmt_double(box.b1) + "," +
           fmt_double(box.b2) + "\n";
}

struct SimConfig {
    std::string pmf_path;
    json aux_spec;
    std::vector<std::size_t> n_list;
    CodecConfig codec;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

inline SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    try {
        c.pmf_path = j.at("pmf").get<std::string>();
        c.aux_spec = j.at("aux");
        c.n_list = j.at("n").get<std::vector<std::size_t>>();
        c.codec.eps1 = j.value("eps1", c.codec.eps1);
        c.codec.typ_eps = j.value("typ_eps", c.codec.typ_eps);
        c.codec.typ_z = j.value("typ_z", c.codec.typ_z);
        c.codec.backoff = j.value("backoff", c.codec.backoff);
        c.codec.codeword_budget = j.value("codeword_budget", c.codec.codeword_budget);
        c.codec.enumeration_budget = j.value("enumeration_budget", c.codec.enumeration_budget);
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ParseError(std::string("simulate config: ") + e.what());
    }
    if (c.n_list.empty()) throw ParseError("simulate config: n list is empty");
    return c;
}

inline json report_to_json(const SimulationReport& r) {
    json j;
    j["n"] = r.n;
    j["trials"] = r.trials;
    j["err_common"] = r.err_common;
    j["err_pk1"] = r.err_pk1;
    j["err_pk2"] = r.err_pk2;
    j["leak_eve_per_symbol"] = r.leak_eve_per_symbol;
    j["leak_cross_12"] = r.leak_cross_12;
    j["leak_cross_21"] = r.leak_cross_21;
    j["uniformity_gap"] = r.uniformity_gap;
    j["encoder_failure_rate"] = r.encoder_failure_rate;
    j["key_ranges"] = r.key_ranges;
    return j;
}

inline std::string reports_to_csv(const std::vector<SimulationReport>& rs) {
    std::string out =
        "n,err_common,err_pk1,err_pk2,leak_eve,leak_12,leak_21,unif_gap0,unif_gap1,unif_gap2,enc_fail\n";
    for (const auto& r : rs) {
        out += std::to_string(r.n) + "," + fmt_double(r.err_common) + "," + fmt_double(r.err_pk1) +
               "," + fmt_double(r.err_pk2) + "," + fmt_double(r.leak_eve_per_symbol) + "," +
               fmt_double(r.leak_cross_12) + "," + fmt_double(r.leak_cross_21) + "," +
               fmt_double(r.uniformity_gap[0]) + "," + fmt_double(r.uniformity_gap[1]) + "," +
               fmt_double(r.uniformity_gap[2]) + "," + fmt_double(r.encoder_failure_rate) + "\n";
    }
    return out;
}

// Audit record persisted next to the CSV outputs. The payload is the
// machine result; timestamp and duration are excluded from reproducibility
// comparisons.
struct ExperimentRecord {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::string version;
    std::string timestamp;
    double duration_seconds = 0.0;
    json payload;
};

inline json record_to_json(const ExperimentRecord& r) {
    json j;
    j["command"] = r.command;
    j["config"] = r.config;
    j["seed"] = r.seed;
    j["version"] = r.version;
    j["timestamp"] = r.timestamp;
    j["duration_seconds"] = r.duration_seconds;
    j["payload"] = r.payload;
    return j;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

} // namespace skpk
