#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skpk/info.hpp"
#include "skpk/io.hpp"
#include "skpk/pmf.hpp"
#include "skpk/rng.hpp"
#include "skpk/tensor.hpp"

#include "oracle.hpp"

using namespace skpk;

static std::vector<double> random_joint16(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> p(16);
    double s = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - rng.next_double());
        s += v;
    }
    for (double& v : p) v /= s;
    return p;
}

static double hbin(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

TEST_CASE("ProbTable validation") {
    CHECK_THROWS_AS(ProbTable({2, 2}, {0.5, 0.5, 0.1, -0.1}), NegativeProbability);
    CHECK_THROWS_AS(ProbTable({2, 2}, {0.5, 0.5, 0.5, 0.5}), NotNormalized);
    CHECK_THROWS_AS(ProbTable({2, 2}, {0.5, 0.5, 0.0}), ShapeMismatch);
    CHECK_THROWS_AS(ProbTable({2, 2}, {0.25, 0.25, 0.25, std::nan("")}), NegativeProbability);
    ProbTable t = ProbTable::uniform({2, 3});
    CHECK(t.size() == 6);
    CHECK(t[0] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("marginalization is exact and commutes") {
    auto p = random_joint16(7);
    ProbTable t({2, 2, 2, 2}, p);
    ProbTable m01 = t.marginal({0, 1});
    ProbTable m0_direct = t.marginal({0});
    ProbTable m0_via = m01.marginal({0});
    CHECK(m0_direct.approx_equal(m0_via, 1e-12));
    double s = 0.0;
    for (double v : m01.probs()) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(t.marginal({0, 0}), BadSubset);
    CHECK_THROWS_AS(t.marginal({5}), BadSubset);
    CHECK_THROWS_AS(t.marginal({}), BadSubset);
}

TEST_CASE("conditional rows and chain rule") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    auto c = pmf.table().conditional({std::size_t(X1)}, {std::size_t(X3)});
    CHECK(c.rows == 2);
    CHECK(c[0] == doctest::Approx(0.9).epsilon(1e-12)); // p(x1=0|x3=0)
    CHECK(c[1] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(c[2] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(c[3] == doctest::Approx(0.9).epsilon(1e-12));

    // H(X3,X1) = H(X3) + sum_x3 p(x3) H(X1|X3=x3)
    double h_joint = entropy(pmf.table().marginal({std::size_t(X3), std::size_t(X1)}));
    ProbTable px3 = pmf.table().marginal({std::size_t(X3)});
    double h_cond = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        std::vector<double> row = {c[r * 2], c[r * 2 + 1]};
        h_cond += px3[r] * entropy(std::span<const double>(row));
    }
    CHECK(h_joint == doctest::Approx(entropy(px3) + h_cond).epsilon(1e-12));
    CHECK_THROWS_AS(pmf.table().conditional({std::size_t(X1)}, {std::size_t(X1)}), OverlappingSets);
}

TEST_CASE("entropy/MI/CMI match the brute-force oracle on 50 random joints") {
    for (std::uint64_t s = 1; s <= 50; ++s) {
        auto p = random_joint16(s);
        ProbTable t({2, 2, 2, 2}, p);
        auto od = oracle::from_flat({2, 2, 2, 2}, p);
        CHECK(std::abs(entropy(t) - oracle::entropy(od)) < 1e-9);
        CHECK(std::abs(mutual_information(t, {0}, {1}) -
                       oracle::mutual_information(od, {0}, {1})) < 1e-9);
        CHECK(std::abs(mutual_information(t, {0, 2}, {1, 3}) -
                       oracle::mutual_information(od, {0, 2}, {1, 3})) < 1e-9);
        CHECK(std::abs(conditional_mutual_information(t, {0}, {1}, {2}) -
                       oracle::conditional_mutual_information(od, {0}, {1}, {2})) < 1e-9);
        CHECK(std::abs(conditional_mutual_information(t, {0}, {1}, {2, 3}) -
                       oracle::conditional_mutual_information(od, {0}, {1}, {2, 3})) < 1e-9);
    }
}

TEST_CASE("known entropy values on the binary chain") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    const ProbTable& t = pmf.table();
    CHECK(entropy(t.marginal({std::size_t(X3)})) == doctest::Approx(1.0).epsilon(1e-12));
    // I(X3;X1) = 1 - h(0.1)
    double expected = 1.0 - hbin(0.1);
    CHECK(mutual_information(t, {std::size_t(X3)}, {std::size_t(X1)}) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.531004).epsilon(1e-5));
    CHECK(hbin(0.1) == doctest::Approx(0.468996).epsilon(1e-5));
}

TEST_CASE("MI symmetry, nonnegativity, data processing") {
    for (std::uint64_t s = 60; s < 70; ++s) {
        ProbTable t({2, 2, 2, 2}, random_joint16(s));
        CHECK(mutual_information(t, {0}, {2}) ==
              doctest::Approx(mutual_information(t, {2}, {0})).epsilon(1e-12));
        CHECK(mutual_information(t, {0}, {3}) >= 0.0);
        CHECK(conditional_mutual_information(t, {0}, {1}, {3}) >= 0.0);
    }
    // chain X3-X1-X2-X4: processing X1 -> X2 cannot increase information about X3
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.15, 0.2);
    const ProbTable& t = pmf.table();
    CHECK(mutual_information(t, {std::size_t(X3)}, {std::size_t(X2)}) <=
          mutual_information(t, {std::size_t(X3)}, {std::size_t(X1)}) + 1e-12);
    CHECK_THROWS_AS(mutual_information(t, {0}, {0}), BadPartition);
}

TEST_CASE("Markov chain detection and reversal invariance") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    CHECK(is_markov_chain(pmf, {X3, X1, X2, X4}, 1e-9));
    CHECK(is_markov_chain(pmf, {X4, X2, X1, X3}, 1e-9)); // reversal
    CHECK_FALSE(is_markov_chain(pmf, {X1, X3, X2, X4}, 1e-6));
    CHECK_FALSE(is_markov_chain(pmf, {X3, X2, X1, X4}, 1e-6));
    std::array<Var, 4> bad = {X1, X1, X2, X3};
    CHECK_THROWS_AS(is_markov_chain(pmf, bad, 1e-9), BadSubset);
    // independent sources satisfy every ordering
    ProbTable u = ProbTable::uniform({2, 2, 2, 2});
    JointPmf4 ind({2, 2, 2, 2}, u.probs());
    CHECK(is_markov_chain(ind, {X1, X2, X3, X4}, 1e-9));
    CHECK(is_markov_chain(ind, {X2, X4, X1, X3}, 1e-9));
}

TEST_CASE("extend_with_aux factorization") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    AuxChannelSet aux = AuxChannelSet::identity_u0(2);
    ExtendedPmf e = extend_with_aux(pmf, aux);
    using Ax = ExtendedPmf::Axis;
    // sources marginal unchanged
    ProbTable src = e.table().marginal({Ax::EX1, Ax::EX2, Ax::EX3, Ax::EX4});
    CHECK(src.approx_equal(pmf.table(), 1e-12));
    // u0 is a copy of x3
    CHECK(conditional_mutual_information(e.table(), {Ax::U0}, {Ax::EX1}, {Ax::EX3}) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(mutual_information(e.table(), {Ax::U0}, {Ax::EX3}) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // constant aux adds no information
    ExtendedPmf e2 = extend_with_aux(pmf, AuxChannelSet::all_constant(2));
    CHECK(entropy(e2.table()) == doctest::Approx(entropy(pmf.table())).epsilon(1e-9));
}

TEST_CASE("rng determinism and substreams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(Rng::derive(42, 0) != Rng::derive(42, 1));
    Rng c(1);
    for (int i = 0; i < 1000; ++i) {
        double d = c.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        CHECK(c.next_below(7) < 7);
    }
    CHECK_THROWS_AS(c.next_below(0), Error);
}

TEST_CASE("iid sampling matches the source statistics") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    const std::size_t n = 1'000'000;
    SourceBlock blk = sample_iid(pmf, n, 9);
    // per-variable frequencies within 5 sigma
    auto freq1 = [&](const std::vector<std::uint8_t>& xs) {
        double s = 0.0;
        for (auto v : xs) s += v;
        return s / double(n);
    };
    double sigma = 5.0 * std::sqrt(0.25 / double(n));
    CHECK(std::abs(freq1(blk.x3) - 0.5) < sigma);
    CHECK(std::abs(freq1(blk.x1) - 0.5) < sigma);
    // empirical MI close to true I(X3;X1)
    double mi = empirical_mi(blk.x3, blk.x1, 2, 2);
    CHECK(std::abs(mi - (1.0 - hbin(0.1))) < 0.005);
    // determinism
    SourceBlock blk2 = sample_iid(pmf, 100, 9);
    SourceBlock blk3 = sample_iid(pmf, 100, 9);
    CHECK(blk2.x1 == blk3.x1);
    CHECK(blk2.x4 == blk3.x4);
    CHECK_THROWS_AS(empirical_mi(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}, 2, 2),
                    EmptySample);
}

TEST_CASE("pmf json round trip and rejection") {
    JointPmf4 pmf = binary_chain_pmf({X3, X1, X2, X4}, 0.1, 0.1, 0.1);
    json j = pmf_to_json(pmf);
    JointPmf4 back = pmf_from_json(j);
    CHECK(back.table().approx_equal(pmf.table(), 1e-15));

    json bad = j;
    bad["probs"][0] = -0.1;
    CHECK_THROWS_AS(pmf_from_json(bad), Error);
    bad = j;
    bad["probs"].erase(0);
    CHECK_THROWS_AS(pmf_from_json(bad), Error);
    bad = j;
    bad["alphabet_sizes"] = {2, 2, 2};
    CHECK_THROWS_AS(pmf_from_json(bad), ParseError);
    CHECK_THROWS_AS(pmf_from_json(json::object()), ParseError);
}

TEST_CASE("fixture files load and have the declared structure") {
    JointPmf4 cor1 = load_pmf(std::string(FIXTURES_DIR) + "/chainb_cor1.json");
    CHECK(is_markov_chain(cor1, {X3, X1, X4, X2}, 1e-9));
    JointPmf4 cor3 = load_pmf(std::string(FIXTURES_DIR) + "/chainb_cor3.json");
    CHECK(is_markov_chain(cor3, {X3, X1, X2, X4}, 1e-9));
    JointPmf4 codec = load_pmf(std::string(FIXTURES_DIR) + "/chainb_codec.json");
    CHECK(is_markov_chain(codec, {X3, X1, X2, X4}, 1e-9));
}
