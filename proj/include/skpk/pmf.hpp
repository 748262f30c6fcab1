#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "skpk/errors.hpp"
#include "skpk/info.hpp"
#include "skpk/rng.hpp"
#include "skpk/tensor.hpp"

namespace skpk {

// Variable order everywhere: X1, X2, X3, X4 (axes 0..3).
enum Var : std::size_t { X1 = 0, X2 = 1, X3 = 2, X4 = 3 };

// Joint distribution of the four source components.
class JointPmf4 {
  public:
    JointPmf4(std::array<std::size_t, 4> sizes, std::vector<double> probs)
        : table_({sizes[0], sizes[1], sizes[2], sizes[3]}, std::move(probs)), sizes_(sizes) {}

    const std::array<std::size_t, 4>& alphabet_sizes() const { return sizes_; }
    const ProbTable& table() const { return table_; }

    double prob(std::size_t x1, std::size_t x2, std::size_t x3, std::size_t x4) const {
        return table_[((x1 * sizes_[1] + x2) * sizes_[2] + x3) * sizes_[3] + x4];
    }

  private:
    ProbTable table_;
    std::array<std::size_t, 4> sizes_;
};

// Conditional channel p(out | in...) stored as rows over the joint input index.
struct CondTable {
    std::vector<std::size_t> in_dims;
    std::size_t out_card = 1;
    std::vector<double> rows; // rows * out_card, row-major over in_dims then out

    CondTable() = default;
    CondTable(std::vector<std::size_t> in, std::size_t out, std::vector<double> r)
        : in_dims(std::move(in)), out_card(out), rows(std::move(r)) {
        std::size_t n_rows = 1;
        for (std::size_t d : in_dims) n_rows *= d;
        if (rows.size() != n_rows * out_card) throw ShapeMismatch("conditional table size");
        for (std::size_t r0 = 0; r0 < n_rows; ++r0) {
            double s = 0.0;
            for (std::size_t k = 0; k < out_card; ++k) {
                double v = rows[r0 * out_card + k];
                if (!(v >= 0.0)) throw NegativeProbability("conditional row entry");
                s += v;
            }
            if (std::abs(s - 1.0) > kSumTol) throw NotNormalized("conditional row sum");
        }
    }

    double at(std::size_t row, std::size_t out) const { return rows[row * out_card + out]; }

    static CondTable identity(std::size_t card) {
        std::vector<double> r(card * card, 0.0);
        for (std::size_t i = 0; i < card; ++i) r[i * card + i] = 1.0;
        return CondTable({card}, card, std::move(r));
    }
    static CondTable constant(std::vector<std::size_t> in_dims) {
        std::size_t n_rows = 1;
        for (std::size_t d : in_dims) n_rows *= d;
        return CondTable(std::move(in_dims), 1, std::vector<double>(n_rows, 1.0));
    }
};

// Auxiliary channels of the layered scheme:
//   p(u0|x3), p(u1|u0,x3), p(u2|u0,x3), p(q|u0,u1,u2)
struct AuxChannelSet {
    std::size_t card_u0 = 1, card_u1 = 1, card_u2 = 1, card_q = 1;
    CondTable ch_u0; // in: (x3)
    CondTable ch_u1; // in: (u0, x3)
    CondTable ch_u2; // in: (u0, x3)
    CondTable ch_q;  // in: (u0, u1, u2)

    static AuxChannelSet all_constant(std::size_t card_x3) {
        AuxChannelSet a;
        a.ch_u0 = CondTable::constant({card_x3});
        a.ch_u1 = CondTable::constant({1, card_x3});
        a.ch_u2 = CondTable::constant({1, card_x3});
        a.ch_q = CondTable::constant({1, 1, 1});
        return a;
    }

    // U0 copies X3; U1, U2, Q constant.
    static AuxChannelSet identity_u0(std::size_t card_x3) {
        AuxChannelSet a;
        a.card_u0 = card_x3;
        a.ch_u0 = CondTable::identity(card_x3);
        a.ch_u1 = CondTable::constant({card_x3, card_x3});
        a.ch_u2 = CondTable::constant({card_x3, card_x3});
        a.ch_q = CondTable::constant({card_x3, 1, 1});
        return a;
    }

    void validate_against(const JointPmf4& pmf) const {
        std::size_t cx3 = pmf.alphabet_sizes()[X3];
        auto chk = [](const CondTable& t, std::vector<std::size_t> dims, std::size_t out, const char* what) {
            if (t.in_dims != dims || t.out_card != out)
                throw ShapeMismatch(std::string("aux channel shape: ") + what);
        };
        chk(ch_u0, {cx3}, card_u0, "u0");
        chk(ch_u1, {card_u0, cx3}, card_u1, "u1");
        chk(ch_u2, {card_u0, cx3}, card_u2, "u2");
        chk(ch_q, {card_u0, card_u1, card_u2}, card_q, "q");
    }
};

// Joint over (Q, U0, U1, U2, X1, X2, X3, X4), axes 0..7.
class ExtendedPmf {
  public:
    enum Axis : std::size_t { Q = 0, U0 = 1, U1 = 2, U2 = 3, EX1 = 4, EX2 = 5, EX3 = 6, EX4 = 7 };

    ExtendedPmf(std::vector<std::size_t> dims, std::vector<double> probs)
        : table_(std::move(dims), std::move(probs)) {}

    const ProbTable& table() const { return table_; }
    const std::vector<std::size_t>& dims() const { return table_.dims(); }

  private:
    ProbTable table_;
};

inline JointPmf4 new_joint_pmf(std::array<std::size_t, 4> sizes, std::vector<double> probs) {
    return JointPmf4(sizes, std::move(probs));
}

// p(q,u0,u1,u2,x1,x2,x3,x4) =
//   p(q|u0,u1,u2) p(u0|x3) p(u1|u0,x3) p(u2|u0,x3) p(x1,x2,x3,x4)
inline ExtendedPmf extend_with_aux(const JointPmf4& pmf, const AuxChannelSet& aux) {
    aux.validate_against(pmf);
    const auto& s = pmf.alphabet_sizes();
    std::vector<std::size_t> dims = {aux.card_q, aux.card_u0, aux.card_u1, aux.card_u2,
                                     s[0], s[1], s[2], s[3]};
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    std::vector<double> out(n, 0.0);
    std::size_t f = 0;
    for (std::size_t q = 0; q < aux.card_q; ++q)
        for (std::size_t u0 = 0; u0 < aux.card_u0; ++u0)
            for (std::size_t u1 = 0; u1 < aux.card_u1; ++u1)
                for (std::size_t u2 = 0; u2 < aux.card_u2; ++u2) {
                    double pq = aux.ch_q.at((u0 * aux.card_u1 + u1) * aux.card_u2 + u2, q);
                    for (std::size_t x1 = 0; x1 < s[0]; ++x1)
                        for (std::size_t x2 = 0; x2 < s[1]; ++x2)
                            for (std::size_t x3 = 0; x3 < s[2]; ++x3) {
                                double pu0 = aux.ch_u0.at(x3, u0);
                                double pu1 = aux.ch_u1.at(u0 * s[2] + x3, u1);
                                double pu2 = aux.ch_u2.at(u0 * s[2] + x3, u2);
                                double w = pq * pu0 * pu1 * pu2;
                                for (std::size_t x4 = 0; x4 < s[3]; ++x4, ++f)
                                    out[f] = w * pmf.prob(x1, x2, x3, x4);
                            }
                }
    return ExtendedPmf(std::move(dims), std::move(out));
}

// Markov chain test for ordering A-B-C-D over the four source variables:
// both I(A; C,D | B) and I(A,B; D | C) must vanish within tol.
inline bool is_markov_chain(const JointPmf4& pmf, const std::array<Var, 4>& ordering, double tol) {
    std::array<bool, 4> seen{};
    for (Var v : ordering) {
        if (v > 3 || seen[v]) throw BadSubset("ordering must be a permutation of the four variables");
        seen[v] = true;
    }
    std::size_t a = ordering[0], b = ordering[1], c = ordering[2], d = ordering[3];
    const ProbTable& t = pmf.table();
    double m1 = conditional_mutual_information(t, {a}, {c, d}, {b});
    double m2 = conditional_mutual_information(t, {a, b}, {d}, {c});
    return m1 <= tol && m2 <= tol;
}

// n i.i.d. draws from the joint; deterministic in the seed.
struct SourceBlock {
    std::size_t n = 0;
    std::vector<std::uint8_t> x1, x2, x3, x4;
};

inline SourceBlock sample_iid(const JointPmf4& pmf, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error("sample_iid: n must be >= 1");
    SourceBlock b;
    b.n = n;
    b.x1.resize(n);
    b.x2.resize(n);
    b.x3.resize(n);
    b.x4.resize(n);
    Rng rng(seed);
    const auto& s = pmf.alphabet_sizes();
    const auto& p = pmf.table().probs();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t f = rng.sample(std::span<const double>(p));
        b.x4[i] = std::uint8_t(f % s[3]);
        f /= s[3];
        b.x3[i] = std::uint8_t(f % s[2]);
        f /= s[2];
        b.x2[i] = std::uint8_t(f % s[1]);
        f /= s[1];
        b.x1[i] = std::uint8_t(f);
    }
    return b;
}

// Canonical binary chain family: head ~ Bernoulli(1/2), each successor is
// the predecessor XOR an independent Bernoulli flip. `order` assigns chain
// positions to source variables, e.g. {X3,X1,X2,X4} builds the chain
// X3 - X1 - X2 - X4 with flips (f01, f12, f23).
inline JointPmf4 binary_chain_pmf(const std::array<Var, 4>& order, double f01, double f12, double f23) {
    std::array<bool, 4> seen{};
    for (Var v : order) {
        if (v > 3 || seen[v]) throw BadSubset("order must be a permutation");
        seen[v] = true;
    }
    std::array<double, 3> flips = {f01, f12, f23};
    std::vector<double> probs(16, 0.0);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t d = 0; d < 2; ++d) {
                    std::array<std::size_t, 4> chain = {a, b, c, d};
                    double p = 0.5;
                    for (std::size_t k = 0; k < 3; ++k)
                        p *= (chain[k] == chain[k + 1]) ? (1.0 - flips[k]) : flips[k];
                    std::array<std::size_t, 4> x{};
                    for (std::size_t k = 0; k < 4; ++k) x[order[k]] = chain[k];
                    probs[((x[0] * 2 + x[1]) * 2 + x[2]) * 2 + x[3]] += p;
                }
    return JointPmf4({2, 2, 2, 2}, std::move(probs));
}

} // namespace skpk
