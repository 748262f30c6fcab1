#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skpk/info.hpp"
#include "skpk/pmf.hpp"
#include "skpk/rng.hpp"

namespace skpk {

struct RateTriple {
    double r0 = 0.0, r1 = 0.0, r2 = 0.0;

    double operator[](std::size_t k) const { return k == 0 ? r0 : (k == 1 ? r1 : r2); }
    bool operator==(const RateTriple&) const = default;

    static RateTriple clamped(double a, double b, double c) {
        auto snap = [](double v) { return v < kEntryTol ? 0.0 : v; };
        return {snap(std::max(0.0, a)), snap(std::max(0.0, b)), snap(std::max(0.0, c))};
    }
};

inline bool lex_less(const RateTriple& a, const RateTriple& b) {
    if (a.r0 != b.r0) return a.r0 < b.r0;
    if (a.r1 != b.r1) return a.r1 < b.r1;
    return a.r2 < b.r2;
}

struct OuterBox {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double operator[](std::size_t k) const { return k == 0 ? b0 : (k == 1 ? b1 : b2); }
};

struct RegionFrontier {
    std::vector<RateTriple> points;
    std::vector<AuxChannelSet> provenance; // achieving auxiliaries, same order
};

struct SearchConfig {
    std::size_t card_u0 = 0, card_u1 = 0, card_u2 = 0; // 0 = default |X3|
    std::size_t card_q = 1;
    std::size_t exhaustive_budget = 1'000'000; // max deterministic tuples
    std::size_t random_samples = 200;
    std::size_t refine_sweeps = 2;
    std::vector<std::array<double, 3>> weights = {
        {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
    std::uint64_t seed = 0;
};

namespace detail {

using Ax = ExtendedPmf::Axis;

inline double cmi(const ExtendedPmf& e, std::vector<std::size_t> a, std::vector<std::size_t> b,
                  std::vector<std::size_t> c) {
    return conditional_mutual_information(e.table(), a, b, c);
}

} // namespace detail

// Corner point of the inner bound for a fixed auxiliary tuple: the three
// right-hand sides with [.]^+ applied.
inline RateTriple inner_bound_point(const JointPmf4& pmf, const AuxChannelSet& aux) {
    ExtendedPmf e = extend_with_aux(pmf, aux);
    using detail::cmi;
    using Ax = ExtendedPmf::Axis;
    const std::vector<std::size_t> q = {Ax::Q}, u0 = {Ax::U0}, u1 = {Ax::U1}, u2 = {Ax::U2};
    const std::vector<std::size_t> x1 = {Ax::EX1}, x2 = {Ax::EX2}, x4 = {Ax::EX4};
    const std::vector<std::size_t> u0q = {Ax::U0, Ax::Q};

    double r0 = std::min(cmi(e, u0, x1, q), cmi(e, u0, x2, q)) - cmi(e, u0, x4, q);
    double r1 = cmi(e, u1, x1, u0q) -
                std::max(cmi(e, u1, {Ax::EX2, Ax::U2}, u0q), cmi(e, u1, {Ax::EX4, Ax::U2}, u0q));
    double r2 = cmi(e, u2, x2, u0q) -
                std::max(cmi(e, u2, {Ax::EX1, Ax::U1}, u0q), cmi(e, u2, {Ax::EX4, Ax::U1}, u0q));
    return RateTriple::clamped(r0, r1, r2);
}

// Closed-form outer box.
inline OuterBox outer_bound(const JointPmf4& pmf) {
    const ProbTable& t = pmf.table();
    double i31_4 = conditional_mutual_information(t, {X3}, {X1}, {X4});
    double i32_4 = conditional_mutual_information(t, {X3}, {X2}, {X4});
    double i31_2 = conditional_mutual_information(t, {X3}, {X1}, {X2});
    double i32_1 = conditional_mutual_information(t, {X3}, {X2}, {X1});
    return {std::min(i31_4, i32_4), std::min(i31_4, i31_2), std::min(i32_4, i32_1)};
}

namespace detail {

// Phase-1 simplex feasibility for: exists lambda >= 0 with
//   sum_i lambda_i * P_i >= q (componentwise), sum_i lambda_i <= 1.
inline bool dominated_by_hull(const std::vector<RateTriple>& pts, const RateTriple& q, double tol) {
    const std::size_t m = pts.size();
    bool trivially = true;
    for (std::size_t k = 0; k < 3; ++k)
        if (q[k] > tol) trivially = false;
    if (trivially) return true; // origin dominates
    if (m == 0) return false;

    // Columns: m lambdas, 3 surplus (>=), 1 slack (<=), 3 artificials.
    const std::size_t n_cols = m + 7;
    const std::size_t rows = 4;
    std::vector<std::vector<double>> a(rows, std::vector<double>(n_cols + 1, 0.0));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t i = 0; i < m; ++i) a[r][i] = pts[i][r];
        a[r][m + r] = -1.0;            // surplus
        a[r][m + 4 + r] = 1.0;         // artificial
        a[r][n_cols] = std::max(0.0, q[r] - tol);
    }
    for (std::size_t i = 0; i < m; ++i) a[3][i] = 1.0;
    a[3][m + 3] = 1.0; // slack
    a[3][n_cols] = 1.0;

    std::vector<std::size_t> basis = {m + 4, m + 5, m + 6, m + 3};
    // objective: minimize sum of artificials -> reduced costs
    std::vector<double> z(n_cols + 1, 0.0);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c <= n_cols; ++c) z[c] += a[r][c];
    auto cost = [&](std::size_t c) { return (c >= m + 4 && c < m + 7) ? 1.0 : 0.0; };

    for (std::size_t iter = 0; iter < 10000; ++iter) {
        // Bland's rule: smallest index with positive reduced cost z_c - cost_c
        std::size_t pivot_col = n_cols;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (std::find(basis.begin(), basis.end(), c) != basis.end()) continue;
            if (z[c] - cost(c) > 1e-11) { pivot_col = c; break; }
        }
        if (pivot_col == n_cols) break; // optimal
        std::size_t pivot_row = rows;
        double best_ratio = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (a[r][pivot_col] > 1e-11) {
                double ratio = a[r][n_cols] / a[r][pivot_col];
                if (pivot_row == rows || ratio < best_ratio - 1e-14 ||
                    (std::abs(ratio - best_ratio) <= 1e-14 && basis[r] < basis[pivot_row])) {
                    pivot_row = r;
                    best_ratio = ratio;
                }
            }
        }
        if (pivot_row == rows) break; // unbounded (cannot happen here)
        double pv = a[pivot_row][pivot_col];
        for (std::size_t c = 0; c <= n_cols; ++c) a[pivot_row][c] /= pv;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pivot_row) continue;
            double f = a[r][pivot_col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= n_cols; ++c) a[r][c] -= f * a[pivot_row][c];
        }
        double zf = z[pivot_col] - cost(pivot_col);
        for (std::size_t c = 0; c <= n_cols; ++c) z[c] -= zf * a[pivot_row][c];
        basis[pivot_row] = pivot_col;
    }
    double infeas = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        if (basis[r] >= m + 4 && basis[r] < m + 7) infeas += a[r][n_cols];
    return infeas <= 1e-9;
}

} // namespace detail

// True iff `point` lies in the downward convex closure of the frontier
// corners together with the origin.
inline bool contains(const RegionFrontier& frontier, const RateTriple& point, double tol = 1e-9) {
    return detail::dominated_by_hull(frontier.points, point, tol);
}

namespace detail {

struct Candidate {
    RateTriple rate;
    AuxChannelSet aux;
};

inline AuxChannelSet random_aux(std::size_t cx3, std::size_t cu0, std::size_t cu1, std::size_t cu2,
                                std::size_t cq, Rng& rng) {
    auto dirichlet_rows = [&](std::size_t n_rows, std::size_t card) {
        std::vector<double> rows(n_rows * card);
        for (std::size_t r = 0; r < n_rows; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < card; ++k) {
                double e = -std::log(1.0 - rng.next_double()); // Exp(1); Dirichlet(1,..,1)
                rows[r * card + k] = e;
                s += e;
            }
            for (std::size_t k = 0; k < card; ++k) rows[r * card + k] /= s;
        }
        return rows;
    };
    AuxChannelSet a;
    a.card_u0 = cu0;
    a.card_u1 = cu1;
    a.card_u2 = cu2;
    a.card_q = cq;
    a.ch_u0 = CondTable({cx3}, cu0, dirichlet_rows(cx3, cu0));
    a.ch_u1 = CondTable({cu0, cx3}, cu1, dirichlet_rows(cu0 * cx3, cu1));
    a.ch_u2 = CondTable({cu0, cx3}, cu2, dirichlet_rows(cu0 * cx3, cu2));
    a.ch_q = CondTable({cu0, cu1, cu2}, cq, dirichlet_rows(cu0 * cu1 * cu2, cq));
    return a;
}

inline AuxChannelSet deterministic_aux(std::size_t cx3, std::size_t cu0, std::size_t cu1,
                                       std::size_t cu2, std::size_t cq, std::size_t code) {
    auto det_rows = [&](std::size_t n_rows, std::size_t card) {
        std::vector<double> rows(n_rows * card, 0.0);
        for (std::size_t r = 0; r < n_rows; ++r) {
            rows[r * card + (code % card)] = 1.0;
            code /= card;
        }
        return rows;
    };
    AuxChannelSet a;
    a.card_u0 = cu0;
    a.card_u1 = cu1;
    a.card_u2 = cu2;
    a.card_q = cq;
    a.ch_u0 = CondTable({cx3}, cu0, det_rows(cx3, cu0));
    a.ch_u1 = CondTable({cu0, cx3}, cu1, det_rows(cu0 * cx3, cu1));
    a.ch_u2 = CondTable({cu0, cx3}, cu2, det_rows(cu0 * cx3, cu2));
    a.ch_q = CondTable({cu0, cu1, cu2}, cq, det_rows(cu0 * cu1 * cu2, cq));
    return a;
}

inline double pow_sat(std::size_t base, std::size_t exp, std::size_t cap) {
    double v = 1.0;
    for (std::size_t i = 0; i < exp; ++i) {
        v *= double(base);
        if (v > double(cap) * 2.0) return v;
    }
    return v;
}

} // namespace detail

// Union over auxiliary distributions: deterministic enumeration within
// budget, Dirichlet random tuples, then scalarized coordinate ascent with
// golden-section line search. Returns the non-dominated corner set.
inline RegionFrontier search_inner_region(const JointPmf4& pmf, const SearchConfig& cfg) {
    std::size_t cx3 = pmf.alphabet_sizes()[X3];
    std::size_t cu0 = cfg.card_u0 ? cfg.card_u0 : cx3;
    std::size_t cu1 = cfg.card_u1 ? cfg.card_u1 : cx3;
    std::size_t cu2 = cfg.card_u2 ? cfg.card_u2 : cx3;
    std::size_t cq = cfg.card_q ? cfg.card_q : 1;
    if (cfg.exhaustive_budget == 0 && cfg.random_samples == 0 && cfg.refine_sweeps == 0)
        throw BudgetZero("search_inner_region: all strategies disabled");

    std::vector<detail::Candidate> cands;
    auto eval = [&](const AuxChannelSet& aux) {
        cands.push_back({inner_bound_point(pmf, aux), aux});
    };

    // (a) all deterministic channel tuples, if within budget
    double det_count = detail::pow_sat(cu0, cx3, cfg.exhaustive_budget) *
                       detail::pow_sat(cu1, cu0 * cx3, cfg.exhaustive_budget) *
                       detail::pow_sat(cu2, cu0 * cx3, cfg.exhaustive_budget) *
                       detail::pow_sat(cq, cu0 * cu1 * cu2, cfg.exhaustive_budget);
    if (cfg.exhaustive_budget > 0 && det_count <= double(cfg.exhaustive_budget)) {
        for (std::size_t code = 0; code < std::size_t(det_count); ++code)
            eval(detail::deterministic_aux(cx3, cu0, cu1, cu2, cq, code));
    }

    // (b) random stochastic tuples, one derived stream per index
    for (std::size_t j = 0; j < cfg.random_samples; ++j) {
        Rng rng(Rng::derive(cfg.seed, j));
        eval(detail::random_aux(cx3, cu0, cu1, cu2, cq, rng));
    }

    // (c) coordinate ascent per weight vector, starting from the incumbent
    for (const auto& w : cfg.weights) {
        if (cfg.refine_sweeps == 0 || cands.empty()) break;
        auto score = [&](const RateTriple& r) { return w[0] * r.r0 + w[1] * r.r1 + w[2] * r.r2; };
        std::size_t best = 0;
        for (std::size_t i = 1; i < cands.size(); ++i)
            if (score(cands[i].rate) > score(cands[best].rate) + 1e-15) best = i;
        AuxChannelSet cur = cands[best].aux;
        double cur_score = score(cands[best].rate);
        for (std::size_t sweep = 0; sweep < cfg.refine_sweeps; ++sweep) {
            CondTable* channels[] = {&cur.ch_u0, &cur.ch_u1, &cur.ch_u2, &cur.ch_q};
            for (CondTable* ch : channels) {
                std::size_t n_rows = ch->rows.size() / ch->out_card;
                for (std::size_t r = 0; r < n_rows; ++r) {
                    for (std::size_t vertex = 0; vertex < ch->out_card; ++vertex) {
                        std::vector<double> base(ch->rows.begin() + r * ch->out_card,
                                                 ch->rows.begin() + (r + 1) * ch->out_card);
                        auto apply = [&](double t) {
                            for (std::size_t k = 0; k < ch->out_card; ++k)
                                ch->rows[r * ch->out_card + k] =
                                    (1.0 - t) * base[k] + (k == vertex ? t : 0.0);
                        };
                        auto f = [&](double t) {
                            apply(t);
                            return score(inner_bound_point(pmf, cur));
                        };
                        // golden-section maximization on [0,1]
                        const double gr = 0.6180339887498949;
                        double lo = 0.0, hi = 1.0;
                        double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
                        double f1 = f(m1), f2 = f(m2);
                        for (int it = 0; it < 24; ++it) {
                            if (f1 < f2) {
                                lo = m1; m1 = m2; f1 = f2;
                                m2 = lo + gr * (hi - lo); f2 = f(m2);
                            } else {
                                hi = m2; m2 = m1; f2 = f1;
                                m1 = hi - gr * (hi - lo); f1 = f(m1);
                            }
                        }
                        double t_best = (f1 > f2) ? m1 : m2;
                        double v = f(t_best);
                        if (v > cur_score + 1e-12) {
                            cur_score = v; // keep row at t_best
                        } else {
                            apply(0.0);    // revert
                        }
                    }
                }
            }
        }
        eval(cur);
    }

    // Pairwise prune, then drop corners dominated by the convex closure
    // of the rest with the origin. Lexicographic order keeps it deterministic.
    std::sort(cands.begin(), cands.end(),
              [](const detail::Candidate& a, const detail::Candidate& b) {
                  return lex_less(b.rate, a.rate); // descending
              });
    std::vector<detail::Candidate> kept;
    for (auto& c : cands) {
        bool dom = false;
        for (const auto& k : kept)
            if (k.rate.r0 >= c.rate.r0 - kEntryTol && k.rate.r1 >= c.rate.r1 - kEntryTol &&
                k.rate.r2 >= c.rate.r2 - kEntryTol) {
                dom = true;
                break;
            }
        if (!dom) kept.push_back(std::move(c));
    }
    // LP filter against convex combinations (smallest-first removal)
    bool removed = true;
    while (removed && kept.size() > 1) {
        removed = false;
        std::size_t drop = kept.size();
        for (std::size_t i = kept.size(); i-- > 0;) { // ascending lexicographic = reverse of sort
            std::vector<RateTriple> others;
            for (std::size_t j = 0; j < kept.size(); ++j)
                if (j != i) others.push_back(kept[j].rate);
            if (detail::dominated_by_hull(others, kept[i].rate, kEntryTol)) drop = i;
        }
        if (drop < kept.size()) {
            kept.erase(kept.begin() + drop);
            removed = true;
        }
    }
    RegionFrontier fr;
    if (kept.empty()) {
        fr.points.push_back({0.0, 0.0, 0.0});
        fr.provenance.push_back(AuxChannelSet::all_constant(cx3));
    } else {
        for (auto& c : kept) {
            fr.points.push_back(c.rate);
            fr.provenance.push_back(std::move(c.aux));
        }
    }
    return fr;
}

// ---------------------------------------------------------------------------
// Special-case capacity detection on the twelve distinct source chains.

enum class CorollaryCase {
    Cor1, Cor1Mirror, Cor2, Cor2Mirror,
    Cor3, Cor3Mirror, Cor4, Cor4Mirror,
    AllZero, AllZeroMirror, Cor5, Cor5Mirror
};

struct CorollaryReport {
    CorollaryCase which;
    std::string label;             // e.g. "Corollary 1"
    std::array<Var, 4> chain;
    bool tight;                    // capacity (true) vs inner bound only
    bool closed_form;              // capacity is a single rate triple
    RateTriple capacity;           // valid when closed_form
    std::optional<RegionFrontier> frontier; // auxiliary-parameterized cases
};

inline std::optional<CorollaryReport> corollary_capacity(const JointPmf4& pmf, double tol,
                                                         const SearchConfig& search_cfg = {}) {
    const ProbTable& t = pmf.table();
    auto i_cond = [&](Var a, Var b, Var c) {
        return conditional_mutual_information(t, {std::size_t(a)}, {std::size_t(b)}, {std::size_t(c)});
    };
    struct Entry {
        CorollaryCase which;
        const char* label;
        std::array<Var, 4> chain;
    };
    static const Entry entries[] = {
        {CorollaryCase::Cor1, "Corollary 1", {X3, X1, X4, X2}},
        {CorollaryCase::Cor1Mirror, "Corollary 1 (terminals 1 and 2 swapped)", {X3, X2, X4, X1}},
        {CorollaryCase::Cor2, "Corollary 2", {X1, X3, X4, X2}},
        {CorollaryCase::Cor2Mirror, "Corollary 2 (terminals 1 and 2 swapped)", {X2, X3, X4, X1}},
        {CorollaryCase::Cor3, "Corollary 3", {X3, X1, X2, X4}},
        {CorollaryCase::Cor3Mirror, "Corollary 3 (terminals 1 and 2 swapped)", {X3, X2, X1, X4}},
        {CorollaryCase::Cor4, "Corollary 4", {X2, X1, X3, X4}},
        {CorollaryCase::Cor4Mirror, "Corollary 4 (terminals 1 and 2 swapped)", {X1, X2, X3, X4}},
        {CorollaryCase::AllZero, "All-zero chain", {X3, X4, X1, X2}},
        {CorollaryCase::AllZeroMirror, "All-zero chain (terminals 1 and 2 swapped)", {X3, X4, X2, X1}},
        {CorollaryCase::Cor5, "Corollary 5", {X2, X3, X1, X4}},
        {CorollaryCase::Cor5Mirror, "Corollary 5 (terminals 1 and 2 swapped)", {X1, X3, X2, X4}},
    };
    for (const auto& e : entries) {
        if (!is_markov_chain(pmf, e.chain, tol)) continue;
        CorollaryReport rep;
        rep.which = e.which;
        rep.label = e.label;
        rep.chain = e.chain;
        switch (e.which) {
            case CorollaryCase::Cor1:
            case CorollaryCase::Cor2:
                rep.tight = true;
                rep.closed_form = true;
                rep.capacity = RateTriple::clamped(0.0, i_cond(X3, X1, X4), 0.0);
                break;
            case CorollaryCase::Cor1Mirror:
            case CorollaryCase::Cor2Mirror:
                rep.tight = true;
                rep.closed_form = true;
                rep.capacity = RateTriple::clamped(0.0, 0.0, i_cond(X3, X2, X4));
                break;
            case CorollaryCase::AllZero:
            case CorollaryCase::AllZeroMirror:
                rep.tight = true;
                rep.closed_form = true;
                rep.capacity = {0.0, 0.0, 0.0};
                break;
            case CorollaryCase::Cor3:
            case CorollaryCase::Cor3Mirror:
            case CorollaryCase::Cor4:
            case CorollaryCase::Cor4Mirror:
                rep.tight = true;
                rep.closed_form = false;
                rep.frontier = search_inner_region(pmf, search_cfg);
                break;
            case CorollaryCase::Cor5:
            case CorollaryCase::Cor5Mirror:
                rep.tight = false; // achievable, tight only under extra conditions
                rep.closed_form = false;
                rep.frontier = search_inner_region(pmf, search_cfg);
                break;
        }
        return rep;
    }
    return std::nullopt;
}

} // namespace skpk
