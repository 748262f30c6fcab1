#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "skpk/info.hpp"
#include "skpk/pmf.hpp"
#include "skpk/region.hpp"
#include "skpk/rng.hpp"

namespace skpk {

struct CodecConfig {
    double eps1 = 0.05;
    double typ_eps = 0.05;
    double typ_z = 2.0;      // CLT widening of the per-cell window
    double backoff = 0.25;   // multiplicative key-rate backoff from the corner
    std::size_t codeword_budget = 64'000'000;   // stored symbols across layers
    std::size_t enumeration_budget = 1'000'000; // posterior tuples per column set
};

// Realized per-layer exponents: log2(count)/n for rows, columns,
// randomization bins. They sum to the layer's total codeword exponent.
struct LayerRates {
    double r = 0.0, r_pub = 0.0, r_rand = 0.0;
};

struct LayerCounts {
    std::size_t rows = 1, cols = 1, rand = 1;
    std::size_t total() const { return rows * cols * rand; }
};

struct KeyTriple {
    std::size_t k0 = 0, k1 = 0, k2 = 0;
    bool operator==(const KeyTriple&) const = default;
};

struct PublicMessage {
    std::array<std::size_t, 3> cols = {0, 0, 0};
    std::size_t q_index = 0;
};

// Robust typicality on empirical joint types. Positive cells get window
// typ_eps*p + z*sqrt(p(1-p)/n); zero cells must be exactly empty. The
// relative term keeps low-mass cells tight at small n (which is what makes
// column decoding discriminative); the CLT term keeps high-mass cells from
// rejecting ordinary sampling fluctuation.
template <class CellFn>
bool typical_seq(const std::vector<double>& target, std::size_t n, double typ_eps, double z,
                 CellFn cell, std::vector<std::size_t>& count_buf) {
    count_buf.assign(target.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = cell(i);
        if (target[c] == 0.0) return false;
        ++count_buf[c];
    }
    for (std::size_t c = 0; c < target.size(); ++c) {
        double p = target[c];
        if (p == 0.0) continue;
        double w = typ_eps * p + z * std::sqrt(p * (1.0 - p) / double(n));
        if (std::abs(double(count_buf[c]) / double(n) - p) > w) return false;
    }
    return true;
}

// Layered random codebook with (row=key, column=public, randomization)
// bin tags per layer. Codeword index j maps to row j % K, randomization
// (j / K) % D, column j / (K*D).
class LayeredCodebook {
  public:
    std::size_t n = 0;
    std::uint64_t seed = 0;
    CodecConfig cfg;
    std::size_t card_u0 = 1, card_u1 = 1, card_u2 = 1, card_q = 1;
    std::array<std::size_t, 4> source_cards{};

    LayerCounts counts0, counts1, counts2;
    LayerRates rates0, rates1, rates2;

    // layer0: counts0.total() codewords of length n.
    // layer1/2: one block of counts{1,2}.total() codewords per layer-0 parent.
    std::vector<std::uint8_t> layer0, layer1, layer2;
    std::vector<std::uint8_t> q_codewords; // experimental unless |Q| == 1
    std::size_t q_count = 1;

    // typicality targets (flat tables, row-major with the listed axis order)
    std::vector<double> t_x3;      // (x3)
    std::vector<double> t_u0x3;    // (u0, x3)
    std::vector<double> t_u0u1x3;  // (u0, u1, x3)
    std::vector<double> t_u0u2x3;
    std::vector<double> t_u0x1;    // (u0, x1)
    std::vector<double> t_u0u1x1;  // (u0, u1, x1)
    std::vector<double> t_u0x2;
    std::vector<double> t_u0u2x2;
    std::vector<double> t_qu;      // (q, u0, u1, u2), only when |Q| > 1

    // likelihood rows indexed by (u0*card_u1 + u1)*card_u2 + u2
    std::vector<double> like_x4, like_x1, like_x2;

    const std::uint8_t* l0(std::size_t j) const { return layer0.data() + j * n; }
    const std::uint8_t* l1(std::size_t parent, std::size_t j) const {
        return layer1.data() + (parent * counts1.total() + j) * n;
    }
    const std::uint8_t* l2(std::size_t parent, std::size_t j) const {
        return layer2.data() + (parent * counts2.total() + j) * n;
    }

    static std::size_t tag_row(std::size_t j, const LayerCounts& c) { return j % c.rows; }
    static std::size_t tag_rand(std::size_t j, const LayerCounts& c) { return (j / c.rows) % c.rand; }
    static std::size_t tag_col(std::size_t j, const LayerCounts& c) { return j / (c.rows * c.rand); }
    static std::size_t from_tags(std::size_t row, std::size_t rand, std::size_t col,
                                 const LayerCounts& c) {
        return (col * c.rand + rand) * c.rows + row;
    }
};

namespace detail {

inline double cond_entropy(const ProbTable& t, std::vector<std::size_t> vars,
                           const std::vector<std::size_t>& given) {
    if (given.empty()) return entropy(t.marginal(vars));
    vars.insert(vars.end(), given.begin(), given.end());
    return entropy(t.marginal(vars)) - entropy(t.marginal(given));
}

inline LayerCounts layer_counts(std::size_t n, double total_exp, double key_rate, double rand_rate,
                                std::size_t card) {
    LayerCounts c;
    if (card <= 1) return c; // single constant codeword
    double total_d = std::ceil(std::exp2(double(n) * total_exp));
    if (!std::isfinite(total_d) || total_d < 1.0)
        throw DegenerateRates("layer codeword count is not a positive finite integer");
    if (total_d > 4e18) throw BudgetExceeded("layer codeword count overflows");
    std::size_t total = std::size_t(total_d);
    c.rows = std::max<std::size_t>(1, std::size_t(std::floor(std::exp2(double(n) * key_rate) + 1e-9)));
    c.rand = std::max<std::size_t>(1, std::size_t(std::floor(std::exp2(double(n) * rand_rate) + 1e-9)));
    c.cols = (total + c.rows * c.rand - 1) / (c.rows * c.rand);
    return c;
}

inline std::vector<double> cond_rows(const ProbTable& t, const std::vector<std::size_t>& target,
                                     const std::vector<std::size_t>& given) {
    return t.conditional(target, given).probs;
}

} // namespace detail

inline LayeredCodebook build_codebook(const JointPmf4& pmf, const AuxChannelSet& aux, std::size_t n,
                                      const CodecConfig& cfg, std::uint64_t seed) {
    if (n == 0) throw Error("build_codebook: n must be >= 1");
    ExtendedPmf ext = extend_with_aux(pmf, aux);
    const ProbTable& e = ext.table();
    using Ax = ExtendedPmf::Axis;
    using detail::cond_entropy;

    LayeredCodebook cb;
    cb.n = n;
    cb.seed = seed;
    cb.cfg = cfg;
    cb.card_u0 = aux.card_u0;
    cb.card_u1 = aux.card_u1;
    cb.card_u2 = aux.card_u2;
    cb.card_q = aux.card_q;
    cb.source_cards = pmf.alphabet_sizes();

    RateTriple corner = inner_bound_point(pmf, aux);
    double key0 = (1.0 - cfg.backoff) * corner.r0;
    double key1 = (1.0 - cfg.backoff) * corner.r1;
    double key2 = (1.0 - cfg.backoff) * corner.r2;
    auto cmi = [&](std::vector<std::size_t> a, std::vector<std::size_t> b,
                   std::vector<std::size_t> c) {
        return conditional_mutual_information(e, a, b, c);
    };
    double rand0 = cmi({Ax::U0}, {Ax::EX4}, {Ax::Q});
    double rand1 = std::max(cmi({Ax::U1}, {Ax::EX2, Ax::U2}, {Ax::U0, Ax::Q}),
                            cmi({Ax::U1}, {Ax::EX4, Ax::U2}, {Ax::U0, Ax::Q}));
    double rand2 = std::max(cmi({Ax::U2}, {Ax::EX1, Ax::U1}, {Ax::U0, Ax::Q}),
                            cmi({Ax::U2}, {Ax::EX4, Ax::U1}, {Ax::U0, Ax::Q}));
    cb.counts0 = detail::layer_counts(n, cond_entropy(e, {Ax::U0}, {Ax::Q}) + cfg.eps1, key0,
                                      rand0, aux.card_u0);
    cb.counts1 = detail::layer_counts(n, cond_entropy(e, {Ax::U1}, {Ax::U0, Ax::Q}) + cfg.eps1,
                                      key1, rand1, aux.card_u1);
    cb.counts2 = detail::layer_counts(n, cond_entropy(e, {Ax::U2}, {Ax::U0, Ax::Q}) + cfg.eps1,
                                      key2, rand2, aux.card_u2);
    auto realized = [&](const LayerCounts& c) {
        return LayerRates{std::log2(double(c.rows)) / double(n),
                          std::log2(double(c.cols)) / double(n),
                          std::log2(double(c.rand)) / double(n)};
    };
    cb.rates0 = realized(cb.counts0);
    cb.rates1 = realized(cb.counts1);
    cb.rates2 = realized(cb.counts2);

    std::size_t t0 = cb.counts0.total(), t1 = cb.counts1.total(), t2 = cb.counts2.total();
    if (t0 > cfg.codeword_budget / n || t1 > cfg.codeword_budget / n ||
        t0 * (t1 + t2 + 1) > cfg.codeword_budget / n)
        throw BudgetExceeded("codebook storage exceeds configured budget");

    // typicality targets and likelihoods from the extended joint
    auto flat = [&](std::vector<std::size_t> keep) { return e.marginal(keep).probs(); };
    cb.t_x3 = flat({Ax::EX3});
    cb.t_u0x3 = flat({Ax::U0, Ax::EX3});
    cb.t_u0u1x3 = flat({Ax::U0, Ax::U1, Ax::EX3});
    cb.t_u0u2x3 = flat({Ax::U0, Ax::U2, Ax::EX3});
    cb.t_u0x1 = flat({Ax::U0, Ax::EX1});
    cb.t_u0u1x1 = flat({Ax::U0, Ax::U1, Ax::EX1});
    cb.t_u0x2 = flat({Ax::U0, Ax::EX2});
    cb.t_u0u2x2 = flat({Ax::U0, Ax::U2, Ax::EX2});
    cb.like_x4 = detail::cond_rows(e, {Ax::EX4}, {Ax::U0, Ax::U1, Ax::U2});
    cb.like_x1 = detail::cond_rows(e, {Ax::EX1}, {Ax::U0, Ax::U1, Ax::U2});
    cb.like_x2 = detail::cond_rows(e, {Ax::EX2}, {Ax::U0, Ax::U1, Ax::U2});

    // generation distributions
    std::vector<double> p_u0 = flat({Ax::U0});
    std::vector<double> p_u1_g0 = detail::cond_rows(e, {Ax::U1}, {Ax::U0});
    std::vector<double> p_u2_g0 = detail::cond_rows(e, {Ax::U2}, {Ax::U0});

    Rng gen(seed);
    cb.layer0.resize(t0 * n);
    for (std::size_t j = 0; j < t0; ++j)
        for (std::size_t i = 0; i < n; ++i)
            cb.layer0[j * n + i] = std::uint8_t(gen.sample(std::span(p_u0)));
    cb.layer1.resize(t0 * t1 * n);
    cb.layer2.resize(t0 * t2 * n);
    for (std::size_t parent = 0; parent < t0; ++parent) {
        const std::uint8_t* u0 = cb.l0(parent);
        for (std::size_t j = 0; j < t1; ++j)
            for (std::size_t i = 0; i < n; ++i)
                cb.layer1[(parent * t1 + j) * n + i] = std::uint8_t(gen.sample(
                    std::span(p_u1_g0).subspan(u0[i] * aux.card_u1, aux.card_u1)));
        for (std::size_t j = 0; j < t2; ++j)
            for (std::size_t i = 0; i < n; ++i)
                cb.layer2[(parent * t2 + j) * n + i] = std::uint8_t(gen.sample(
                    std::span(p_u2_g0).subspan(u0[i] * aux.card_u2, aux.card_u2)));
    }
    if (aux.card_q > 1) {
        cb.t_qu = flat({Ax::Q, Ax::U0, Ax::U1, Ax::U2});
        double iq = mutual_information(e, {Ax::Q}, {Ax::U0, Ax::U1, Ax::U2});
        cb.q_count = std::size_t(std::ceil(std::exp2(double(n) * (iq + cfg.eps1))));
        std::vector<double> p_q = flat({Ax::Q});
        cb.q_codewords.resize(cb.q_count * n);
        for (std::size_t j = 0; j < cb.q_count; ++j)
            for (std::size_t i = 0; i < n; ++i)
                cb.q_codewords[j * n + i] = std::uint8_t(gen.sample(std::span(p_q)));
    }
    return cb;
}

struct EncodeResult {
    KeyTriple keys;
    PublicMessage msg;
    std::array<std::size_t, 3> indices{}; // selected codeword indices per layer
};

// Typicality encoding at Terminal 3. nullopt = encoder failure (atypical
// observation or an empty typical-set lookup).
inline std::optional<EncodeResult> encode(const LayeredCodebook& cb,
                                          std::span<const std::uint8_t> x3_seq,
                                          std::uint64_t call_seed) {
    if (x3_seq.size() != cb.n) throw ShapeMismatch("encode: sequence length");
    const std::size_t n = cb.n;
    const double te = cb.cfg.typ_eps, z = cb.cfg.typ_z;
    std::vector<std::size_t> buf;
    if (!typical_seq(cb.t_x3, n, te, z, [&](std::size_t i) { return std::size_t(x3_seq[i]); }, buf))
        return std::nullopt;
    Rng rng(call_seed);
    std::size_t cx3 = cb.source_cards[X3];

    std::vector<std::size_t> cands;
    for (std::size_t j = 0; j < cb.counts0.total(); ++j) {
        const std::uint8_t* u0 = cb.l0(j);
        if (typical_seq(cb.t_u0x3, n, te, z,
                        [&](std::size_t i) { return u0[i] * cx3 + x3_seq[i]; }, buf))
            cands.push_back(j);
    }
    if (cands.empty()) return std::nullopt;
    std::size_t j0 = cands[rng.next_below(cands.size())];
    const std::uint8_t* u0 = cb.l0(j0);

    auto pick_layer = [&](const std::vector<double>& target, std::size_t card,
                          const std::vector<std::uint8_t>& store, std::size_t total)
        -> std::optional<std::size_t> {
        cands.clear();
        const std::uint8_t* base = store.data() + j0 * total * n;
        for (std::size_t j = 0; j < total; ++j) {
            const std::uint8_t* u = base + j * n;
            if (typical_seq(target, n, te, z,
                            [&](std::size_t i) { return (u0[i] * card + u[i]) * cx3 + x3_seq[i]; },
                            buf))
                cands.push_back(j);
        }
        if (cands.empty()) return std::nullopt;
        return cands[rng.next_below(cands.size())];
    };
    auto j1 = pick_layer(cb.t_u0u1x3, cb.card_u1, cb.layer1, cb.counts1.total());
    if (!j1) return std::nullopt;
    auto j2 = pick_layer(cb.t_u0u2x3, cb.card_u2, cb.layer2, cb.counts2.total());
    if (!j2) return std::nullopt;

    EncodeResult r;
    r.indices = {j0, *j1, *j2};
    r.keys = {LayeredCodebook::tag_row(j0, cb.counts0), LayeredCodebook::tag_row(*j1, cb.counts1),
              LayeredCodebook::tag_row(*j2, cb.counts2)};
    r.msg.cols = {LayeredCodebook::tag_col(j0, cb.counts0),
                  LayeredCodebook::tag_col(*j1, cb.counts1),
                  LayeredCodebook::tag_col(*j2, cb.counts2)};
    r.msg.q_index = 0;
    if (cb.card_q > 1) {
        const std::uint8_t* u1 = cb.l1(j0, *j1);
        const std::uint8_t* u2 = cb.l2(j0, *j2);
        for (std::size_t j = 0; j < cb.q_count; ++j) {
            const std::uint8_t* q = cb.q_codewords.data() + j * n;
            auto cell = [&](std::size_t i) {
                return ((q[i] * cb.card_u0 + u0[i]) * cb.card_u1 + u1[i]) * cb.card_u2 + u2[i];
            };
            if (typical_seq(cb.t_qu, n, te, z, cell, buf)) {
                r.msg.q_index = j;
                break;
            }
        }
    }
    return r;
}

namespace detail {

// Unique jointly typical candidate within an announced column; ambiguity
// or no candidate reports failure via nullopt.
template <class TypFn>
inline std::optional<std::size_t> unique_in_column(std::size_t col, const LayerCounts& c,
                                                   TypFn&& passes) {
    std::optional<std::size_t> hit;
    for (std::size_t d = 0; d < c.rand; ++d)
        for (std::size_t k = 0; k < c.rows; ++k) {
            std::size_t j = LayeredCodebook::from_tags(k, d, col, c);
            if (passes(j)) {
                if (hit) return std::nullopt;
                hit = j;
            }
        }
    return hit;
}

} // namespace detail

namespace detail {

// stage 0 of decoding: the unique layer-0 codeword in the announced column
// jointly typical with the observer's side sequence
inline std::optional<std::size_t> decode_stage0(const LayeredCodebook& cb,
                                                std::span<const std::uint8_t> side_seq,
                                                const PublicMessage& msg, Var side,
                                                const std::vector<double>& target) {
    const std::size_t n = cb.n;
    std::vector<std::size_t> buf;
    std::size_t card = cb.source_cards[side];
    return unique_in_column(msg.cols[0], cb.counts0, [&](std::size_t j) {
        const std::uint8_t* u0 = cb.l0(j);
        return typical_seq(target, n, cb.cfg.typ_eps, cb.cfg.typ_z,
                           [&](std::size_t i) { return u0[i] * card + side_seq[i]; }, buf);
    });
}

} // namespace detail

// common-key estimate alone (layer 0 of the two-stage decoder)
inline std::optional<std::size_t> decode_common_t1(const LayeredCodebook& cb,
                                                   std::span<const std::uint8_t> x1_seq,
                                                   const PublicMessage& msg) {
    if (x1_seq.size() != cb.n) throw ShapeMismatch("decode_common_t1: sequence length");
    auto j0 = detail::decode_stage0(cb, x1_seq, msg, X1, cb.t_u0x1);
    if (!j0) return std::nullopt;
    return LayeredCodebook::tag_row(*j0, cb.counts0);
}

inline std::optional<std::size_t> decode_common_t2(const LayeredCodebook& cb,
                                                   std::span<const std::uint8_t> x2_seq,
                                                   const PublicMessage& msg) {
    if (x2_seq.size() != cb.n) throw ShapeMismatch("decode_common_t2: sequence length");
    auto j0 = detail::decode_stage0(cb, x2_seq, msg, X2, cb.t_u0x2);
    if (!j0) return std::nullopt;
    return LayeredCodebook::tag_row(*j0, cb.counts0);
}

inline std::optional<std::pair<std::size_t, std::size_t>> decode_t1(
    const LayeredCodebook& cb, std::span<const std::uint8_t> x1_seq, const PublicMessage& msg) {
    if (x1_seq.size() != cb.n) throw ShapeMismatch("decode_t1: sequence length");
    const std::size_t n = cb.n;
    const double te = cb.cfg.typ_eps, z = cb.cfg.typ_z;
    std::vector<std::size_t> buf;
    std::size_t cx1 = cb.source_cards[X1];
    auto j0 = detail::decode_stage0(cb, x1_seq, msg, X1, cb.t_u0x1);
    if (!j0) return std::nullopt;
    const std::uint8_t* u0 = cb.l0(*j0);
    auto j1 = detail::unique_in_column(msg.cols[1], cb.counts1, [&](std::size_t j) {
        const std::uint8_t* u1 = cb.l1(*j0, j);
        return typical_seq(cb.t_u0u1x1, n, te, z,
                           [&](std::size_t i) { return (u0[i] * cb.card_u1 + u1[i]) * cx1 + x1_seq[i]; },
                           buf);
    });
    if (!j1) return std::nullopt;
    return std::make_pair(LayeredCodebook::tag_row(*j0, cb.counts0),
                          LayeredCodebook::tag_row(*j1, cb.counts1));
}

inline std::optional<std::pair<std::size_t, std::size_t>> decode_t2(
    const LayeredCodebook& cb, std::span<const std::uint8_t> x2_seq, const PublicMessage& msg) {
    if (x2_seq.size() != cb.n) throw ShapeMismatch("decode_t2: sequence length");
    const std::size_t n = cb.n;
    const double te = cb.cfg.typ_eps, z = cb.cfg.typ_z;
    std::vector<std::size_t> buf;
    std::size_t cx2 = cb.source_cards[X2];
    auto j0 = detail::decode_stage0(cb, x2_seq, msg, X2, cb.t_u0x2);
    if (!j0) return std::nullopt;
    const std::uint8_t* u0 = cb.l0(*j0);
    auto j2 = detail::unique_in_column(msg.cols[2], cb.counts2, [&](std::size_t j) {
        const std::uint8_t* u2 = cb.l2(*j0, j);
        return typical_seq(cb.t_u0u2x2, n, te, z,
                           [&](std::size_t i) { return (u0[i] * cb.card_u2 + u2[i]) * cx2 + x2_seq[i]; },
                           buf);
    });
    if (!j2) return std::nullopt;
    return std::make_pair(LayeredCodebook::tag_row(*j0, cb.counts0),
                          LayeredCodebook::tag_row(*j2, cb.counts2));
}

struct KeyPosterior {
    std::size_t k0_range = 1, k1_range = 1, k2_range = 1;
    std::vector<double> p; // flat (k0 * k1_range + k1) * k2_range + k2

    double entropy_bits() const {
        double h = 0.0;
        for (double v : p)
            if (v > 0.0) h -= v * std::log2(v);
        return h;
    }
    std::vector<double> marginal_k(std::size_t which) const {
        std::size_t ranges[3] = {k0_range, k1_range, k2_range};
        std::vector<double> m(ranges[which], 0.0);
        for (std::size_t f = 0; f < p.size(); ++f) {
            std::size_t idx[3] = {f / (k1_range * k2_range), (f / k2_range) % k1_range,
                                  f % k2_range};
            m[idx[which]] += p[f];
        }
        return m;
    }
};

namespace detail {

// Log-likelihood of an observed sequence under symbolwise p(obs|u0,u1,u2).
// Returns -inf when some symbol has zero likelihood.
inline double log_weight(const LayeredCodebook& cb, const std::vector<double>& like,
                         std::size_t obs_card, std::span<const std::uint8_t> obs,
                         const std::uint8_t* u0, const std::uint8_t* u1, const std::uint8_t* u2) {
    double lw = 0.0;
    for (std::size_t i = 0; i < cb.n; ++i) {
        std::size_t row = (u0[i] * cb.card_u1 + u1[i]) * cb.card_u2 + u2[i];
        double v = like[row * obs_card + obs[i]];
        if (v <= 0.0) return -std::numeric_limits<double>::infinity();
        lw += std::log(v);
    }
    return lw;
}

} // namespace detail

// Exact Bayes posterior over key rows from Terminal 4's viewpoint: every
// codeword tuple consistent with the announced columns, weighted by the
// likelihood of x4 under the extended joint.
inline KeyPosterior eve_posterior(const LayeredCodebook& cb, std::span<const std::uint8_t> x4_seq,
                                  const PublicMessage& msg) {
    if (x4_seq.size() != cb.n) throw ShapeMismatch("eve_posterior: sequence length");
    const LayerCounts &c0 = cb.counts0, &c1 = cb.counts1, &c2 = cb.counts2;
    std::size_t combos = (c0.rows * c0.rand) * (c1.rows * c1.rand) * (c2.rows * c2.rand);
    if (combos > cb.cfg.enumeration_budget)
        throw BudgetExceeded("posterior enumeration exceeds budget");
    std::size_t cx4 = cb.source_cards[X4];

    KeyPosterior post;
    post.k0_range = c0.rows;
    post.k1_range = c1.rows;
    post.k2_range = c2.rows;
    std::vector<double> logw(combos, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> key_of(combos);
    double max_lw = -std::numeric_limits<double>::infinity();
    std::size_t t = 0;
    for (std::size_t d0 = 0; d0 < c0.rand; ++d0)
        for (std::size_t k0 = 0; k0 < c0.rows; ++k0) {
            std::size_t j0 = LayeredCodebook::from_tags(k0, d0, msg.cols[0], c0);
            const std::uint8_t* u0 = cb.l0(j0);
            for (std::size_t d1 = 0; d1 < c1.rand; ++d1)
                for (std::size_t k1 = 0; k1 < c1.rows; ++k1) {
                    std::size_t j1 = LayeredCodebook::from_tags(k1, d1, msg.cols[1], c1);
                    const std::uint8_t* u1 = cb.l1(j0, j1);
                    for (std::size_t d2 = 0; d2 < c2.rand; ++d2)
                        for (std::size_t k2 = 0; k2 < c2.rows; ++k2, ++t) {
                            std::size_t j2 = LayeredCodebook::from_tags(
                                k2, d2, msg.cols[2], c2);
                            double lw = detail::log_weight(cb, cb.like_x4, cx4, x4_seq, u0, u1,
                                                           cb.l2(j0, j2));
                            logw[t] = lw;
                            key_of[t] = (k0 * c1.rows + k1) * c2.rows + k2;
                            max_lw = std::max(max_lw, lw);
                        }
                }
        }
    if (!std::isfinite(max_lw)) throw ZeroEvidence("all posterior weights vanish");
    post.p.assign(c0.rows * c1.rows * c2.rows, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < combos; ++i) {
        if (!std::isfinite(logw[i])) continue;
        double w = std::exp(logw[i] - max_lw);
        post.p[key_of[i]] += w;
        sum += w;
    }
    for (double& v : post.p) v /= sum;
    return post;
}

enum class Observer { T1, T2 };

// Posterior over the other terminal's private key given the observer's own
// source block, the public message, and its decoded keys.
inline std::vector<double> cross_posterior(const LayeredCodebook& cb, Observer who,
                                           std::span<const std::uint8_t> side_seq,
                                           const PublicMessage& msg, const KeyTriple& known) {
    if (side_seq.size() != cb.n) throw ShapeMismatch("cross_posterior: sequence length");
    const LayerCounts &c0 = cb.counts0, &c1 = cb.counts1, &c2 = cb.counts2;
    const bool t1 = (who == Observer::T1);
    // known rows: k0 plus own private row; the other layer's rows stay free
    std::size_t combos = c0.rand * (t1 ? c1.rand : c2.rand) *
                         (t1 ? c2.rows * c2.rand : c1.rows * c1.rand);
    if (combos > cb.cfg.enumeration_budget)
        throw BudgetExceeded("posterior enumeration exceeds budget");
    const std::vector<double>& like = t1 ? cb.like_x1 : cb.like_x2;
    std::size_t obs_card = cb.source_cards[t1 ? X1 : X2];
    std::size_t free_rows = t1 ? c2.rows : c1.rows;

    std::vector<double> acc(free_rows, 0.0);
    std::vector<double> logw;
    std::vector<std::size_t> row_of;
    logw.reserve(combos);
    row_of.reserve(combos);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::size_t d0 = 0; d0 < c0.rand; ++d0) {
        std::size_t j0 = LayeredCodebook::from_tags(known.k0, d0, msg.cols[0], c0);
        const std::uint8_t* u0 = cb.l0(j0);
        const LayerCounts& own = t1 ? c1 : c2;
        std::size_t own_key = t1 ? known.k1 : known.k2;
        for (std::size_t down = 0; down < own.rand; ++down) {
            std::size_t jown = LayeredCodebook::from_tags(own_key, down,
                                                          msg.cols[t1 ? 1 : 2], own);
            const std::uint8_t* uown = t1 ? cb.l1(j0, jown) : cb.l2(j0, jown);
            const LayerCounts& other = t1 ? c2 : c1;
            for (std::size_t do2 = 0; do2 < other.rand; ++do2)
                for (std::size_t ko = 0; ko < other.rows; ++ko) {
                    std::size_t jo = LayeredCodebook::from_tags(ko, do2,
                                                                msg.cols[t1 ? 2 : 1], other);
                    const std::uint8_t* uo = t1 ? cb.l2(j0, jo) : cb.l1(j0, jo);
                    const std::uint8_t* u1 = t1 ? uown : uo;
                    const std::uint8_t* u2 = t1 ? uo : uown;
                    double lw = detail::log_weight(cb, like, obs_card, side_seq, u0, u1, u2);
                    logw.push_back(lw);
                    row_of.push_back(ko);
                    max_lw = std::max(max_lw, lw);
                }
        }
    }
    if (!std::isfinite(max_lw)) throw ZeroEvidence("all posterior weights vanish");
    double sum = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        if (!std::isfinite(logw[i])) continue;
        double w = std::exp(logw[i] - max_lw);
        acc[row_of[i]] += w;
        sum += w;
    }
    for (double& v : acc) v /= sum;
    return acc;
}

struct SimulationReport {
    std::size_t n = 0;
    std::size_t trials = 0;
    double err_common = 0.0, err_pk1 = 0.0, err_pk2 = 0.0;
    double leak_eve_per_symbol = 0.0;
    double leak_cross_12 = 0.0, leak_cross_21 = 0.0;
    std::array<double, 3> uniformity_gap = {0.0, 0.0, 0.0};
    double encoder_failure_rate = 0.0;
    std::array<std::size_t, 3> key_ranges = {1, 1, 1};
    bool operator==(const SimulationReport&) const = default;
};

inline double entropy_of_counts(const std::vector<double>& counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / total) * std::log2(c / total);
    return h;
}

// Monte Carlo pass over one fixed codebook: encode/decode/posterior per
// trial, errors and equivocation-based leakage aggregated. Deterministic in
// the seed; encoder failures are excluded from error denominators.
inline SimulationReport run_trials(const JointPmf4& pmf, const AuxChannelSet& aux, std::size_t n,
                                   const CodecConfig& cfg, std::size_t trials, std::uint64_t seed) {
    LayeredCodebook cb = build_codebook(pmf, aux, n, cfg, seed);
    SimulationReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.key_ranges = {cb.counts0.rows, cb.counts1.rows, cb.counts2.rows};

    std::size_t enc_fail = 0, ok = 0;
    std::size_t n_err_common = 0, n_err1 = 0, n_err2 = 0;
    double eve_h_sum = 0.0;
    double cross21_h_sum = 0.0, cross12_h_sum = 0.0;
    std::size_t cross21_cnt = 0, cross12_cnt = 0;
    std::vector<double> hist_joint(cb.counts0.rows * cb.counts1.rows * cb.counts2.rows, 0.0);
    std::vector<double> hist0(cb.counts0.rows, 0.0), hist1(cb.counts1.rows, 0.0),
        hist2(cb.counts2.rows, 0.0);

    for (std::size_t t = 0; t < trials; ++t) {
        SourceBlock blk = sample_iid(pmf, n, Rng::derive(seed, 2 * t + 1));
        auto enc = encode(cb, blk.x3, Rng::derive(seed, 2 * t + 2));
        if (!enc) {
            ++enc_fail;
            continue;
        }
        ++ok;
        const KeyTriple& keys = enc->keys;
        hist_joint[(keys.k0 * cb.counts1.rows + keys.k1) * cb.counts2.rows + keys.k2] += 1.0;
        hist0[keys.k0] += 1.0;
        hist1[keys.k1] += 1.0;
        hist2[keys.k2] += 1.0;

        auto c1 = decode_common_t1(cb, blk.x1, enc->msg);
        auto c2 = decode_common_t2(cb, blk.x2, enc->msg);
        auto d1 = decode_t1(cb, blk.x1, enc->msg);
        auto d2 = decode_t2(cb, blk.x2, enc->msg);
        bool common_ok = c1 && c2 && *c1 == keys.k0 && *c2 == keys.k0;
        if (!common_ok) ++n_err_common;
        if (!(d1 && d1->second == keys.k1)) ++n_err1;
        if (!(d2 && d2->second == keys.k2)) ++n_err2;

        eve_h_sum += eve_posterior(cb, blk.x4, enc->msg).entropy_bits();

        if (d1 && d1->first == keys.k0) {
            KeyTriple known = {d1->first, d1->second, 0};
            auto post = cross_posterior(cb, Observer::T1, blk.x1, enc->msg, known);
            double h = 0.0;
            for (double v : post)
                if (v > 0.0) h -= v * std::log2(v);
            cross21_h_sum += h;
            ++cross21_cnt;
        }
        if (d2 && d2->first == keys.k0) {
            KeyTriple known = {d2->first, 0, d2->second};
            auto post = cross_posterior(cb, Observer::T2, blk.x2, enc->msg, known);
            double h = 0.0;
            for (double v : post)
                if (v > 0.0) h -= v * std::log2(v);
            cross12_h_sum += h;
            ++cross12_cnt;
        }
    }
    rep.encoder_failure_rate = trials ? double(enc_fail) / double(trials) : 0.0;
    if (ok > 0) {
        rep.err_common = double(n_err_common) / double(ok);
        rep.err_pk1 = double(n_err1) / double(ok);
        rep.err_pk2 = double(n_err2) / double(ok);
        double h_joint = entropy_of_counts(hist_joint);
        double h0 = entropy_of_counts(hist0), h1 = entropy_of_counts(hist1),
               h2 = entropy_of_counts(hist2);
        rep.leak_eve_per_symbol = std::max(0.0, (h_joint - eve_h_sum / double(ok)) / double(n));
        if (cross21_cnt)
            rep.leak_cross_21 =
                std::max(0.0, (h2 - cross21_h_sum / double(cross21_cnt)) / double(n));
        if (cross12_cnt)
            rep.leak_cross_12 =
                std::max(0.0, (h1 - cross12_h_sum / double(cross12_cnt)) / double(n));
        rep.uniformity_gap = {(std::log2(double(cb.counts0.rows)) - h0) / double(n),
                              (std::log2(double(cb.counts1.rows)) - h1) / double(n),
                              (std::log2(double(cb.counts2.rows)) - h2) / double(n)};
    }
    return rep;
}

} // namespace skpk
