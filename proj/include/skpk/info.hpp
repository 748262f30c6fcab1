#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "skpk/errors.hpp"
#include "skpk/tensor.hpp"

namespace skpk {

// All information quantities are in bits (log base 2).
inline constexpr double kClampTol = 1e-9;

inline double log2_safe(double x) { return std::log2(x); }

inline double clamp_tiny_negative(double v, const char* what) {
    if (v < 0.0) {
        if (v < -kClampTol) throw Error(std::string(what) + ": negative beyond tolerance");
        return 0.0;
    }
    return v;
}

// H(p) = -sum p log2 p, with 0 log 0 = 0. Input must be a probability table.
inline double entropy(std::span<const double> probs) {
    double sum = 0.0, h = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw NegativeProbability("entropy: negative entry");
        sum += p;
        if (p > 0.0) h -= p * std::log2(p);
    }
    if (std::abs(sum - 1.0) > kSumTol) throw NotNormalized("entropy: input not normalized");
    return clamp_tiny_negative(h, "entropy");
}

inline double entropy(const ProbTable& t) { return entropy(std::span<const double>(t.probs())); }

namespace detail {
inline void check_partition(const ProbTable& joint, std::span<const std::vector<std::size_t>> groups) {
    std::vector<bool> seen(joint.rank(), false);
    for (const auto& g : groups) {
        if (g.empty()) throw BadPartition("empty axis group");
        for (std::size_t a : g) {
            if (a >= joint.rank()) throw BadPartition("axis out of range");
            if (seen[a]) throw BadPartition("axis groups overlap");
            seen[a] = true;
        }
    }
}
} // namespace detail

// I(A;B) = H(A) + H(B) - H(A,B), clamped at zero.
inline double mutual_information(const ProbTable& joint,
                                 const std::vector<std::size_t>& a,
                                 const std::vector<std::size_t>& b) {
    const std::vector<std::size_t> groups[] = {a, b};
    detail::check_partition(joint, groups);
    std::vector<std::size_t> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    double v = entropy(joint.marginal(a)) + entropy(joint.marginal(b)) - entropy(joint.marginal(ab));
    return clamp_tiny_negative(v, "mutual_information");
}

// I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C), clamped at zero.
// Zero-probability conditioning cells contribute nothing by construction.
inline double conditional_mutual_information(const ProbTable& joint,
                                             const std::vector<std::size_t>& a,
                                             const std::vector<std::size_t>& b,
                                             const std::vector<std::size_t>& c) {
    if (c.empty()) return mutual_information(joint, a, b);
    const std::vector<std::size_t> groups[] = {a, b, c};
    detail::check_partition(joint, groups);
    auto cat = [](std::vector<std::size_t> x, const std::vector<std::size_t>& y) {
        x.insert(x.end(), y.begin(), y.end());
        return x;
    };
    double v = entropy(joint.marginal(cat(a, c))) + entropy(joint.marginal(cat(b, c))) -
               entropy(joint.marginal(cat(cat(a, b), c))) - entropy(joint.marginal(c));
    return clamp_tiny_negative(v, "conditional_mutual_information");
}

// Plug-in mutual information of the empirical joint of paired samples.
inline double empirical_mi(std::span<const std::uint8_t> xs, std::span<const std::uint8_t> ys,
                           std::size_t card_x, std::size_t card_y) {
    if (xs.empty() || xs.size() != ys.size()) throw EmptySample("empirical_mi: need paired samples");
    std::vector<double> counts(card_x * card_y, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] >= card_x || ys[i] >= card_y) throw BadPartition("empirical_mi: symbol out of alphabet");
        counts[xs[i] * card_y + ys[i]] += 1.0;
    }
    double n = double(xs.size());
    for (double& c : counts) c /= n;
    ProbTable joint({card_x, card_y}, std::move(counts));
    return mutual_information(joint, {0}, {1});
}

} // namespace skpk
