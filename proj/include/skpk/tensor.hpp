#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "skpk/errors.hpp"

namespace skpk {

inline constexpr double kSumTol = 1e-9;       // rejection threshold
inline constexpr double kEntryTol = 1e-12;    // entrywise comparison tolerance

// p(target | given) laid out with axes [given..., target...]; each row
// (fixed given-assignment) is normalized where the event has positive mass.
// Zero-probability rows are flagged in `defined` and left all-zero.
struct Conditional {
    std::vector<std::size_t> dims;  // given..., target...
    std::vector<double> probs;
    std::vector<bool> defined;      // one flag per given-assignment (row)
    std::size_t rows = 0;
    std::size_t row_len = 0;

    double operator[](std::size_t i) const { return probs[i]; }
};

// Dense probability table over a tuple of finite variables.
// Flat layout is row-major with the last axis fastest:
//   index = ((a0*d1 + a1)*d2 + a2)*d3 + ...
class ProbTable {
  public:
    ProbTable() = default;

    ProbTable(std::vector<std::size_t> dims, std::vector<double> probs)
        : dims_(std::move(dims)), p_(std::move(probs)) {
        std::size_t n = 1;
        for (std::size_t d : dims_) {
            if (d == 0) throw ShapeMismatch("zero-size axis");
            n *= d;
        }
        if (p_.size() != n)
            throw ShapeMismatch("flat array length does not match axis sizes");
        double sum = 0.0;
        for (double v : p_) {
            if (!std::isfinite(v)) throw NegativeProbability("non-finite entry");
            if (v < 0.0) throw NegativeProbability("negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw NotNormalized("entries sum to " + std::to_string(sum));
    }

    static ProbTable uniform(std::vector<std::size_t> dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return ProbTable(std::move(dims), std::vector<double>(n, 1.0 / double(n)));
    }

    std::size_t rank() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t size() const { return p_.size(); }
    const std::vector<double>& probs() const { return p_; }
    double operator[](std::size_t i) const { return p_[i]; }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t a = 0; a < dims_.size(); ++a) f = f * dims_[a] + idx[a];
        return f;
    }

    void unflatten(std::size_t f, std::vector<std::size_t>& idx) const {
        idx.resize(dims_.size());
        for (std::size_t a = dims_.size(); a-- > 0;) {
            idx[a] = f % dims_[a];
            f /= dims_[a];
        }
    }

    // Exact marginal over the axes in `keep` (result axes in the order given).
    ProbTable marginal(const std::vector<std::size_t>& keep) const {
        validate_subset(keep);
        std::vector<std::size_t> out_dims;
        out_dims.reserve(keep.size());
        for (std::size_t a : keep) out_dims.push_back(dims_[a]);
        std::size_t out_n = 1;
        for (std::size_t d : out_dims) out_n *= d;
        std::vector<double> out(out_n, 0.0);
        std::vector<std::size_t> idx;
        for (std::size_t f = 0; f < p_.size(); ++f) {
            if (p_[f] == 0.0) continue;
            unflatten(f, idx);
            std::size_t g = 0;
            for (std::size_t k = 0; k < keep.size(); ++k)
                g = g * out_dims[k] + idx[keep[k]];
            out[g] += p_[f];
        }
        ProbTable r;
        r.dims_ = std::move(out_dims);
        r.p_ = std::move(out);
        return r;
    }

    Conditional conditional(const std::vector<std::size_t>& target,
                            const std::vector<std::size_t>& given) const {
        for (std::size_t a : target)
            for (std::size_t b : given)
                if (a == b) throw OverlappingSets("target and given overlap");
        std::vector<std::size_t> all = given;
        all.insert(all.end(), target.begin(), target.end());
        ProbTable joint = marginal(all);
        std::size_t rows = 1, cols = 1;
        for (std::size_t k = 0; k < given.size(); ++k) rows *= joint.dims_[k];
        for (std::size_t k = given.size(); k < joint.rank(); ++k) cols *= joint.dims_[k];
        Conditional c;
        c.rows = rows;
        c.row_len = cols;
        c.defined.assign(rows, false);
        std::vector<double> out(joint.p_);
        for (std::size_t r = 0; r < rows; ++r) {
            double s = std::accumulate(out.begin() + r * cols, out.begin() + (r + 1) * cols, 0.0);
            if (s > 0.0) {
                c.defined[r] = true;
                for (std::size_t k = 0; k < cols; ++k) out[r * cols + k] /= s;
            }
        }
        c.dims = joint.dims_;
        c.probs = std::move(out);
        return c;
    }

    bool approx_equal(const ProbTable& other, double tol = kEntryTol) const {
        if (dims_ != other.dims_) return false;
        for (std::size_t i = 0; i < p_.size(); ++i)
            if (std::abs(p_[i] - other.p_[i]) > tol) return false;
        return true;
    }

  private:
    void validate_subset(const std::vector<std::size_t>& keep) const {
        if (keep.empty()) throw BadSubset("empty variable subset");
        for (std::size_t a : keep)
            if (a >= dims_.size()) throw BadSubset("axis out of range");
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t j = i + 1; j < keep.size(); ++j)
                if (keep[i] == keep[j]) throw BadSubset("repeated axis");
    }

    friend class ExtendedPmf;
    std::vector<std::size_t> dims_;
    std::vector<double> p_;
};

} // namespace skpk
