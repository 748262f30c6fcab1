#pragma once

#include <stdexcept>
#include <string>

namespace skpk {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NegativeProbability : Error {
    explicit NegativeProbability(const std::string& msg) : Error(msg) {}
};
struct NotNormalized : Error {
    explicit NotNormalized(const std::string& msg) : Error(msg) {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};
struct BadSubset : Error {
    explicit BadSubset(const std::string& msg) : Error(msg) {}
};
struct OverlappingSets : Error {
    explicit OverlappingSets(const std::string& msg) : Error(msg) {}
};
struct BadPartition : Error {
    explicit BadPartition(const std::string& msg) : Error(msg) {}
};
struct EmptySample : Error {
    explicit EmptySample(const std::string& msg) : Error(msg) {}
};
struct BudgetZero : Error {
    explicit BudgetZero(const std::string& msg) : Error(msg) {}
};
struct BudgetExceeded : Error {
    explicit BudgetExceeded(const std::string& msg) : Error(msg) {}
};
struct DegenerateRates : Error {
    explicit DegenerateRates(const std::string& msg) : Error(msg) {}
};
struct ZeroEvidence : Error {
    explicit ZeroEvidence(const std::string& msg) : Error(msg) {}
};

} // namespace skpk
