#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradgap {

/// Raised for inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidInput("dot: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double x : a)
        s += x * x;
    return std::sqrt(s);
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size())
        throw InvalidInput("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += alpha * x[i];
}

inline Vec scaled(std::span<const double> x, double alpha) {
    Vec out(x.begin(), x.end());
    for (double& v : out)
        v *= alpha;
    return out;
}

inline Vec subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidInput("subtract: dimension mismatch");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] - b[i];
    return out;
}

inline bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// log(sum(exp(x))) with max subtraction; returns -inf for an empty range.
inline double log_sum_exp(std::span<const double> x) {
    if (x.empty())
        return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double v : x)
        s += std::exp(v - m);
    return m + std::log(s);
}

/// Policy parameter vector. Entries are always finite.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t dimension) : entries_(dimension, 0.0) {}
    explicit ParamVector(Vec entries) : entries_(std::move(entries)) {
        if (!all_finite(entries_))
            throw InvalidInput("ParamVector: non-finite entry");
    }
    ParamVector(std::initializer_list<double> init) : ParamVector(Vec(init)) {}

    std::size_t size() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    std::span<const double> view() const { return entries_; }
    const Vec& entries() const { return entries_; }

    bool operator==(const ParamVector&) const = default;

private:
    Vec entries_;
};

}  // namespace gradgap
