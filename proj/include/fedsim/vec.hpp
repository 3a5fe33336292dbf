#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsim {

// Flat parameter vector. All model state in the simulator is carried in this
// form so that algorithms, aggregation and metrics share one representation.
using ParamVector = std::vector<double>;

// Norms below this threshold are treated as degenerate: no direction can be
// extracted from them, so perturbations and unit vectors collapse to zero.
inline constexpr double kDegenerateNorm = 1e-12;

inline void check_same_size(const ParamVector& a, const ParamVector& b, const char* where) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(where) + ": size mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

inline double dot(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const ParamVector& a) {
    return std::sqrt(dot(a, a));
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "add");
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "sub");
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline ParamVector scale(const ParamVector& a, double s) {
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

// r += s * a
inline void axpy(ParamVector& r, double s, const ParamVector& a) {
    check_same_size(r, a, "axpy");
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * a[i];
}

// Unit vector along a, or the zero vector when ||a|| is degenerate.
inline ParamVector unit_or_zero(const ParamVector& a) {
    double n = norm(a);
    if (n < kDegenerateNorm) return ParamVector(a.size(), 0.0);
    return scale(a, 1.0 / n);
}

inline bool all_finite(const ParamVector& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline bool is_zero(const ParamVector& a) {
    for (double v : a) {
        if (v != 0.0) return false;
    }
    return true;
}

}  // namespace fedsim
