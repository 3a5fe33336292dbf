#include "fedsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t seed_combine(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (std::uint64_t p : parts) {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::gaussian() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // Rejection sampling over the low bits keeps the draw unbiased.
    std::uint64_t un = static_cast<std::uint64_t>(n);
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
}

std::vector<double> Rng::gaussian_vector(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = gaussian();
    return v;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        int j = i + uniform_int(n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

double Rng::gamma(double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("gamma: alpha must be positive");
    if (alpha < 1.0) {
        // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
        double u = uniform_pos();
        return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    double d = alpha - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = gaussian();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

std::vector<double> Rng::dirichlet(double alpha, int k) {
    if (k <= 0) throw std::invalid_argument("dirichlet: k must be positive");
    std::vector<double> g(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        g[i] = gamma(alpha);
        sum += g[i];
    }
    if (sum <= 0.0) {
        // All-zero draw is impossible in exact arithmetic; guard underflow.
        for (int i = 0; i < k; ++i) g[i] = 1.0 / k;
        return g;
    }
    for (int i = 0; i < k; ++i) g[i] /= sum;
    return g;
}

}  // namespace fedsim
