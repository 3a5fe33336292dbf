#include "fedsim/quadratic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedsim {

namespace {

void check_client(const QuadraticProblem& p, int client) {
    if (client < 0 || client >= p.n_clients) {
        throw std::invalid_argument("quadratic: client " + std::to_string(client) +
                                    " out of range [0, " + std::to_string(p.n_clients) + ")");
    }
}

void check_dim(const QuadraticProblem& p, const ParamVector& w) {
    if (static_cast<int>(w.size()) != p.dim) {
        throw std::invalid_argument("quadratic: parameter size " + std::to_string(w.size()) +
                                    " does not match dim " + std::to_string(p.dim));
    }
}

}  // namespace

ParamVector mat_vec(const std::vector<double>& m, const ParamVector& x) {
    std::size_t n = x.size();
    if (m.size() != n * n) throw std::invalid_argument("mat_vec: matrix/vector size mismatch");
    ParamVector y(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += m[r * n + c] * x[c];
        y[r] = s;
    }
    return y;
}

double power_iteration_lambda_max(const std::vector<double>& m, int dim) {
    if (dim <= 0 || m.size() != static_cast<std::size_t>(dim) * dim) {
        throw std::invalid_argument("power_iteration: bad dimensions");
    }
    // Fixed deterministic start with all modes excited.
    ParamVector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.013 * i;
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
        ParamVector mv = mat_vec(m, v);
        double n = norm(mv);
        if (n < kDegenerateNorm) return 0.0;
        for (int i = 0; i < dim; ++i) v[i] = mv[i] / n;
        double next = dot(v, mat_vec(m, v));
        if (std::fabs(next - lambda) <= 1e-13 * std::max(1.0, std::fabs(next))) return next;
        lambda = next;
    }
    return lambda;
}

ParamVector solve_linear(std::vector<double> a, ParamVector b) {
    int n = static_cast<int>(b.size());
    if (a.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("solve_linear: matrix/vector size mismatch");
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        }
        if (std::fabs(a[pivot * n + col]) < kDegenerateNorm) {
            throw std::runtime_error("solve_linear: singular system");
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        double d = a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    ParamVector x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return x;
}

double QuadraticProblem::client_loss(int client, const ParamVector& w) const {
    check_client(*this, client);
    check_dim(*this, w);
    ParamVector d = sub(w, centers[client]);
    return 0.5 * dot(d, mat_vec(A[client], d));
}

ParamVector QuadraticProblem::client_grad(int client, const ParamVector& w) const {
    check_client(*this, client);
    check_dim(*this, w);
    return mat_vec(A[client], sub(w, centers[client]));
}

double QuadraticProblem::subset_loss(const std::vector<int>& clients, const ParamVector& w) const {
    if (clients.empty()) throw std::invalid_argument("quadratic: empty client subset");
    double s = 0.0;
    for (int c : clients) s += client_loss(c, w);
    return s / static_cast<double>(clients.size());
}

ParamVector QuadraticProblem::subset_grad(const std::vector<int>& clients, const ParamVector& w) const {
    if (clients.empty()) throw std::invalid_argument("quadratic: empty client subset");
    ParamVector g(dim, 0.0);
    for (int c : clients) axpy(g, 1.0, client_grad(c, w));
    for (double& v : g) v /= static_cast<double>(clients.size());
    return g;
}

std::vector<int> QuadraticProblem::all_clients() const {
    std::vector<int> ids(n_clients);
    for (int i = 0; i < n_clients; ++i) ids[i] = i;
    return ids;
}

double QuadraticProblem::smoothness_max() const {
    double l = 0.0;
    for (double v : lambda_max) l = std::max(l, v);
    return l;
}

std::vector<double> QuadraticProblem::mean_matrix() const {
    std::vector<double> m(static_cast<std::size_t>(dim) * dim, 0.0);
    for (const auto& a : A) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += a[i];
    }
    for (double& v : m) v /= static_cast<double>(n_clients);
    return m;
}

double QuadraticProblem::global_smoothness() const {
    return power_iteration_lambda_max(mean_matrix(), dim);
}

ParamVector QuadraticProblem::global_minimizer() const {
    std::vector<double> sum_a(static_cast<std::size_t>(dim) * dim, 0.0);
    ParamVector rhs(dim, 0.0);
    for (int i = 0; i < n_clients; ++i) {
        for (std::size_t j = 0; j < sum_a.size(); ++j) sum_a[j] += A[i][j];
        axpy(rhs, 1.0, mat_vec(A[i], centers[i]));
    }
    return solve_linear(sum_a, rhs);
}

double QuadraticProblem::gradient_dissimilarity(const ParamVector& w) const {
    ParamVector g = subset_grad(all_clients(), w);
    double worst = 0.0;
    for (int i = 0; i < n_clients; ++i) {
        worst = std::max(worst, norm(sub(client_grad(i, w), g)));
    }
    return worst;
}

}  // namespace fedsim
