#pragma once

// Shared fixtures for the test binaries: hand-built quadratic problems with
// known matrices, and random classification batches.

#include <memory>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/quadratic.hpp"
#include "fedsim/rng.hpp"

namespace testutil {

inline std::shared_ptr<const fedsim::QuadraticProblem> quad_problem(
    int dim, std::vector<std::vector<double>> A, std::vector<fedsim::ParamVector> centers) {
    auto p = std::make_shared<fedsim::QuadraticProblem>();
    p->dim = dim;
    p->n_clients = static_cast<int>(A.size());
    p->A = std::move(A);
    p->centers = std::move(centers);
    for (const auto& m : p->A) {
        p->lambda_max.push_back(fedsim::power_iteration_lambda_max(m, dim));
    }
    return p;
}

// F_i(w) = 0.5 ||w - c_i||^2 for each given center.
inline std::shared_ptr<const fedsim::QuadraticProblem> identity_quad(
    std::vector<fedsim::ParamVector> centers) {
    int dim = static_cast<int>(centers[0].size());
    std::vector<double> eye(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int j = 0; j < dim; ++j) eye[j * static_cast<std::size_t>(dim) + j] = 1.0;
    std::vector<std::vector<double>> A(centers.size(), eye);
    return quad_problem(dim, std::move(A), std::move(centers));
}

inline fedsim::Batch random_batch(const fedsim::ModelSpec& spec, int n, fedsim::Rng& rng) {
    std::vector<double> f(static_cast<std::size_t>(n) * spec.in_dim);
    std::vector<int> y(n);
    for (auto& v : f) v = rng.gaussian();
    for (auto& l : y) l = rng.uniform_int(spec.n_classes);
    return fedsim::Batch::classification(std::move(f), std::move(y), spec.in_dim);
}

}  // namespace testutil
