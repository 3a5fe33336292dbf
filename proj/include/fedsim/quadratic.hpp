#pragma once

#include <vector>

#include "fedsim/vec.hpp"

namespace fedsim {

// Family of per-client quadratics F_i(w) = 0.5 * (w - c_i)' A_i (w - c_i).
// The global objective is the uniform mean of the F_i. Every constant that
// the optimization theory needs (smoothness, minimizer, gradient
// dissimilarity) has a closed form here, which is what makes the family
// useful as a test bed.
struct QuadraticProblem {
    int dim = 0;
    int n_clients = 0;
    std::vector<std::vector<double>> A;   // per client, row-major dim x dim, symmetric
    std::vector<ParamVector> centers;     // per client minimizer c_i
    std::vector<double> lambda_max;       // per client top eigenvalue, known at build time

    double client_loss(int client, const ParamVector& w) const;
    ParamVector client_grad(int client, const ParamVector& w) const;

    // Mean loss/gradient over a subset of clients.
    double subset_loss(const std::vector<int>& clients, const ParamVector& w) const;
    ParamVector subset_grad(const std::vector<int>& clients, const ParamVector& w) const;

    std::vector<int> all_clients() const;

    // L = max_i lambda_max(A_i); Lipschitz constant of every client gradient.
    double smoothness_max() const;

    // Mean matrix (1/n) sum A_i, row-major.
    std::vector<double> mean_matrix() const;

    // lambda_max of the mean matrix; Lipschitz constant of the global gradient.
    double global_smoothness() const;

    // Unique minimizer of the global objective: solves (sum A_i) w = sum A_i c_i.
    ParamVector global_minimizer() const;

    // max_i ||grad F_i(w) - grad F(w)||, evaluated in closed form.
    double gradient_dissimilarity(const ParamVector& w) const;
};

// y = M x for a row-major dim x dim matrix.
ParamVector mat_vec(const std::vector<double>& m, const ParamVector& x);

// Top eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_lambda_max(const std::vector<double>& m, int dim);

// Gaussian elimination with partial pivoting; a is row-major n x n.
ParamVector solve_linear(std::vector<double> a, ParamVector b);

}  // namespace fedsim
