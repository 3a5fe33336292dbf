#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fedsim/quadratic.hpp"
#include "fedsim/vec.hpp"

namespace fedsim {

enum class ModelKind { QuadraticFamily, LinearSoftmax, Mlp };

// Architecture descriptor. QuadraticFamily carries no trainable architecture;
// its loss comes from a QuadraticProblem instance referenced by the batch.
struct ModelSpec {
    ModelKind kind = ModelKind::QuadraticFamily;
    int in_dim = 0;       // feature dim; for QuadraticFamily the parameter dim
    int hidden_dim = 0;   // Mlp only
    int n_classes = 0;    // classifiers only

    static ModelSpec quadratic(int dim);
    static ModelSpec linear_softmax(int in_dim, int n_classes);
    static ModelSpec mlp(int in_dim, int hidden_dim, int n_classes);

    int param_count() const;
    bool is_classifier() const { return kind != ModelKind::QuadraticFamily; }
};

// One unit of training data. Classifier batches carry row-major features and
// integer labels; quadratic batches carry a problem handle plus the client
// ids whose mean loss the batch represents. Exactly one payload is set.
struct Batch {
    std::vector<double> features;  // size() == n * in_dim
    std::vector<int> labels;       // size() == n
    int n = 0;
    int in_dim = 0;

    std::shared_ptr<const QuadraticProblem> problem;
    std::vector<int> problem_clients;

    static Batch classification(std::vector<double> features, std::vector<int> labels, int in_dim);
    static Batch quadratic(std::shared_ptr<const QuadraticProblem> problem, std::vector<int> clients);

    bool is_quadratic() const { return problem != nullptr; }
    int size() const { return is_quadratic() ? static_cast<int>(problem_clients.size()) : n; }
};

// Deterministic initial parameters; entries are i.i.d. N(0, 0.1^2).
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Mean loss of the batch at w. Cross-entropy for classifiers (always >= 0),
// mean client quadratic for the quadratic family.
double forward_loss(const ModelSpec& spec, const ParamVector& w, const Batch& batch);

// Analytic gradient of forward_loss; a pure function of (spec, w, batch).
ParamVector gradient(const ModelSpec& spec, const ParamVector& w, const Batch& batch);

// Central-difference gradient, the reference oracle for gradient(). h > 0.
ParamVector finite_diff_gradient(const ModelSpec& spec, const ParamVector& w, const Batch& batch,
                                 double h);

// Per-sample class scores for classifier specs, row-major n x n_classes.
std::vector<double> class_logits(const ModelSpec& spec, const ParamVector& w, const Batch& batch);

}  // namespace fedsim
