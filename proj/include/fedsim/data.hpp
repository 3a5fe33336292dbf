#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/quadratic.hpp"

namespace fedsim {

// In-memory labeled dataset; features are row-major n x in_dim.
struct LabeledDataset {
    std::vector<double> features;
    std::vector<int> labels;
    int n = 0;
    int in_dim = 0;
    int n_classes = 0;

    Batch full_batch() const;
    Batch subset_batch(const std::vector<int>& indices) const;
};

// Assignment of dataset indices to clients. Invariant: the index lists are
// disjoint, cover [0, n) exactly, and every client is non-empty.
struct Partition {
    std::vector<std::vector<int>> client_indices;

    int n_clients() const { return static_cast<int>(client_indices.size()); }
    int total() const;
    void validate(int n_samples) const;
};

// Deterministic class-center layout for make_blobs: centers sit 6 * spread
// apart (on a line for in_dim == 1, on a circle in the first two coordinates
// otherwise), comfortably above the 4 * spread separation floor.
std::vector<ParamVector> blob_centers(int n_classes, int in_dim, double spread);

// Balanced Gaussian mixture: per_class samples around each class center with
// isotropic noise of the given spread. Samples are ordered class by class.
LabeledDataset make_blobs(int n_classes, int per_class, int in_dim, double spread,
                          std::uint64_t seed);

// Label-skewed split: for each class, proportions over clients are drawn from
// Dirichlet(beta, ..., beta) and that class's indices are dealt accordingly.
// Small beta concentrates classes on few clients. Empty clients are repaired
// by moving one sample at a time from the currently largest client.
Partition dirichlet_partition(const std::vector<int>& labels, int n_clients, double beta,
                              std::uint64_t seed);

// Hard label skew: each class is cut into equal shards and shards are dealt
// so that every client holds exactly n_classes_per_client distinct classes.
// Requires n_clients * n_classes_per_client >= n_classes and enough samples
// per class to fill every shard.
Partition pathological_partition(const std::vector<int>& labels, int n_clients,
                                 int n_classes_per_client, std::uint64_t seed);

// Random quadratic family: per-client SPD matrices with spectrum inside
// [mu_min, lambda_hi] and minimizers c_i spread around a common center with
// max_i ||c_i - mean(c)|| <= heterogeneity.
std::shared_ptr<const QuadraticProblem> make_quadratic_family(int n_clients, int dim,
                                                              double heterogeneity,
                                                              std::uint64_t seed,
                                                              double mu_min = 0.5,
                                                              double lambda_hi = 3.0);

// One epoch of minibatches for a client: its indices are shuffled with a
// stream keyed by (seed, round, client) and chunked; a final partial batch is
// kept. batch_size <= 0 selects full-batch.
std::vector<Batch> batch_stream(const LabeledDataset& data, const Partition& partition, int client,
                                int batch_size, std::uint64_t seed, std::uint64_t round);

}  // namespace fedsim
