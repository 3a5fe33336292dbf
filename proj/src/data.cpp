#include "fedsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedsim/rng.hpp"

namespace fedsim {

Batch LabeledDataset::full_batch() const {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return subset_batch(idx);
}

Batch LabeledDataset::subset_batch(const std::vector<int>& indices) const {
    if (indices.empty()) throw std::invalid_argument("subset_batch: empty index list");
    std::vector<double> f(indices.size() * static_cast<std::size_t>(in_dim));
    std::vector<int> y(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        int i = indices[r];
        if (i < 0 || i >= n) throw std::invalid_argument("subset_batch: index out of range");
        std::copy_n(features.data() + static_cast<std::size_t>(i) * in_dim, in_dim,
                    f.data() + r * in_dim);
        y[r] = labels[i];
    }
    return Batch::classification(std::move(f), std::move(y), in_dim);
}

int Partition::total() const {
    int t = 0;
    for (const auto& c : client_indices) t += static_cast<int>(c.size());
    return t;
}

void Partition::validate(int n_samples) const {
    std::vector<char> seen(n_samples, 0);
    for (const auto& client : client_indices) {
        if (client.empty()) throw std::runtime_error("partition: empty client");
        for (int i : client) {
            if (i < 0 || i >= n_samples) throw std::runtime_error("partition: index out of range");
            if (seen[i]) throw std::runtime_error("partition: duplicate index " + std::to_string(i));
            seen[i] = 1;
        }
    }
    if (total() != n_samples) throw std::runtime_error("partition: does not cover the dataset");
}

std::vector<ParamVector> blob_centers(int n_classes, int in_dim, double spread) {
    if (n_classes < 1 || in_dim < 1) throw std::invalid_argument("blob_centers: bad dimensions");
    if (!(spread > 0.0)) throw std::invalid_argument("blob_centers: spread must be positive");
    std::vector<ParamVector> centers(n_classes, ParamVector(in_dim, 0.0));
    double sep = 6.0 * spread;
    if (in_dim == 1 || n_classes == 1) {
        for (int k = 0; k < n_classes; ++k) centers[k][0] = sep * k;
        return centers;
    }
    // Circle in the first two coordinates with chord >= sep between neighbors.
    double radius = sep / (2.0 * std::sin(M_PI / n_classes));
    for (int k = 0; k < n_classes; ++k) {
        double theta = 2.0 * M_PI * k / n_classes;
        centers[k][0] = radius * std::cos(theta);
        centers[k][1] = radius * std::sin(theta);
    }
    return centers;
}

LabeledDataset make_blobs(int n_classes, int per_class, int in_dim, double spread,
                          std::uint64_t seed) {
    if (n_classes < 1 || per_class < 1 || in_dim < 1) {
        throw std::invalid_argument("make_blobs: class count, per-class count and dim must be positive");
    }
    if (!(spread > 0.0)) throw std::invalid_argument("make_blobs: spread must be positive");
    auto centers = blob_centers(n_classes, in_dim, spread);
    Rng rng(seed_combine({seed, stream::kBlobs, static_cast<std::uint64_t>(n_classes),
                          static_cast<std::uint64_t>(per_class), static_cast<std::uint64_t>(in_dim)}));
    LabeledDataset d;
    d.n = n_classes * per_class;
    d.in_dim = in_dim;
    d.n_classes = n_classes;
    d.features.resize(static_cast<std::size_t>(d.n) * in_dim);
    d.labels.resize(d.n);
    std::size_t pos = 0;
    for (int k = 0; k < n_classes; ++k) {
        for (int s = 0; s < per_class; ++s) {
            for (int j = 0; j < in_dim; ++j) {
                d.features[pos * in_dim + j] = centers[k][j] + spread * rng.gaussian();
            }
            d.labels[pos] = k;
            ++pos;
        }
    }
    return d;
}

namespace {

std::vector<std::vector<int>> indices_by_class(const std::vector<int>& labels) {
    int n_classes = 0;
    for (int y : labels) {
        if (y < 0) throw std::invalid_argument("partition: negative label");
        n_classes = std::max(n_classes, y + 1);
    }
    if (labels.empty()) throw std::invalid_argument("partition: empty label list");
    std::vector<std::vector<int>> by_class(n_classes);
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) by_class[labels[i]].push_back(i);
    return by_class;
}

// Moves single samples from the largest client until no client is empty.
void repair_empty_clients(Partition& p) {
    for (;;) {
        int empty = -1;
        for (int i = 0; i < p.n_clients(); ++i) {
            if (p.client_indices[i].empty()) {
                empty = i;
                break;
            }
        }
        if (empty < 0) return;
        int largest = 0;
        for (int i = 1; i < p.n_clients(); ++i) {
            if (p.client_indices[i].size() > p.client_indices[largest].size()) largest = i;
        }
        if (p.client_indices[largest].size() <= 1) {
            throw std::runtime_error("partition: not enough samples to give every client one");
        }
        p.client_indices[empty].push_back(p.client_indices[largest].back());
        p.client_indices[largest].pop_back();
    }
}

}  // namespace

Partition dirichlet_partition(const std::vector<int>& labels, int n_clients, double beta,
                              std::uint64_t seed) {
    if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("dirichlet_partition: beta must be positive");
    if (static_cast<int>(labels.size()) < n_clients) {
        throw std::invalid_argument("dirichlet_partition: fewer samples than clients");
    }
    auto by_class = indices_by_class(labels);
    Rng rng(seed_combine({seed, stream::kDirichlet, static_cast<std::uint64_t>(n_clients)}));
    Partition p;
    p.client_indices.resize(n_clients);
    for (auto& cls : by_class) {
        if (cls.empty()) continue;
        rng.shuffle(cls);
        std::vector<double> prop = rng.dirichlet(beta, n_clients);
        // Cut points by cumulative rounding keep counts within one of exact.
        std::size_t n_c = cls.size();
        double cum = 0.0;
        std::size_t taken = 0;
        for (int i = 0; i < n_clients; ++i) {
            cum += prop[i];
            std::size_t upto = (i == n_clients - 1)
                                   ? n_c
                                   : std::min(n_c, static_cast<std::size_t>(std::llround(cum * n_c)));
            for (; taken < upto; ++taken) p.client_indices[i].push_back(cls[taken]);
        }
    }
    repair_empty_clients(p);
    p.validate(static_cast<int>(labels.size()));
    return p;
}

Partition pathological_partition(const std::vector<int>& labels, int n_clients,
                                 int n_classes_per_client, std::uint64_t seed) {
    if (n_clients < 1) throw std::invalid_argument("pathological_partition: n_clients must be positive");
    auto by_class = indices_by_class(labels);
    int n_classes = static_cast<int>(by_class.size());
    if (n_classes_per_client < 1 || n_classes_per_client > n_classes) {
        throw std::invalid_argument("pathological_partition: classes per client must lie in [1, " +
                                    std::to_string(n_classes) + "]");
    }
    long total_shards = static_cast<long>(n_clients) * n_classes_per_client;
    if (total_shards < n_classes) {
        throw std::invalid_argument(
            "pathological_partition: n_clients * classes-per-client < n_classes, so some class "
            "could not be assigned to any client");
    }
    // Spread the shard budget as evenly as possible over classes.
    std::vector<int> shards_per_class(n_classes, static_cast<int>(total_shards / n_classes));
    int remainder = static_cast<int>(total_shards % n_classes);
    for (int c = 0; c < remainder; ++c) shards_per_class[c] += 1;

    Rng rng(seed_combine({seed, stream::kPathological, static_cast<std::uint64_t>(n_clients),
                          static_cast<std::uint64_t>(n_classes_per_client)}));
    for (int c = 0; c < n_classes; ++c) {
        if (static_cast<int>(by_class[c].size()) < shards_per_class[c]) {
            throw std::invalid_argument("pathological_partition: class " + std::to_string(c) +
                                        " has " + std::to_string(by_class[c].size()) +
                                        " samples but needs " + std::to_string(shards_per_class[c]) +
                                        " non-empty shards");
        }
        rng.shuffle(by_class[c]);
    }
    // Randomize which classes land where by permuting the class order, then
    // deal class-sorted shards round-robin over clients. Consecutive shards of
    // one class land on distinct clients because shards_per_class <= n_clients.
    std::vector<int> class_order(n_classes);
    std::iota(class_order.begin(), class_order.end(), 0);
    rng.shuffle(class_order);

    Partition p;
    p.client_indices.resize(n_clients);
    long slot = 0;
    for (int oc = 0; oc < n_classes; ++oc) {
        int c = class_order[oc];
        int shards = shards_per_class[c];
        const auto& idx = by_class[c];
        std::size_t n_c = idx.size();
        for (int s = 0; s < shards; ++s) {
            std::size_t lo = n_c * s / shards;
            std::size_t hi = n_c * (s + 1) / shards;
            int client = static_cast<int>(slot % n_clients);
            for (std::size_t i = lo; i < hi; ++i) p.client_indices[client].push_back(idx[i]);
            ++slot;
        }
    }
    p.validate(static_cast<int>(labels.size()));
    return p;
}

std::shared_ptr<const QuadraticProblem> make_quadratic_family(int n_clients, int dim,
                                                              double heterogeneity,
                                                              std::uint64_t seed, double mu_min,
                                                              double lambda_hi) {
    if (n_clients < 1 || dim < 1) {
        throw std::invalid_argument("make_quadratic_family: n_clients and dim must be positive");
    }
    if (heterogeneity < 0.0) {
        throw std::invalid_argument("make_quadratic_family: heterogeneity must be non-negative");
    }
    if (!(mu_min > 0.0) || !(lambda_hi >= mu_min)) {
        throw std::invalid_argument("make_quadratic_family: need 0 < mu_min <= lambda_hi");
    }
    Rng rng(seed_combine({seed, stream::kQuadFamily, static_cast<std::uint64_t>(n_clients),
                          static_cast<std::uint64_t>(dim)}));
    auto p = std::make_shared<QuadraticProblem>();
    p->dim = dim;
    p->n_clients = n_clients;
    p->A.resize(n_clients);
    p->centers.resize(n_clients);
    p->lambda_max.resize(n_clients);
    for (int i = 0; i < n_clients; ++i) {
        // Random orthonormal basis by Gram-Schmidt on Gaussian columns.
        std::vector<ParamVector> q;
        q.reserve(dim);
        while (static_cast<int>(q.size()) < dim) {
            ParamVector v = rng.gaussian_vector(dim);
            for (const auto& u : q) axpy(v, -dot(v, u), u);
            double n = norm(v);
            if (n < 1e-8) continue;  // near-dependent draw; try again
            for (double& x : v) x /= n;
            q.push_back(std::move(v));
        }
        // Spectrum inside [mu_min, lambda_hi]; the extremes are always hit so
        // the top eigenvalue is known exactly.
        ParamVector eig(dim);
        eig[0] = lambda_hi;
        eig[dim - 1] = mu_min;
        for (int j = 1; j + 1 < dim; ++j) eig[j] = mu_min + (lambda_hi - mu_min) * rng.uniform();
        if (dim == 1) eig[0] = lambda_hi;
        std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int j = 0; j < dim; ++j) {
            for (int r = 0; r < dim; ++r) {
                for (int c = 0; c < dim; ++c) a[r * static_cast<std::size_t>(dim) + c] +=
                    eig[j] * q[j][r] * q[j][c];
            }
        }
        p->A[i] = std::move(a);
        p->lambda_max[i] = eig[0];
    }
    // Minimizers: common center plus a recentred, clamped offset cloud so that
    // max_i ||c_i - mean(c)|| <= heterogeneity holds exactly.
    ParamVector base = rng.gaussian_vector(dim);
    std::vector<ParamVector> offsets(n_clients);
    ParamVector mean_off(dim, 0.0);
    for (int i = 0; i < n_clients; ++i) {
        ParamVector u = rng.gaussian_vector(dim);
        double n = norm(u);
        double r = std::pow(rng.uniform(), 1.0 / dim);  // uniform radius in the unit ball
        offsets[i] = (n < kDegenerateNorm) ? ParamVector(dim, 0.0) : scale(u, r / n);
        axpy(mean_off, 1.0 / n_clients, offsets[i]);
    }
    double worst = 0.0;
    for (auto& o : offsets) {
        o = sub(o, mean_off);
        worst = std::max(worst, norm(o));
    }
    double shrink = worst > 1.0 ? 1.0 / worst : 1.0;
    for (int i = 0; i < n_clients; ++i) {
        p->centers[i] = add(base, scale(offsets[i], heterogeneity * shrink));
    }
    return p;
}

std::vector<Batch> batch_stream(const LabeledDataset& data, const Partition& partition, int client,
                                int batch_size, std::uint64_t seed, std::uint64_t round) {
    if (client < 0 || client >= partition.n_clients()) {
        throw std::invalid_argument("batch_stream: client out of range");
    }
    std::vector<int> idx = partition.client_indices[client];
    if (idx.empty()) throw std::invalid_argument("batch_stream: client has no samples");
    Rng rng(seed_combine({seed, stream::kBatchStream, round, static_cast<std::uint64_t>(client)}));
    rng.shuffle(idx);
    int bs = batch_size <= 0 ? static_cast<int>(idx.size()) : batch_size;
    std::vector<Batch> out;
    for (std::size_t lo = 0; lo < idx.size(); lo += bs) {
        std::size_t hi = std::min(idx.size(), lo + bs);
        out.push_back(data.subset_batch(std::vector<int>(idx.begin() + lo, idx.begin() + hi)));
    }
    return out;
}

}  // namespace fedsim
