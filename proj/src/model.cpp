#include "fedsim/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fedsim/rng.hpp"

namespace fedsim {

ModelSpec ModelSpec::quadratic(int dim) {
    if (dim <= 0) throw std::invalid_argument("ModelSpec: quadratic dim must be positive");
    ModelSpec s;
    s.kind = ModelKind::QuadraticFamily;
    s.in_dim = dim;
    return s;
}

ModelSpec ModelSpec::linear_softmax(int in_dim, int n_classes) {
    if (in_dim <= 0 || n_classes < 2) {
        throw std::invalid_argument("ModelSpec: linear_softmax needs in_dim > 0 and n_classes >= 2");
    }
    ModelSpec s;
    s.kind = ModelKind::LinearSoftmax;
    s.in_dim = in_dim;
    s.n_classes = n_classes;
    return s;
}

ModelSpec ModelSpec::mlp(int in_dim, int hidden_dim, int n_classes) {
    if (in_dim <= 0 || hidden_dim <= 0 || n_classes < 2) {
        throw std::invalid_argument("ModelSpec: mlp needs positive dims and n_classes >= 2");
    }
    ModelSpec s;
    s.kind = ModelKind::Mlp;
    s.in_dim = in_dim;
    s.hidden_dim = hidden_dim;
    s.n_classes = n_classes;
    return s;
}

int ModelSpec::param_count() const {
    switch (kind) {
        case ModelKind::QuadraticFamily:
            return in_dim;
        case ModelKind::LinearSoftmax:
            return in_dim * n_classes + n_classes;
        case ModelKind::Mlp:
            return in_dim * hidden_dim + hidden_dim + hidden_dim * n_classes + n_classes;
    }
    throw std::logic_error("ModelSpec: unknown kind");
}

Batch Batch::classification(std::vector<double> features, std::vector<int> labels, int in_dim) {
    if (in_dim <= 0) throw std::invalid_argument("Batch: in_dim must be positive");
    if (labels.empty()) throw std::invalid_argument("Batch: empty batch");
    if (features.size() != labels.size() * static_cast<std::size_t>(in_dim)) {
        throw std::invalid_argument("Batch: features size does not match labels * in_dim");
    }
    Batch b;
    b.n = static_cast<int>(labels.size());
    b.in_dim = in_dim;
    b.features = std::move(features);
    b.labels = std::move(labels);
    return b;
}

Batch Batch::quadratic(std::shared_ptr<const QuadraticProblem> problem, std::vector<int> clients) {
    if (!problem) throw std::invalid_argument("Batch: null quadratic problem");
    if (clients.empty()) throw std::invalid_argument("Batch: empty client subset");
    Batch b;
    b.problem = std::move(problem);
    b.problem_clients = std::move(clients);
    return b;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    int p = spec.param_count();
    Rng rng(seed_combine({seed, stream::kInitParams, static_cast<std::uint64_t>(spec.kind),
                          static_cast<std::uint64_t>(p)}));
    ParamVector w(p);
    for (int i = 0; i < p; ++i) w[i] = 0.1 * rng.gaussian();
    return w;
}

namespace {

void check_classifier_batch(const ModelSpec& spec, const ParamVector& w, const Batch& batch,
                            const char* op) {
    if (batch.is_quadratic()) {
        throw std::invalid_argument(std::string(op) + ": classifier spec given a quadratic batch");
    }
    if (batch.in_dim != spec.in_dim) {
        throw std::invalid_argument(std::string(op) + ": batch feature dim " +
                                    std::to_string(batch.in_dim) + " does not match model in_dim " +
                                    std::to_string(spec.in_dim));
    }
    if (static_cast<int>(w.size()) != spec.param_count()) {
        throw std::invalid_argument(std::string(op) + ": parameter size " + std::to_string(w.size()) +
                                    " does not match spec param_count " +
                                    std::to_string(spec.param_count()));
    }
    for (int y : batch.labels) {
        if (y < 0 || y >= spec.n_classes) {
            throw std::invalid_argument(std::string(op) + ": label " + std::to_string(y) +
                                        " outside [0, " + std::to_string(spec.n_classes) + ")");
        }
    }
}

const Batch& check_quadratic_batch(const ModelSpec& spec, const ParamVector& w, const Batch& batch,
                                   const char* op) {
    if (!batch.is_quadratic()) {
        throw std::invalid_argument(std::string(op) + ": quadratic spec given a classifier batch");
    }
    if (batch.problem->dim != spec.in_dim) {
        throw std::invalid_argument(std::string(op) + ": problem dim does not match spec dim");
    }
    if (static_cast<int>(w.size()) != spec.in_dim) {
        throw std::invalid_argument(std::string(op) + ": parameter size does not match spec dim");
    }
    return batch;
}

// Numerically stable log(sum(exp(z))) with the max factored out.
double log_sum_exp(const double* z, int n) {
    double m = z[0];
    for (int i = 1; i < n; ++i) m = std::max(m, z[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(z[i] - m);
    return m + std::log(s);
}

// Logits for one sample under LinearSoftmax; w = [W (in x C), b (C)].
void linear_logits(const ModelSpec& spec, const ParamVector& w, const double* x, double* z) {
    int c_n = spec.n_classes;
    const double* bias = w.data() + spec.in_dim * c_n;
    for (int c = 0; c < c_n; ++c) z[c] = bias[c];
    for (int j = 0; j < spec.in_dim; ++j) {
        double xj = x[j];
        const double* row = w.data() + j * c_n;
        for (int c = 0; c < c_n; ++c) z[c] += xj * row[c];
    }
}

// Forward pass for the Mlp; w = [W1 (in x H), b1 (H), W2 (H x C), b2 (C)].
// tanh is used as the hidden activation; its smoothness keeps the loss
// gradient Lipschitz, which the convergence diagnostics rely on.
struct MlpLayout {
    int w1, b1, w2, b2;  // offsets
    MlpLayout(const ModelSpec& s)
        : w1(0),
          b1(s.in_dim * s.hidden_dim),
          w2(s.in_dim * s.hidden_dim + s.hidden_dim),
          b2(s.in_dim * s.hidden_dim + s.hidden_dim + s.hidden_dim * s.n_classes) {}
};

void mlp_forward(const ModelSpec& spec, const ParamVector& w, const double* x, double* hidden,
                 double* z) {
    MlpLayout lay(spec);
    int h_n = spec.hidden_dim;
    int c_n = spec.n_classes;
    for (int m = 0; m < h_n; ++m) hidden[m] = w[lay.b1 + m];
    for (int j = 0; j < spec.in_dim; ++j) {
        double xj = x[j];
        const double* row = w.data() + lay.w1 + j * h_n;
        for (int m = 0; m < h_n; ++m) hidden[m] += xj * row[m];
    }
    for (int m = 0; m < h_n; ++m) hidden[m] = std::tanh(hidden[m]);
    for (int c = 0; c < c_n; ++c) z[c] = w[lay.b2 + c];
    for (int m = 0; m < h_n; ++m) {
        double hm = hidden[m];
        const double* row = w.data() + lay.w2 + m * c_n;
        for (int c = 0; c < c_n; ++c) z[c] += hm * row[c];
    }
}

}  // namespace

double forward_loss(const ModelSpec& spec, const ParamVector& w, const Batch& batch) {
    if (spec.kind == ModelKind::QuadraticFamily) {
        const Batch& b = check_quadratic_batch(spec, w, batch, "forward_loss");
        return b.problem->subset_loss(b.problem_clients, w);
    }
    check_classifier_batch(spec, w, batch, "forward_loss");
    int c_n = spec.n_classes;
    std::vector<double> z(c_n), hidden(std::max(spec.hidden_dim, 1));
    double loss = 0.0;
    for (int s = 0; s < batch.n; ++s) {
        const double* x = batch.features.data() + static_cast<std::size_t>(s) * spec.in_dim;
        if (spec.kind == ModelKind::LinearSoftmax) {
            linear_logits(spec, w, x, z.data());
        } else {
            mlp_forward(spec, w, x, hidden.data(), z.data());
        }
        loss += log_sum_exp(z.data(), c_n) - z[batch.labels[s]];
    }
    return loss / batch.n;
}

ParamVector gradient(const ModelSpec& spec, const ParamVector& w, const Batch& batch) {
    if (spec.kind == ModelKind::QuadraticFamily) {
        const Batch& b = check_quadratic_batch(spec, w, batch, "gradient");
        return b.problem->subset_grad(b.problem_clients, w);
    }
    check_classifier_batch(spec, w, batch, "gradient");
    int c_n = spec.n_classes;
    int h_n = spec.hidden_dim;
    ParamVector g(w.size(), 0.0);
    std::vector<double> z(c_n), p(c_n), hidden(std::max(h_n, 1)), dhidden(std::max(h_n, 1));
    for (int s = 0; s < batch.n; ++s) {
        const double* x = batch.features.data() + static_cast<std::size_t>(s) * spec.in_dim;
        int y = batch.labels[s];
        if (spec.kind == ModelKind::LinearSoftmax) {
            linear_logits(spec, w, x, z.data());
        } else {
            mlp_forward(spec, w, x, hidden.data(), z.data());
        }
        double lse = log_sum_exp(z.data(), c_n);
        for (int c = 0; c < c_n; ++c) p[c] = std::exp(z[c] - lse);
        p[y] -= 1.0;  // now p = dLoss/dz for this sample
        if (spec.kind == ModelKind::LinearSoftmax) {
            for (int j = 0; j < spec.in_dim; ++j) {
                double xj = x[j];
                double* row = g.data() + j * c_n;
                for (int c = 0; c < c_n; ++c) row[c] += xj * p[c];
            }
            double* bias = g.data() + spec.in_dim * c_n;
            for (int c = 0; c < c_n; ++c) bias[c] += p[c];
        } else {
            MlpLayout lay(spec);
            for (int m = 0; m < h_n; ++m) {
                double hm = hidden[m];
                double* row = g.data() + lay.w2 + m * c_n;
                const double* wrow = w.data() + lay.w2 + m * c_n;
                double dh = 0.0;
                for (int c = 0; c < c_n; ++c) {
                    row[c] += hm * p[c];
                    dh += wrow[c] * p[c];
                }
                dhidden[m] = dh * (1.0 - hm * hm);  // tanh'(a) = 1 - tanh(a)^2
            }
            for (int c = 0; c < c_n; ++c) g[lay.b2 + c] += p[c];
            for (int j = 0; j < spec.in_dim; ++j) {
                double xj = x[j];
                double* row = g.data() + lay.w1 + j * h_n;
                for (int m = 0; m < h_n; ++m) row[m] += xj * dhidden[m];
            }
            for (int m = 0; m < h_n; ++m) g[lay.b1 + m] += dhidden[m];
        }
    }
    for (double& v : g) v /= batch.n;
    return g;
}

std::vector<double> class_logits(const ModelSpec& spec, const ParamVector& w, const Batch& batch) {
    if (spec.kind == ModelKind::QuadraticFamily) {
        throw std::invalid_argument("class_logits: quadratic family has no classes");
    }
    check_classifier_batch(spec, w, batch, "class_logits");
    int c_n = spec.n_classes;
    std::vector<double> out(static_cast<std::size_t>(batch.n) * c_n);
    std::vector<double> hidden(std::max(spec.hidden_dim, 1));
    for (int s = 0; s < batch.n; ++s) {
        const double* x = batch.features.data() + static_cast<std::size_t>(s) * spec.in_dim;
        double* z = out.data() + static_cast<std::size_t>(s) * c_n;
        if (spec.kind == ModelKind::LinearSoftmax) {
            linear_logits(spec, w, x, z);
        } else {
            mlp_forward(spec, w, x, hidden.data(), z);
        }
    }
    return out;
}

ParamVector finite_diff_gradient(const ModelSpec& spec, const ParamVector& w, const Batch& batch,
                                 double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
    ParamVector g(w.size());
    ParamVector probe = w;
    for (std::size_t i = 0; i < w.size(); ++i) {
        probe[i] = w[i] + h;
        double up = forward_loss(spec, probe, batch);
        probe[i] = w[i] - h;
        double down = forward_loss(spec, probe, batch);
        probe[i] = w[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace fedsim
