#include "fedsim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fedsim/algorithms.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

double global_sharpness(const ModelSpec& model, const ParamVector& w, const Batch& full_data,
                        double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("global_sharpness: rho must be positive");
    ParamVector g = gradient(model, w, full_data);
    if (norm(g) < kDegenerateNorm) return 0.0;
    ParamVector probe = add(w, local_perturbation(g, rho));
    return forward_loss(model, probe, full_data) - forward_loss(model, w, full_data);
}

double perturbation_drift(const std::vector<ParamVector>& global_deltas,
                          const std::vector<std::vector<ParamVector>>& local_deltas, int K, int E) {
    if (K <= 0 || E <= 0) throw std::invalid_argument("perturbation_drift: K and E must be positive");
    if (static_cast<int>(global_deltas.size()) != E) {
        throw std::invalid_argument("perturbation_drift: expected one global delta per step");
    }
    if (static_cast<int>(local_deltas.size()) != K) {
        throw std::invalid_argument("perturbation_drift: expected one delta list per client");
    }
    double acc = 0.0;
    for (int i = 0; i < K; ++i) {
        if (static_cast<int>(local_deltas[i].size()) != E) {
            throw std::invalid_argument("perturbation_drift: client delta list length mismatch");
        }
        for (int k = 0; k < E; ++k) {
            acc += norm(sub(global_deltas[k], local_deltas[i][k]));
        }
    }
    return acc / (2.0 * K * E);
}

ParamVector virtual_global_perturbation(const ModelSpec& model, const ParamVector& w_t,
                                        const std::vector<ParamVector>& client_models_at_k,
                                        double eta_g, const Batch& full_data, double rho) {
    if (client_models_at_k.empty()) {
        throw std::invalid_argument("virtual_global_perturbation: no client models");
    }
    ParamVector mean_gap(w_t.size(), 0.0);
    for (const auto& wi : client_models_at_k) {
        check_same_size(w_t, wi, "virtual_global_perturbation");
        for (std::size_t j = 0; j < w_t.size(); ++j) mean_gap[j] += w_t[j] - wi[j];
    }
    double inv = 1.0 / static_cast<double>(client_models_at_k.size());
    ParamVector virtual_w(w_t.size());
    for (std::size_t j = 0; j < w_t.size(); ++j) virtual_w[j] = w_t[j] - eta_g * inv * mean_gap[j];
    return local_perturbation(gradient(model, virtual_w, full_data), rho);
}

std::optional<double> estimation_error(const ParamVector& w_prev, const ParamVector& w_cur,
                                       const ModelSpec& model, const Batch& full_data) {
    ParamVector move = sub(w_prev, w_cur);
    if (norm(move) < kDegenerateNorm) return std::nullopt;
    ParamVector g = gradient(model, w_cur, full_data);
    if (norm(g) < kDegenerateNorm) return std::nullopt;
    ParamVector diff = sub(unit_or_zero(move), unit_or_zero(g));
    return dot(diff, diff);
}

SurfaceGrid loss_surface_grid(const ModelSpec& model, const ParamVector& w, const Batch& full_data,
                              int resolution, double extent, std::uint64_t seed) {
    if (resolution < 1 || resolution % 2 == 0) {
        throw std::invalid_argument("loss_surface_grid: resolution must be odd and >= 1");
    }
    if (!(extent > 0.0)) throw std::invalid_argument("loss_surface_grid: extent must be positive");
    Rng rng(seed_combine({seed, stream::kSurfaceDirections, static_cast<std::uint64_t>(w.size())}));
    ParamVector d1 = unit_or_zero(rng.gaussian_vector(w.size()));
    ParamVector d2(w.size(), 0.0);
    for (int attempt = 0; attempt < 32; ++attempt) {
        ParamVector v = rng.gaussian_vector(w.size());
        axpy(v, -dot(v, d1), d1);
        if (norm(v) > 1e-8) {
            d2 = unit_or_zero(v);
            break;
        }
        // A 1-parameter model has no second orthogonal direction; d2 stays 0.
        if (w.size() == 1) break;
    }
    SurfaceGrid grid;
    grid.resolution = resolution;
    grid.points.reserve(static_cast<std::size_t>(resolution) * resolution);
    for (int r = 0; r < resolution; ++r) {
        double a = resolution == 1 ? 0.0 : -extent + 2.0 * extent * r / (resolution - 1);
        for (int c = 0; c < resolution; ++c) {
            double b = resolution == 1 ? 0.0 : -extent + 2.0 * extent * c / (resolution - 1);
            ParamVector probe = w;
            axpy(probe, a, d1);
            axpy(probe, b, d2);
            grid.points.push_back({a, b, forward_loss(model, probe, full_data)});
        }
    }
    return grid;
}

double test_accuracy(const ModelSpec& model, const ParamVector& w, const Batch& test_data) {
    if (!model.is_classifier()) {
        throw std::invalid_argument("test_accuracy: quadratic family has no labels to score");
    }
    std::vector<double> logits = class_logits(model, w, test_data);
    int c_n = model.n_classes;
    int correct = 0;
    for (int s = 0; s < test_data.n; ++s) {
        const double* z = logits.data() + static_cast<std::size_t>(s) * c_n;
        int best = 0;
        for (int c = 1; c < c_n; ++c) {
            if (z[c] > z[best]) best = c;  // strict compare: ties keep the lowest index
        }
        if (best == test_data.labels[s]) ++correct;
    }
    return static_cast<double>(correct) / test_data.n;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void append_field(std::string& out, const std::optional<double>& v, bool leading_comma = true) {
    if (leading_comma) out += ',';
    if (v.has_value()) out += format_value(*v);
}

}  // namespace

std::string metrics_csv(const std::vector<RoundMetrics>& rows) {
    std::string out = "round,train_loss,test_acc,grad_norm,sharpness,pd,est_error,eta_l\n";
    for (const RoundMetrics& r : rows) {
        out += std::to_string(r.round);
        append_field(out, r.train_loss);
        append_field(out, r.test_acc);
        append_field(out, r.grad_norm);
        append_field(out, r.sharpness);
        append_field(out, r.pd);
        append_field(out, r.est_error);
        append_field(out, r.eta_l);
        out += '\n';
    }
    return out;
}

std::string surface_csv(const SurfaceGrid& grid) {
    std::string out = "a,b,loss\n";
    for (const SurfacePoint& p : grid.points) {
        out += format_value(p.a);
        out += ',';
        out += format_value(p.b);
        out += ',';
        out += format_value(p.loss);
        out += '\n';
    }
    return out;
}

}  // namespace fedsim
