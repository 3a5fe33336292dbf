#include "fedsim/algorithms.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

AlgorithmSpec AlgorithmSpec::fedavg() { return {}; }

AlgorithmSpec AlgorithmSpec::fedsam(double rho) {
    AlgorithmSpec s;
    s.perturbation = {PerturbKind::LocalGrad, rho};
    return s;
}

AlgorithmSpec AlgorithmSpec::fedlesam(double rho) {
    AlgorithmSpec s;
    s.perturbation = {PerturbKind::GlobalEstimate, rho};
    return s;
}

AlgorithmSpec AlgorithmSpec::scaffold() {
    AlgorithmSpec s;
    s.correction = {CorrectionKind::ScaffoldVR, 0.0};
    return s;
}

AlgorithmSpec AlgorithmSpec::fedgamma(double rho) {
    AlgorithmSpec s;
    s.perturbation = {PerturbKind::LocalGrad, rho};
    s.correction = {CorrectionKind::ScaffoldVR, 0.0};
    return s;
}

AlgorithmSpec AlgorithmSpec::fedlesam_s(double rho) {
    AlgorithmSpec s;
    s.perturbation = {PerturbKind::GlobalEstimate, rho};
    s.correction = {CorrectionKind::ScaffoldVR, 0.0};
    return s;
}

AlgorithmSpec AlgorithmSpec::feddyn(double beta) {
    AlgorithmSpec s;
    s.correction = {CorrectionKind::DynRegularizer, beta};
    return s;
}

AlgorithmSpec AlgorithmSpec::fedlesam_d(double rho, double beta) {
    AlgorithmSpec s;
    s.perturbation = {PerturbKind::GlobalEstimate, rho};
    s.correction = {CorrectionKind::DynRegularizer, beta};
    return s;
}

std::string AlgorithmSpec::name() const {
    switch (correction.kind) {
        case CorrectionKind::None:
            switch (perturbation.kind) {
                case PerturbKind::None: return "fedavg";
                case PerturbKind::LocalGrad: return "fedsam";
                case PerturbKind::GlobalEstimate: return "fedlesam";
            }
            break;
        case CorrectionKind::ScaffoldVR:
            switch (perturbation.kind) {
                case PerturbKind::None: return "scaffold";
                case PerturbKind::LocalGrad: return "fedgamma";
                case PerturbKind::GlobalEstimate: return "fedlesam-s";
            }
            break;
        case CorrectionKind::DynRegularizer:
            switch (perturbation.kind) {
                case PerturbKind::None: return "feddyn";
                case PerturbKind::LocalGrad: return "fedsam+dyn";  // constructible, not a named algorithm
                case PerturbKind::GlobalEstimate: return "fedlesam-d";
            }
            break;
    }
    throw std::logic_error("AlgorithmSpec: unknown rule combination");
}

void AlgorithmSpec::validate() const {
    if (!(perturbation.rho >= 0.0) || !std::isfinite(perturbation.rho)) {
        throw std::invalid_argument("AlgorithmSpec: rho must be finite and non-negative");
    }
    if (correction.kind == CorrectionKind::DynRegularizer &&
        (!(correction.beta > 0.0) || !std::isfinite(correction.beta))) {
        throw std::invalid_argument("AlgorithmSpec: beta must be finite and positive");
    }
}

int gradient_eval_count(const AlgorithmSpec& spec) {
    return spec.perturbation.kind == PerturbKind::LocalGrad ? 2 : 1;
}

ClientState ClientState::zeros(std::size_t param_count) {
    ClientState s;
    s.w_old.assign(param_count, 0.0);
    s.control.assign(param_count, 0.0);
    s.dual.assign(param_count, 0.0);
    return s;
}

ParamVector local_perturbation(const ParamVector& grad, double rho) {
    if (!(rho >= 0.0)) throw std::invalid_argument("local_perturbation: rho must be non-negative");
    return scale(unit_or_zero(grad), rho);
}

ParamVector global_perturbation_estimate(const ParamVector& w_old, const ParamVector& w_t,
                                         double rho) {
    if (!(rho >= 0.0)) {
        throw std::invalid_argument("global_perturbation_estimate: rho must be non-negative");
    }
    return scale(unit_or_zero(sub(w_old, w_t)), rho);
}

LocalRoundResult local_round(const AlgorithmSpec& alg, const ModelSpec& model,
                             const ParamVector& w_t, const ClientState& state,
                             const ParamVector& server_control, const std::vector<Batch>& batches,
                             double eta_l, bool record_trace) {
    alg.validate();
    if (!(eta_l > 0.0)) throw std::invalid_argument("local_round: eta_l must be positive");
    if (batches.empty()) throw std::invalid_argument("local_round: no batches");
    const std::size_t p = w_t.size();
    if (static_cast<int>(p) != model.param_count()) {
        throw std::invalid_argument("local_round: parameter size does not match model");
    }
    if (state.w_old.size() != p || state.control.size() != p || state.dual.size() != p) {
        throw std::invalid_argument("local_round: client state size does not match model");
    }
    const bool scaffold_vr = alg.correction.kind == CorrectionKind::ScaffoldVR;
    const bool dyn = alg.correction.kind == CorrectionKind::DynRegularizer;
    if (scaffold_vr && server_control.size() != p) {
        throw std::invalid_argument("local_round: server control size does not match model");
    }

    // The global-estimate direction is frozen before the first step; every
    // step of the round perturbs along the same vector.
    ParamVector round_delta;
    if (alg.perturbation.kind == PerturbKind::GlobalEstimate) {
        round_delta = global_perturbation_estimate(state.w_old, w_t, alg.perturbation.rho);
    }

    LocalRoundResult res;
    res.state = state;
    ParamVector w = w_t;
    for (const Batch& b : batches) {
        if (record_trace) res.trace.iterates.push_back(w);
        ParamVector delta;
        switch (alg.perturbation.kind) {
            case PerturbKind::None:
                delta.assign(p, 0.0);
                break;
            case PerturbKind::LocalGrad: {
                ParamVector g0 = gradient(model, w, b);
                ++res.grad_evals;
                delta = local_perturbation(g0, alg.perturbation.rho);
                break;
            }
            case PerturbKind::GlobalEstimate:
                delta = round_delta;
                break;
        }
        if (record_trace) res.trace.unit_deltas.push_back(unit_or_zero(delta));
        // A zero offset skips the add entirely so that rho = 0 variants follow
        // the base algorithm's arithmetic bit for bit.
        ParamVector g = is_zero(delta) ? gradient(model, w, b) : gradient(model, add(w, delta), b);
        ++res.grad_evals;
        if (dyn) {
            double inv_beta = 1.0 / alg.correction.beta;
            for (std::size_t j = 0; j < p; ++j) {
                double wj = w[j];
                w[j] = wj - eta_l * g[j] - eta_l * (state.dual[j] + inv_beta * (wj - w_t[j]));
            }
        } else if (scaffold_vr) {
            for (std::size_t j = 0; j < p; ++j) {
                w[j] = w[j] - eta_l * g[j] + eta_l * (state.control[j] - server_control[j]);
            }
        } else {
            for (std::size_t j = 0; j < p; ++j) w[j] = w[j] - eta_l * g[j];
        }
    }

    double steps = static_cast<double>(batches.size());
    if (scaffold_vr) {
        double inv = 1.0 / (eta_l * steps);
        for (std::size_t j = 0; j < p; ++j) {
            res.state.control[j] = state.control[j] - server_control[j] + inv * (w_t[j] - w[j]);
        }
    }
    if (dyn) {
        double inv_beta = 1.0 / alg.correction.beta;
        for (std::size_t j = 0; j < p; ++j) {
            res.state.dual[j] = state.dual[j] + inv_beta * (w[j] - w_t[j]);
        }
    }
    if (alg.perturbation.kind == PerturbKind::GlobalEstimate) {
        res.state.w_old = w_t;
    }
    res.w_final = std::move(w);
    return res;
}

}  // namespace fedsim
