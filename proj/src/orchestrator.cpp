#include "fedsim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

constexpr double kDivergenceLimit = 1e12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ExperimentConfig::validate() const {
    algorithm_spec();  // rejects unknown names and bad rho/beta
    require(n_clients >= 1, "n_clients: must be >= 1");
    require(active_ratio > 0.0 && active_ratio <= 1.0, "active_ratio: must lie in (0, 1]");
    require(rounds >= 0, "rounds: must be >= 0");
    require(local_epochs >= 1, "local_epochs: must be >= 1");
    require(eta_l > 0.0, "eta_l: must be positive");
    require(eta_g > 0.0, "eta_g: must be positive");
    require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay: must lie in (0, 1]");
    require(metric_every >= 1, "metric_every: must be >= 1");
    require(rho >= 0.0 && std::isfinite(rho), "rho: must be finite and non-negative");
    require(beta > 0.0 && std::isfinite(beta), "beta: must be positive");
    require(probe_rho >= 0.0, "probe_rho: must be non-negative");
    require(data == "quadratic" || data == "blobs", "data: must be 'quadratic' or 'blobs'");
    if (data == "quadratic") {
        require(model.empty() || model == "quadratic",
                "model: must be 'quadratic' when data is 'quadratic'");
        require(quad_dim >= 1, "quad_dim: must be >= 1");
        require(quad_heterogeneity >= 0.0, "quad_heterogeneity: must be non-negative");
    } else {
        require(model == "linear" || model == "mlp", "model: must be 'linear' or 'mlp' for blobs");
        require(blobs_classes >= 2, "blobs_classes: must be >= 2");
        require(blobs_per_class >= 1, "blobs_per_class: must be >= 1");
        require(blobs_dim >= 1, "blobs_dim: must be >= 1");
        require(blobs_spread > 0.0, "blobs_spread: must be positive");
        require(test_per_class >= 1, "test_per_class: must be >= 1");
        require(mlp_hidden >= 1, "mlp_hidden: must be >= 1");
        require(partition == "dirichlet" || partition == "pathological",
                "partition: must be 'dirichlet' or 'pathological'");
        require(dirichlet_beta > 0.0, "dirichlet_beta: must be positive");
        require(pathological_classes >= 1, "pathological_classes: must be >= 1");
    }
    require(surface_resolution >= 1 && surface_resolution % 2 == 1,
            "surface_resolution: must be odd and >= 1");
    require(surface_extent > 0.0, "surface_extent: must be positive");
    require(!save_partition || data == "blobs",
            "save_partition: requires blobs data (quadratic runs have no sample partition)");
}

AlgorithmSpec ExperimentConfig::algorithm_spec() const {
    if (algorithm == "fedavg") return AlgorithmSpec::fedavg();
    if (algorithm == "fedsam") return AlgorithmSpec::fedsam(rho);
    if (algorithm == "fedlesam") return AlgorithmSpec::fedlesam(rho);
    if (algorithm == "scaffold") return AlgorithmSpec::scaffold();
    if (algorithm == "fedgamma") return AlgorithmSpec::fedgamma(rho);
    if (algorithm == "fedlesam-s") return AlgorithmSpec::fedlesam_s(rho);
    if (algorithm == "feddyn") return AlgorithmSpec::feddyn(beta);
    if (algorithm == "fedlesam-d") return AlgorithmSpec::fedlesam_d(rho, beta);
    throw std::invalid_argument("algorithm: unknown name '" + algorithm + "'");
}

ModelSpec ExperimentConfig::model_spec() const {
    if (data == "quadratic") return ModelSpec::quadratic(quad_dim);
    if (model == "linear") return ModelSpec::linear_softmax(blobs_dim, blobs_classes);
    return ModelSpec::mlp(blobs_dim, mlp_hidden, blobs_classes);
}

ExperimentData build_experiment_data(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentData d;
    d.model = cfg.model_spec();
    if (cfg.data == "quadratic") {
        d.problem = make_quadratic_family(cfg.n_clients, cfg.quad_dim, cfg.quad_heterogeneity,
                                          cfg.seed);
        d.full_train = Batch::quadratic(d.problem, d.problem->all_clients());
        return d;
    }
    d.train = make_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_spread,
                         cfg.seed);
    // The held-out set uses a derived seed so it never collides with training
    // draws while remaining a pure function of the config seed.
    d.test = make_blobs(cfg.blobs_classes, cfg.test_per_class, cfg.blobs_dim, cfg.blobs_spread,
                        seed_combine({cfg.seed, 0x7e57u}));
    if (cfg.partition == "dirichlet") {
        d.partition = dirichlet_partition(d.train->labels, cfg.n_clients, cfg.dirichlet_beta,
                                          cfg.seed);
    } else {
        d.partition = pathological_partition(d.train->labels, cfg.n_clients,
                                             cfg.pathological_classes, cfg.seed);
    }
    d.full_train = d.train->full_batch();
    d.full_test = d.test->full_batch();
    return d;
}

std::vector<int> sample_active_clients(int n_clients, double active_ratio, int round,
                                       std::uint64_t seed) {
    require(n_clients >= 1, "sample_active_clients: n_clients must be >= 1");
    require(active_ratio > 0.0 && active_ratio <= 1.0,
            "sample_active_clients: active_ratio must lie in (0, 1]");
    int k = static_cast<int>(std::lround(active_ratio * n_clients));
    k = std::max(1, std::min(n_clients, k));
    Rng rng(seed_combine({seed, stream::kClientSampling, static_cast<std::uint64_t>(round)}));
    std::vector<int> ids = rng.sample_without_replacement(n_clients, k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

ParamVector aggregate(const ParamVector& w_t, const std::vector<ParamVector>& locals, double eta_g) {
    if (locals.empty()) throw std::invalid_argument("aggregate: no local models");
    ParamVector gap(w_t.size(), 0.0);
    for (const auto& wi : locals) {
        check_same_size(w_t, wi, "aggregate");
        for (std::size_t j = 0; j < w_t.size(); ++j) gap[j] += w_t[j] - wi[j];
    }
    double inv = 1.0 / static_cast<double>(locals.size());
    ParamVector out(w_t.size());
    for (std::size_t j = 0; j < w_t.size(); ++j) out[j] = w_t[j] - eta_g * inv * gap[j];
    return out;
}

ParamVector server_control_update(const ParamVector& control,
                                  const std::vector<ParamVector>& delta_Cs, int n_clients) {
    require(n_clients >= 1, "server_control_update: n_clients must be >= 1");
    ParamVector out = control;
    for (const auto& d : delta_Cs) {
        check_same_size(control, d, "server_control_update");
        axpy(out, 1.0 / n_clients, d);
    }
    return out;
}

ParamVector server_dual_update(const ParamVector& lambda, const ParamVector& w_t,
                               const std::vector<ParamVector>& locals, double beta) {
    require(beta > 0.0, "server_dual_update: beta must be positive");
    if (locals.empty()) throw std::invalid_argument("server_dual_update: no local models");
    ParamVector sum(lambda.size(), 0.0);
    for (const auto& wi : locals) {
        check_same_size(lambda, wi, "server_dual_update");
        for (std::size_t j = 0; j < lambda.size(); ++j) sum[j] += wi[j] - w_t[j];
    }
    ParamVector out = lambda;
    double f = 1.0 / (beta * static_cast<double>(locals.size()));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= f * sum[j];
    return out;
}

double lr_schedule(double eta_l_initial, double decay, int round) {
    require(eta_l_initial > 0.0, "lr_schedule: eta_l_initial must be positive");
    require(decay > 0.0 && decay <= 1.0, "lr_schedule: decay must lie in (0, 1]");
    require(round >= 0, "lr_schedule: round must be >= 0");
    return eta_l_initial * std::pow(decay, round);
}

Federation::Federation(ExperimentConfig cfg, ExperimentData data)
    : cfg_(std::move(cfg)), data_(std::move(data)), alg_(cfg_.algorithm_spec()) {
    cfg_.validate();
    std::size_t p = static_cast<std::size_t>(data_.model.param_count());
    state_.w = init_params(data_.model, cfg_.seed);
    state_.control.assign(p, 0.0);
    state_.dual.assign(p, 0.0);
    state_.round = 0;
    state_.clients.assign(cfg_.n_clients, ClientState::zeros(p));
}

Federation::RoundDiag Federation::step(const std::vector<int>* forced_active, bool diagnostics) {
    const int t = state_.round;
    const double eta = lr_schedule(cfg_.eta_l, cfg_.lr_decay, t);

    std::vector<int> active;
    if (forced_active != nullptr) {
        require(!forced_active->empty(), "step: forced active list is empty");
        for (std::size_t i = 0; i < forced_active->size(); ++i) {
            int id = (*forced_active)[i];
            require(id >= 0 && id < cfg_.n_clients, "step: forced client id out of range");
            require(i == 0 || id > (*forced_active)[i - 1],
                    "step: forced client ids must be strictly ascending");
        }
        active = *forced_active;
    } else {
        active = sample_active_clients(cfg_.n_clients, cfg_.active_ratio, t, cfg_.seed);
    }

    const ParamVector w_before = state_.w;
    std::vector<ParamVector> locals;
    std::vector<ParamVector> delta_controls;
    std::vector<LocalTrace> traces;
    locals.reserve(active.size());

    for (int id : active) {
        std::vector<Batch> batches;
        if (data_.problem) {
            batches.assign(cfg_.local_epochs, Batch::quadratic(data_.problem, {id}));
        } else {
            // Epochs reshuffle independently: each gets its own stream index.
            for (int e = 0; e < cfg_.local_epochs; ++e) {
                std::uint64_t stream_round =
                    static_cast<std::uint64_t>(t) * cfg_.local_epochs + static_cast<std::uint64_t>(e);
                auto epoch = batch_stream(*data_.train, *data_.partition, id, cfg_.batch_size,
                                          cfg_.seed, stream_round);
                for (auto& b : epoch) batches.push_back(std::move(b));
            }
        }
        LocalRoundResult res = local_round(alg_, data_.model, w_before, state_.clients[id],
                                           state_.control, batches, eta, diagnostics);
        total_grad_evals_ += res.grad_evals;
        total_local_steps_ += static_cast<long>(batches.size());
        if (alg_.correction.kind == CorrectionKind::ScaffoldVR) {
            delta_controls.push_back(sub(res.state.control, state_.clients[id].control));
        }
        state_.clients[id] = std::move(res.state);
        // Every sampled client remembers the global model it received this
        // round, regardless of algorithm; only GlobalEstimate reads it back.
        state_.clients[id].w_old = w_before;
        locals.push_back(std::move(res.w_final));
        if (diagnostics) traces.push_back(std::move(res.trace));
    }

    ParamVector w_next = aggregate(w_before, locals, cfg_.eta_g);
    if (alg_.correction.kind == CorrectionKind::ScaffoldVR) {
        state_.control = server_control_update(state_.control, delta_controls, cfg_.n_clients);
    }
    if (alg_.correction.kind == CorrectionKind::DynRegularizer) {
        state_.dual = server_dual_update(state_.dual, w_before, locals, cfg_.beta);
    }

    for (double v : w_next) {
        if (!std::isfinite(v) || std::fabs(v) > kDivergenceLimit) {
            throw DivergenceError(t, "divergence at round " + std::to_string(t) +
                                         ": global model left the stable regime");
        }
    }

    RoundDiag diag;
    diag.eta_l = eta;
    if (diagnostics) {
        // Rectangular view over steps: clients may run different step counts
        // (partition sizes differ), so drift is measured over the shared
        // prefix of steps that every active client performed.
        std::size_t e_min = traces.front().iterates.size();
        for (const auto& tr : traces) e_min = std::min(e_min, tr.iterates.size());
        if (e_min > 0) {
            std::vector<ParamVector> global_deltas;
            std::vector<std::vector<ParamVector>> local_deltas(traces.size());
            for (std::size_t k = 0; k < e_min; ++k) {
                std::vector<ParamVector> models_k;
                models_k.reserve(traces.size());
                for (const auto& tr : traces) models_k.push_back(tr.iterates[k]);
                global_deltas.push_back(virtual_global_perturbation(
                    data_.model, w_before, models_k, cfg_.eta_g, data_.full_train, 1.0));
            }
            for (std::size_t i = 0; i < traces.size(); ++i) {
                local_deltas[i].assign(traces[i].unit_deltas.begin(),
                                       traces[i].unit_deltas.begin() + e_min);
            }
            diag.pd = perturbation_drift(global_deltas, local_deltas,
                                         static_cast<int>(traces.size()),
                                         static_cast<int>(e_min));
        }
        diag.est_error = estimation_error(w_before, w_next, data_.model, data_.full_train);
    }

    state_.w = std::move(w_next);
    state_.round = t + 1;
    return diag;
}

RoundMetrics Federation::metrics_row(int round_index, const RoundDiag* diag) const {
    RoundMetrics m;
    m.round = round_index;
    m.train_loss = forward_loss(data_.model, state_.w, data_.full_train);
    m.grad_norm = norm(gradient(data_.model, state_.w, data_.full_train));
    if (cfg_.probe_rho > 0.0) {
        m.sharpness = global_sharpness(data_.model, state_.w, data_.full_train, cfg_.probe_rho);
    }
    if (data_.full_test.has_value()) {
        m.test_acc = test_accuracy(data_.model, state_.w, *data_.full_test);
    }
    if (diag != nullptr) {
        m.pd = diag->pd;
        m.est_error = diag->est_error;
        m.eta_l = diag->eta_l;
    }
    return m;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    Federation fed(cfg, build_experiment_data(cfg));
    ExperimentResult out;
    out.rows.push_back(fed.metrics_row(0, nullptr));
    for (int t = 0; t < cfg.rounds; ++t) {
        bool emit = ((t + 1) % cfg.metric_every == 0) || (t + 1 == cfg.rounds);
        try {
            Federation::RoundDiag diag = fed.step(nullptr, emit);
            if (emit) out.rows.push_back(fed.metrics_row(t + 1, &diag));
        } catch (const DivergenceError& e) {
            out.diverged = true;
            out.divergence_round = e.round();
            out.message = e.what();
            break;
        }
        out.rounds_completed = t + 1;
    }
    out.grad_evals = fed.total_grad_evals();
    out.local_steps = fed.total_local_steps();
    out.final_w = fed.global_model();
    return out;
}

void write_checkpoint(const std::string& path, int round, const ParamVector& w) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_checkpoint: cannot open " + path);
    f << "round=" << round << "\n";
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (j > 0) f << ' ';
        f << format_value(w[j]);
    }
    f << "\n";
    if (!f) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

std::pair<int, ParamVector> read_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_checkpoint: cannot open " + path);
    std::string header;
    if (!std::getline(f, header) || header.rfind("round=", 0) != 0) {
        throw std::runtime_error("read_checkpoint: missing round header in " + path);
    }
    int round = std::stoi(header.substr(6));
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("read_checkpoint: missing values in " + path);
    std::istringstream vs(line);
    ParamVector w;
    double v;
    while (vs >> v) w.push_back(v);
    if (w.empty()) throw std::runtime_error("read_checkpoint: no parameter values in " + path);
    return {round, std::move(w)};
}

}  // namespace fedsim
