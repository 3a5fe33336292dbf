#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsim/algorithms.hpp"
#include "fedsim/data.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

// Full description of one experiment. Field semantics and defaults mirror
// the config-file keys one to one; validate() enforces the invariants.
struct ExperimentConfig {
    std::string algorithm = "fedavg";
    double rho = 0.0;    // perturbation radius
    double beta = 10.0;  // dyn regularizer strength

    int n_clients = 10;
    double active_ratio = 1.0;  // in (0, 1]
    int rounds = 50;            // >= 0
    int local_epochs = 1;
    int batch_size = 10;  // <= 0 means full batch
    double eta_l = 0.1;
    double eta_g = 1.0;
    double lr_decay = 0.998;  // in (0, 1]
    std::uint64_t seed = 0;
    int metric_every = 1;    // cadence for metric rows past round 0
    double probe_rho = 0.1;  // sharpness probe radius; 0 disables the probe

    std::string model;  // "quadratic" | "linear" | "mlp"
    int mlp_hidden = 8;

    std::string data;  // "quadratic" | "blobs"
    int quad_dim = 5;
    double quad_heterogeneity = 1.0;
    int blobs_classes = 4;
    int blobs_per_class = 50;
    int blobs_dim = 2;
    double blobs_spread = 1.0;
    int test_per_class = 100;
    std::string partition = "dirichlet";  // "dirichlet" | "pathological"
    double dirichlet_beta = 0.3;
    int pathological_classes = 2;

    bool save_surface = false;
    int surface_resolution = 21;
    double surface_extent = 1.0;
    bool save_partition = false;

    void validate() const;
    AlgorithmSpec algorithm_spec() const;
    ModelSpec model_spec() const;
};

// Materialized data for one experiment: exactly one of (train/partition) or
// problem is populated, matching the config's data kind.
struct ExperimentData {
    ModelSpec model;
    std::optional<LabeledDataset> train;
    std::optional<LabeledDataset> test;
    std::optional<Partition> partition;
    std::shared_ptr<const QuadraticProblem> problem;
    Batch full_train;                // whole training objective, for diagnostics
    std::optional<Batch> full_test;  // classifiers only
};

ExperimentData build_experiment_data(const ExperimentConfig& cfg);

// Raised when the global model leaves the representable regime.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int round, const std::string& what) : std::runtime_error(what), round_(round) {}
    int round() const { return round_; }

private:
    int round_;
};

struct ServerState {
    ParamVector w;
    ParamVector control;  // scaffold C
    ParamVector dual;     // dyn lambda
    int round = 0;
    std::vector<ClientState> clients;
};

// K = max(1, nearest(active_ratio * n_clients)) distinct ids, uniform without
// replacement, keyed by (seed, round), ascending.
std::vector<int> sample_active_clients(int n_clients, double active_ratio, int round,
                                       std::uint64_t seed);

// w_next = w_t - eta_g * mean_i(w_t - locals[i]).
ParamVector aggregate(const ParamVector& w_t, const std::vector<ParamVector>& locals, double eta_g);

// C + (1 / n_clients) * sum(delta_Cs); deltas come from active clients only.
ParamVector server_control_update(const ParamVector& control,
                                  const std::vector<ParamVector>& delta_Cs, int n_clients);

// lambda - (1 / (beta * K)) * sum_i(locals[i] - w_t).
ParamVector server_dual_update(const ParamVector& lambda, const ParamVector& w_t,
                               const std::vector<ParamVector>& locals, double beta);

// eta_l_initial * decay^round.
double lr_schedule(double eta_l_initial, double decay, int round);

// Drives the round loop over owned server/client state. step() executes one
// round; tests may force the active-client list to script participation.
class Federation {
public:
    Federation(ExperimentConfig cfg, ExperimentData data);

    struct RoundDiag {
        std::optional<double> pd;
        std::optional<double> est_error;
        double eta_l = 0.0;
    };

    // Runs round state().round. When diagnostics is set, per-step traces are
    // recorded and pd/est_error computed. forced_active, when given, must be
    // strictly ascending valid ids.
    RoundDiag step(const std::vector<int>* forced_active = nullptr, bool diagnostics = false);

    // Static metrics of the current global model, as the row for round_index.
    RoundMetrics metrics_row(int round_index, const RoundDiag* diag) const;

    const ServerState& state() const { return state_; }
    const ParamVector& global_model() const { return state_.w; }
    const ClientState& client_state(int client) const { return state_.clients.at(client); }
    long total_grad_evals() const { return total_grad_evals_; }
    long total_local_steps() const { return total_local_steps_; }
    const ExperimentConfig& config() const { return cfg_; }
    const ExperimentData& data() const { return data_; }

private:
    ExperimentConfig cfg_;
    ExperimentData data_;
    AlgorithmSpec alg_;
    ServerState state_;
    long total_grad_evals_ = 0;
    long total_local_steps_ = 0;
};

struct ExperimentResult {
    std::vector<RoundMetrics> rows;
    bool diverged = false;
    int divergence_round = -1;
    std::string message;
    int rounds_completed = 0;
    long grad_evals = 0;
    long local_steps = 0;
    ParamVector final_w;
};

// Full experiment: round 0 row, then T rounds with rows at the metric
// cadence (and always at the final round). On divergence the result carries
// the rows collected so far plus the failing round.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Plain-text checkpoint: line 1 "round=<t>", line 2 the parameter values.
void write_checkpoint(const std::string& path, int round, const ParamVector& w);
std::pair<int, ParamVector> read_checkpoint(const std::string& path);

}  // namespace fedsim
