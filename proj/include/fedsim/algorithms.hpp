#pragma once

#include <string>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/vec.hpp"

namespace fedsim {

// How a client picks the ascent offset before each descent step.
enum class PerturbKind {
    None,            // plain descent
    LocalGrad,       // normalized gradient of the current batch, recomputed per step
    GlobalEstimate,  // normalized (w_old - w_t), fixed for the whole round
};

// Which drift-correction state enters the descent step.
enum class CorrectionKind {
    None,
    ScaffoldVR,      // control variates C / C_i
    DynRegularizer,  // dual lambda_i plus proximal pull toward w_t
};

struct PerturbationRule {
    PerturbKind kind = PerturbKind::None;
    double rho = 0.0;
};

struct CorrectionRule {
    CorrectionKind kind = CorrectionKind::None;
    double beta = 0.0;  // DynRegularizer only; must be > 0 there
};

// One perturbation rule crossed with one correction rule. The eight named
// combinations are the supported algorithms; name() reports which one this is.
struct AlgorithmSpec {
    PerturbationRule perturbation;
    CorrectionRule correction;

    static AlgorithmSpec fedavg();
    static AlgorithmSpec fedsam(double rho);
    static AlgorithmSpec fedlesam(double rho);
    static AlgorithmSpec scaffold();
    static AlgorithmSpec fedgamma(double rho);
    static AlgorithmSpec fedlesam_s(double rho);
    static AlgorithmSpec feddyn(double beta);
    static AlgorithmSpec fedlesam_d(double rho, double beta);

    std::string name() const;
    void validate() const;
};

// Gradient evaluations one local step costs: 2 when the perturbation itself
// needs a gradient (LocalGrad), 1 otherwise.
int gradient_eval_count(const AlgorithmSpec& spec);

// Per-client state that survives across rounds; all zero-initialized.
struct ClientState {
    ParamVector w_old;    // global model received at this client's previous active round
    ParamVector control;  // C_i
    ParamVector dual;     // lambda_i

    static ClientState zeros(std::size_t param_count);
};

// rho * grad / ||grad||; zero vector when ||grad|| is degenerate.
ParamVector local_perturbation(const ParamVector& grad, double rho);

// rho * (w_old - w_t) / ||w_old - w_t||; zero vector when degenerate.
ParamVector global_perturbation_estimate(const ParamVector& w_old, const ParamVector& w_t,
                                         double rho);

// Per-step record of a local round, for diagnostics only: the iterate before
// each step and the unit direction of the perturbation actually applied
// (zero vector when no perturbation was applied).
struct LocalTrace {
    std::vector<ParamVector> iterates;
    std::vector<ParamVector> unit_deltas;
};

struct LocalRoundResult {
    ParamVector w_final;
    ClientState state;  // updated client state
    long grad_evals = 0;
    LocalTrace trace;   // filled only when requested
};

// One client's round: |batches| local steps from w_t. Pure in all inputs;
// the returned state carries the post-round bookkeeping (control variate,
// dual, w_old) for the caller to store.
LocalRoundResult local_round(const AlgorithmSpec& alg, const ModelSpec& model,
                             const ParamVector& w_t, const ClientState& state,
                             const ParamVector& server_control, const std::vector<Batch>& batches,
                             double eta_l, bool record_trace = false);

}  // namespace fedsim
