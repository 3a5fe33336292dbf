// Acceptance suite: one check per release criterion, each printing a single
// [PASS]/[FAIL] line. Run with no arguments for the full list or with a
// criterion number (1-10) for one check. Exit code 0 only when everything
// printed passed.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/metrics.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/rng.hpp"

namespace {

using namespace fedsim;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

void collect_pd(const ExperimentResult& res, std::vector<double>* sink) {
    if (sink == nullptr) return;
    for (const auto& row : res.rows) {
        if (row.pd.has_value()) sink->push_back(*row.pd);
    }
}

ExperimentConfig quad_cfg(const std::string& algorithm) {
    ExperimentConfig cfg;
    cfg.algorithm = algorithm;
    cfg.data = "quadratic";
    return cfg;
}

// ---------------------------------------------------------------- criterion 1

// Analytic gradients against central differences over randomized triples of
// architecture, parameters and batch.
Outcome criterion_gradients() {
    auto t0 = Clock::now();
    double worst = 0.0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        Rng rng(seed_combine({0xacce97u, static_cast<std::uint64_t>(i)}));
        ModelSpec spec;
        Batch batch;
        std::shared_ptr<const QuadraticProblem> prob;
        switch (i % 3) {
            case 0: {
                int dim = 1 + rng.uniform_int(5);
                int clients = 1 + rng.uniform_int(4);
                spec = ModelSpec::quadratic(dim);
                prob = make_quadratic_family(clients, dim, 1.0,
                                             seed_combine({7u, static_cast<std::uint64_t>(i)}));
                batch = Batch::quadratic(prob, prob->all_clients());
                break;
            }
            case 1: {
                int in = 1 + rng.uniform_int(4);
                int classes = 2 + rng.uniform_int(4);
                spec = ModelSpec::linear_softmax(in, classes);
                int n = 1 + rng.uniform_int(16);
                std::vector<double> f(static_cast<std::size_t>(n) * in);
                std::vector<int> y(n);
                for (auto& v : f) v = rng.gaussian();
                for (auto& l : y) l = rng.uniform_int(classes);
                batch = Batch::classification(std::move(f), std::move(y), in);
                break;
            }
            default: {
                int in = 1 + rng.uniform_int(3);
                int hidden = 1 + rng.uniform_int(5);
                int classes = 2 + rng.uniform_int(3);
                spec = ModelSpec::mlp(in, hidden, classes);
                int n = 1 + rng.uniform_int(12);
                std::vector<double> f(static_cast<std::size_t>(n) * in);
                std::vector<int> y(n);
                for (auto& v : f) v = rng.gaussian();
                for (auto& l : y) l = rng.uniform_int(classes);
                batch = Batch::classification(std::move(f), std::move(y), in);
                break;
            }
        }
        ParamVector w = init_params(spec, seed_combine({3u, static_cast<std::uint64_t>(i)}));
        for (auto& v : w) v += 0.3 * rng.gaussian();

        ParamVector g = gradient(spec, w, batch);
        ParamVector fd = finite_diff_gradient(spec, w, batch, 1e-5);
        double base = norm(fd);
        double err = norm(sub(g, fd));
        double rel = base > 1e-8 ? err / base : err;
        worst = std::max(worst, rel);
        if (rel > 1e-4) {
            return {false, fmt("triple %d disagrees: relative error %.3g > 1e-4", i, rel)};
        }
    }
    double secs = seconds_since(t0);
    if (secs >= 10.0) return {false, fmt("took %.1f s, budget is 10 s", secs)};
    return {true, fmt("100 triples, worst relative error %.2e, %.2f s", worst, secs)};
}

// ---------------------------------------------------------------- criterion 2

// Zero-radius variants must reproduce their base method's metrics bytes.
Outcome criterion_reductions(std::vector<double>* pd_sink) {
    struct Pair {
        const char* reduced;
        const char* base;
    };
    const Pair pairs[] = {{"fedlesam", "fedavg"},
                          {"fedlesam-s", "scaffold"},
                          {"fedlesam-d", "feddyn"},
                          {"fedgamma", "scaffold"}};
    for (const Pair& p : pairs) {
        ExperimentConfig reduced = quad_cfg(p.reduced);
        reduced.rho = 0.0;
        reduced.n_clients = 10;
        reduced.active_ratio = 0.5;
        reduced.rounds = 50;
        ExperimentConfig base = reduced;
        base.algorithm = p.base;
        ExperimentResult ra = run_experiment(reduced);
        ExperimentResult rb = run_experiment(base);
        collect_pd(ra, pd_sink);
        collect_pd(rb, pd_sink);
        if (ra.diverged || rb.diverged) {
            return {false, fmt("%s/%s diverged unexpectedly", p.reduced, p.base)};
        }
        if (metrics_csv(ra.rows) != metrics_csv(rb.rows)) {
            return {false, fmt("rho=0 %s does not match %s byte for byte", p.reduced, p.base)};
        }
    }
    return {true, "4 reduction pairs byte-identical over 50 partial-participation rounds"};
}

// ---------------------------------------------------------------- criterion 3

// Gradient evaluations per local step: 2 for local-gradient ascent methods,
// 1 for everything else.
Outcome criterion_budget(std::vector<double>* pd_sink) {
    const char* algorithms[] = {"fedavg",     "fedsam",     "fedlesam", "scaffold",
                                "fedgamma",   "fedlesam-s", "feddyn",   "fedlesam-d"};
    std::string summary;
    for (const char* name : algorithms) {
        ExperimentConfig cfg = quad_cfg(name);
        cfg.rho = 0.1;
        cfg.n_clients = 5;
        cfg.active_ratio = 0.6;
        cfg.rounds = 10;
        cfg.local_epochs = 2;
        ExperimentResult res = run_experiment(cfg);
        collect_pd(res, pd_sink);
        if (res.diverged) return {false, fmt("%s diverged unexpectedly", name)};
        // Full participation of 3 of 5 clients, 2 steps each, every round.
        long expect_steps = 10L * 3 * 2;
        if (res.local_steps != expect_steps) {
            return {false, fmt("%s ran %ld local steps, expected %ld", name, res.local_steps,
                               expect_steps)};
        }
        int per_step = gradient_eval_count(cfg.algorithm_spec());
        if (res.grad_evals != per_step * res.local_steps) {
            return {false, fmt("%s charged %ld gradient evals for %ld steps, expected %dx", name,
                               res.grad_evals, res.local_steps, per_step)};
        }
        summary += fmt("%s=%dx ", name, per_step);
    }
    return {true, summary + "over 60 steps each"};
}

// ---------------------------------------------------------------- criterion 4

// Estimation-error bound on the quadratic family: the squared distance
// between the unit global update and the unit gradient stays below
// 3 sigma_g^2 + 3 L_g^2 eta_g^2 eta_l^2 with both constants in closed form.
Outcome criterion_estimation_bound(std::vector<double>* pd_sink) {
    auto t0 = Clock::now();
    ExperimentConfig cfg = quad_cfg("fedavg");
    cfg.n_clients = 10;
    cfg.active_ratio = 1.0;
    cfg.rounds = 100;
    cfg.local_epochs = 1;
    cfg.eta_l = 0.05;
    cfg.eta_g = 0.05;
    cfg.lr_decay = 1.0;

    ExperimentData data = build_experiment_data(cfg);
    double l_g = data.problem->global_smoothness();
    double slack = 3.0 * l_g * l_g * cfg.eta_g * cfg.eta_g * cfg.eta_l * cfg.eta_l;
    Federation fed(cfg, data);

    double worst_margin = 1e300;
    std::vector<RoundMetrics> rows;
    rows.push_back(fed.metrics_row(0, nullptr));
    for (int t = 0; t < cfg.rounds; ++t) {
        Federation::RoundDiag diag = fed.step(nullptr, true);
        rows.push_back(fed.metrics_row(t + 1, &diag));
        if (!diag.est_error.has_value()) {
            return {false, fmt("round %d produced no estimation error", t)};
        }
        double sigma_g = data.problem->gradient_dissimilarity(fed.global_model());
        double bound = 3.0 * sigma_g * sigma_g + slack;
        worst_margin = std::min(worst_margin, bound - *diag.est_error);
        if (*diag.est_error > bound) {
            return {false, fmt("round %d: estimation error %.3e exceeds bound %.3e", t,
                               *diag.est_error, bound)};
        }
    }
    ExperimentResult shim;
    shim.rows = rows;
    collect_pd(shim, pd_sink);
    double secs = seconds_since(t0);
    if (secs >= 30.0) return {false, fmt("took %.1f s, budget is 30 s", secs)};
    return {true, fmt("bound holds for 100 rounds, smallest margin %.2e, %.2f s", worst_margin,
                      secs)};
}

// ---------------------------------------------------------------- criterion 5

// Directional claim on skewed blobs: frozen global-estimate ascent drifts
// less than per-batch ascent, and its variance-reduced variant is no sharper.
Outcome criterion_drift_and_sharpness(std::vector<double>* pd_sink) {
    auto t0 = Clock::now();
    const int n_seeds = 10;
    int drift_wins = 0;
    int sharpness_wins = 0;
    for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
        double mean_pd_sam = 0.0, mean_pd_lesam = 0.0;
        double mean_sh_sam = 0.0, mean_sh_lesam_s = 0.0;
        struct Entry {
            const char* algorithm;
            double rho;
            double* pd_out;
            double* sh_out;
        };
        Entry entries[] = {{"fedsam", 0.01, &mean_pd_sam, &mean_sh_sam},
                           {"fedlesam", 0.01, &mean_pd_lesam, nullptr},
                           {"fedlesam-s", 0.1, nullptr, &mean_sh_lesam_s}};
        for (const Entry& e : entries) {
            ExperimentConfig cfg;
            cfg.algorithm = e.algorithm;
            cfg.rho = e.rho;
            cfg.data = "blobs";
            cfg.model = "mlp";
            cfg.mlp_hidden = 8;
            cfg.blobs_classes = 4;
            cfg.blobs_per_class = 50;
            cfg.blobs_dim = 2;
            cfg.blobs_spread = 1.0;
            cfg.partition = "dirichlet";
            cfg.dirichlet_beta = 0.1;
            cfg.n_clients = 20;
            cfg.active_ratio = 0.5;
            cfg.rounds = 100;
            cfg.eta_l = 0.1;
            // Several local steps per round: the flatness ordering is a claim
            // about the minima multi-step local training settles into, and it
            // washes out when every round is a single gradient step.
            cfg.batch_size = 5;
            cfg.local_epochs = 5;
            cfg.seed = seed;
            ExperimentResult res = run_experiment(cfg);
            collect_pd(res, pd_sink);
            if (res.diverged) {
                return {false, fmt("%s seed %llu diverged", e.algorithm,
                                   static_cast<unsigned long long>(seed))};
            }
            double pd_sum = 0.0, sh_sum = 0.0;
            int pd_n = 0, sh_n = 0;
            for (const auto& row : res.rows) {
                if (row.round < 10) continue;
                if (row.pd.has_value()) {
                    pd_sum += *row.pd;
                    ++pd_n;
                }
                if (row.sharpness.has_value()) {
                    sh_sum += *row.sharpness;
                    ++sh_n;
                }
            }
            if (pd_n == 0 || sh_n == 0) {
                return {false, fmt("%s seed %llu logged no drift/sharpness rows", e.algorithm,
                                   static_cast<unsigned long long>(seed))};
            }
            if (e.pd_out != nullptr) *e.pd_out = pd_sum / pd_n;
            if (e.sh_out != nullptr) *e.sh_out = sh_sum / sh_n;
        }
        if (mean_pd_lesam < mean_pd_sam) ++drift_wins;
        if (mean_sh_lesam_s <= mean_sh_sam) ++sharpness_wins;
    }
    double secs = seconds_since(t0);
    if (secs >= 300.0) return {false, fmt("took %.1f s, budget is 300 s", secs)};
    if (drift_wins < 8) {
        return {false, fmt("drift lower in only %d/10 seeds (need 8)", drift_wins)};
    }
    if (sharpness_wins < 8) {
        return {false, fmt("sharpness lower in only %d/10 seeds (need 8)", sharpness_wins)};
    }
    return {true, fmt("drift lower in %d/10 seeds, sharpness lower in %d/10, %.1f s", drift_wins,
                      sharpness_wins, secs)};
}

// ---------------------------------------------------------------- criterion 6

// Horizon scaling: with eta_l = 1/(sqrt(T) E L) and eta_g = sqrt(E N), the
// time-averaged gradient norm at T=400 is at most half its T=25 value.
Outcome criterion_horizon_scaling() {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        double means[2] = {0.0, 0.0};
        int idx = 0;
        for (int T : {25, 400}) {
            ExperimentConfig cfg = quad_cfg("fedlesam");
            cfg.rho = 0.01;
            cfg.n_clients = 10;
            cfg.quad_dim = 5;
            cfg.rounds = T;
            cfg.local_epochs = 1;
            cfg.lr_decay = 1.0;
            cfg.seed = seed;
            ExperimentData data = build_experiment_data(cfg);
            double smooth = data.problem->smoothness_max();
            cfg.eta_l = 1.0 / (std::sqrt(static_cast<double>(T)) * cfg.local_epochs * smooth);
            cfg.eta_g = std::sqrt(static_cast<double>(cfg.local_epochs * cfg.n_clients));
            ExperimentResult res = run_experiment(cfg);
            if (res.diverged) {
                return {false, fmt("T=%d seed %llu diverged", T,
                                   static_cast<unsigned long long>(seed))};
            }
            double sum = 0.0;
            for (const auto& row : res.rows) sum += row.grad_norm.value();
            means[idx++] = sum / static_cast<double>(res.rows.size());
        }
        if (!(2.0 * means[1] <= means[0])) {
            return {false, fmt("seed %llu: mean grad norm %.3e at T=400 vs %.3e at T=25 "
                               "(factor %.2f < 2)",
                               static_cast<unsigned long long>(seed), means[1], means[0],
                               means[0] / means[1])};
        }
    }
    return {true, "time-averaged gradient norm halves from T=25 to T=400 on 3/3 seeds"};
}

// ---------------------------------------------------------------- criterion 7

// Partition invariants over randomized feasible cases: exact cover with no
// duplicates, and the hard split deals exactly the requested class count.
Outcome criterion_partitions() {
    auto t0 = Clock::now();
    Rng rng(777);
    int cases = 0;

    for (int i = 0; i < 500; ++i) {
        int n_classes = 2 + rng.uniform_int(9);
        int per_class = 1 + rng.uniform_int(40);
        std::vector<int> labels;
        for (int c = 0; c < n_classes; ++c) labels.insert(labels.end(), per_class, c);
        int n = static_cast<int>(labels.size());
        int n_clients = 1 + rng.uniform_int(std::min(15, n));
        double beta = 0.05 * std::pow(200.0, rng.uniform());
        Partition p = dirichlet_partition(labels, n_clients, beta,
                                          seed_combine({11u, static_cast<std::uint64_t>(i)}));
        p.validate(n);
        ++cases;
    }

    for (int i = 0; i < 500; ++i) {
        int n_classes = 2 + rng.uniform_int(9);
        int alpha = 1 + rng.uniform_int(n_classes);
        // Smallest client count that still covers every class, plus headroom.
        int min_clients = (n_classes + alpha - 1) / alpha;
        int n_clients = min_clients + rng.uniform_int(8);
        int total_shards = n_clients * alpha;
        int max_shards = total_shards / n_classes + (total_shards % n_classes != 0 ? 1 : 0);
        int per_class = max_shards + rng.uniform_int(20);
        std::vector<int> labels;
        for (int c = 0; c < n_classes; ++c) labels.insert(labels.end(), per_class, c);
        Partition p = pathological_partition(labels, n_clients, alpha,
                                             seed_combine({13u, static_cast<std::uint64_t>(i)}));
        p.validate(static_cast<int>(labels.size()));
        for (const auto& idxs : p.client_indices) {
            std::set<int> classes;
            for (int idx : idxs) classes.insert(labels[static_cast<std::size_t>(idx)]);
            if (static_cast<int>(classes.size()) != alpha) {
                return {false, fmt("hard split case %d: a client holds %zu classes, wanted %d", i,
                                   classes.size(), alpha)};
            }
        }
        ++cases;
    }

    double secs = seconds_since(t0);
    if (secs >= 20.0) return {false, fmt("took %.1f s, budget is 20 s", secs)};
    return {true, fmt("%d randomized cases hold every invariant, %.2f s", cases, secs)};
}

// ---------------------------------------------------------------- criterion 8

// Every drift value logged by the runs behind criteria 2-5 lies in [0,1].
Outcome criterion_pd_range() {
    std::vector<double> pds;
    Outcome deps[] = {criterion_reductions(&pds), criterion_budget(&pds),
                      criterion_estimation_bound(&pds), criterion_drift_and_sharpness(&pds)};
    for (const Outcome& d : deps) {
        if (!d.pass) return {false, "a prerequisite run failed: " + d.detail};
    }
    if (pds.empty()) return {false, "no drift values were logged"};
    double lo = pds[0], hi = pds[0];
    for (double v : pds) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (!(v >= 0.0 && v <= 1.0)) {
            return {false, fmt("logged drift %.17g escapes [0,1]", v)};
        }
    }
    return {true, fmt("%zu drift values inside [0,1], min %.3g, max %.3g", pds.size(), lo, hi)};
}

// ---------------------------------------------------------------- criterion 9

// Snapshot bookkeeping: each client's stored global model is the one from its
// previous active round; under full participation that is always the previous
// iterate.
Outcome criterion_snapshots() {
    ExperimentConfig cfg = quad_cfg("fedlesam");
    cfg.rho = 0.05;
    cfg.n_clients = 3;
    cfg.lr_decay = 1.0;

    ExperimentData data = build_experiment_data(cfg);
    Federation fed(cfg, data);
    // Scripted schedule; client 2 idles in round 0, client 0 in round 1.
    const std::vector<std::vector<int>> schedule = {{0, 1}, {1, 2}, {0, 2}, {0, 1, 2}};
    std::vector<ParamVector> expected(3, ParamVector(fed.global_model().size(), 0.0));
    for (const auto& active : schedule) {
        ParamVector before = fed.global_model();
        fed.step(&active);
        for (int id : active) expected[static_cast<std::size_t>(id)] = before;
        for (int id = 0; id < 3; ++id) {
            if (fed.client_state(id).w_old != expected[static_cast<std::size_t>(id)]) {
                return {false, fmt("client %d holds a stale snapshot after a scripted round", id)};
            }
        }
    }

    Federation full(cfg, data);
    for (int t = 0; t < 5; ++t) {
        ParamVector before = full.global_model();
        full.step();
        for (int id = 0; id < 3; ++id) {
            if (full.client_state(id).w_old != before) {
                return {false,
                        fmt("round %d: full participation did not refresh client %d", t, id)};
            }
        }
    }
    return {true, "scripted and full-participation snapshots both track the last active round"};
}

// --------------------------------------------------------------- criterion 10

// Re-running a config yields byte-identical metrics.
Outcome criterion_rerun_identity() {
    std::vector<ExperimentConfig> cfgs;

    ExperimentConfig a = quad_cfg("fedlesam-d");
    a.rho = 0.1;
    a.beta = 10.0;
    a.n_clients = 7;
    a.active_ratio = 0.4;
    a.rounds = 12;
    a.metric_every = 3;
    cfgs.push_back(a);

    ExperimentConfig b;
    b.algorithm = "fedgamma";
    b.rho = 0.1;
    b.data = "blobs";
    b.model = "mlp";
    b.blobs_classes = 3;
    b.blobs_per_class = 20;
    b.n_clients = 6;
    b.active_ratio = 0.5;
    b.rounds = 8;
    b.batch_size = 7;
    b.local_epochs = 2;
    b.seed = 5;
    cfgs.push_back(b);

    ExperimentConfig c;
    c.algorithm = "scaffold";
    c.data = "blobs";
    c.model = "linear";
    c.blobs_classes = 4;
    c.blobs_per_class = 10;
    c.n_clients = 5;
    c.rounds = 6;
    c.batch_size = 0;
    c.lr_decay = 0.9;
    c.partition = "pathological";
    c.pathological_classes = 2;
    cfgs.push_back(c);

    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        ExperimentResult r1 = run_experiment(cfgs[i]);
        ExperimentResult r2 = run_experiment(cfgs[i]);
        if (r1.diverged || r2.diverged) {
            return {false, fmt("config %zu diverged unexpectedly", i)};
        }
        if (metrics_csv(r1.rows) != metrics_csv(r2.rows)) {
            return {false, fmt("config %zu produced different bytes on the second run", i)};
        }
    }
    return {true, "3 configs re-ran to byte-identical metrics"};
}

Outcome run_criterion(int n, std::vector<double>* /*unused*/ = nullptr) {
    switch (n) {
        case 1: return criterion_gradients();
        case 2: return criterion_reductions(nullptr);
        case 3: return criterion_budget(nullptr);
        case 4: return criterion_estimation_bound(nullptr);
        case 5: return criterion_drift_and_sharpness(nullptr);
        case 6: return criterion_horizon_scaling();
        case 7: return criterion_partitions();
        case 8: return criterion_pd_range();
        case 9: return criterion_snapshots();
        case 10: return criterion_rerun_identity();
        default: return {false, "unknown criterion number"};
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    if (argc > 1) {
        int n = std::atoi(argv[1]);
        if (n < 1 || n > 10) {
            std::fprintf(stderr, "usage: %s [criterion 1-10]\n", argv[0]);
            return 2;
        }
        which.push_back(n);
    } else {
        for (int n = 1; n <= 10; ++n) which.push_back(n);
    }

    bool all_pass = true;
    for (int n : which) {
        Outcome o;
        try {
            o = run_criterion(n);
        } catch (const std::exception& e) {
            o = {false, std::string("unhandled exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
