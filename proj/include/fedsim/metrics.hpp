#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/vec.hpp"

namespace fedsim {

// One emitted metrics row. Optional fields are absent when not computed at
// this round (never zero-filled): the drift/estimation/eta fields describe
// the round that produced this model, so they are absent at round 0, and
// est_error is also absent when its norms are degenerate.
struct RoundMetrics {
    int round = 0;
    std::optional<double> train_loss;
    std::optional<double> test_acc;
    std::optional<double> grad_norm;
    std::optional<double> sharpness;
    std::optional<double> pd;
    std::optional<double> est_error;
    std::optional<double> eta_l;
};

// One-ascent-step sharpness surrogate: F(w + rho * g/||g||) - F(w) on the
// given data, 0 when the gradient is degenerate. rho must be positive.
double global_sharpness(const ModelSpec& model, const ParamVector& w, const Batch& full_data,
                        double rho);

// Mean distance between per-step global and local perturbation directions,
// halved to land in [0,1]: (1 / (2 K E)) * sum_k sum_i ||g_k - l_{i,k}||.
// global_deltas has E entries; local_deltas is K lists of E entries; all unit
// directions (or zero vectors where no direction existed).
double perturbation_drift(const std::vector<ParamVector>& global_deltas,
                          const std::vector<std::vector<ParamVector>>& local_deltas, int K, int E);

// Ascent direction at the virtual global model w_t - eta_g * mean(w_t - w_i),
// scaled to rho: rho * grad/||grad|| on full_data, zero when degenerate.
ParamVector virtual_global_perturbation(const ModelSpec& model, const ParamVector& w_t,
                                        const std::vector<ParamVector>& client_models_at_k,
                                        double eta_g, const Batch& full_data, double rho);

// Squared distance between the unit global-update direction and the unit
// gradient direction at w_cur: ||u(w_prev - w_cur) - u(grad F(w_cur))||^2,
// in [0, 4]. Absent when either norm is degenerate.
std::optional<double> estimation_error(const ParamVector& w_prev, const ParamVector& w_cur,
                                       const ModelSpec& model, const Batch& full_data);

struct SurfacePoint {
    double a = 0.0;
    double b = 0.0;
    double loss = 0.0;
};

struct SurfaceGrid {
    std::vector<SurfacePoint> points;  // row-major over (a, b)
    int resolution = 0;
};

// Loss over a plane through w spanned by two seeded random orthonormal
// directions, sampled on a resolution x resolution grid over
// [-extent, extent]^2. resolution must be odd so the center cell is w itself.
SurfaceGrid loss_surface_grid(const ModelSpec& model, const ParamVector& w, const Batch& full_data,
                              int resolution, double extent, std::uint64_t seed);

// Fraction of argmax-correct predictions, ties broken toward the lowest
// class index. Rejects quadratic-family specs (no labels to score).
double test_accuracy(const ModelSpec& model, const ParamVector& w, const Batch& test_data);

// CSV renderings; these strings are the on-disk formats, byte for byte.
std::string metrics_csv(const std::vector<RoundMetrics>& rows);
std::string surface_csv(const SurfaceGrid& grid);

// 17-significant-digit decimal rendering used by every emitted file.
std::string format_value(double v);

}  // namespace fedsim
