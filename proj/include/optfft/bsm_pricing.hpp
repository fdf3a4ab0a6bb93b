#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "optfft/core_model.hpp"
#include "optfft/fft_engine.hpp"

namespace optfft {

/// Explicit finite-difference grid for the American put in the variables
/// s = ln(x/K), tau = V^2 (E/365 - t) / 2, value v = P/K. Row n is tau = n d_tau.
struct BsmDiscretization {
    double omega = 0;   ///< 2R / V^2
    double d_tau = 0;
    double d_s = 0;
    double a = 0;       ///< weight of column k + 1
    double b = 0;       ///< weight of column k - 1
    double c = 0;       ///< weight of column k
    std::int64_t k_star = 0;  ///< spot column, k_star d_s = ln(S/K)
    std::int64_t steps = 0;
    double strike = 0;
};

/// d_tau = V^2 (E/365) / (2T), provisional d_s = sqrt(d_tau / lambda). The
/// spot column is the provisional ratio truncated toward zero (or +-1 when
/// that gives 0 and S != K) and d_s is then reset so that the spot lies on
/// the grid. lambda <= 0.5 keeps c >= 0 before alignment; larger values are
/// accepted only if every weight stays non-negative. Throws ValidationError
/// for lambda <= 0, DomainError for K = 0 or |k_star| > 8T, StabilityError
/// naming a negative weight.
BsmDiscretization discretize_bsm(const OptionSpec& spec, double lambda = 0.4);

/// 1 - e^{k d_s}, the exercise value of column k.
inline double bsm_green_value(const BsmDiscretization& disc, std::int64_t k) {
    return 1.0 - std::exp(static_cast<double>(k) * disc.d_s);
}

/// c v_k + a v_{k+1} + b v_{k-1}, the continuation value. Shared by every
/// solver so explicit steps agree bit for bit.
inline double bsm_linear(const BsmDiscretization& disc, double vm, double v0, double vp) {
    return disc.c * v0 + disc.a * vp + disc.b * vm;
}

/// Row n of the grid restricted to a column window. Green (exercise)
/// cells are the prefix up to `boundary`; their values are analytic, so only
/// the red suffix is stored. boundary = first_col - 1 means no green cell in
/// the window, boundary = last_col means the window is all green.
struct PutRowState {
    std::int64_t time_index = 0;
    std::int64_t first_col = 0;
    std::int64_t last_col = 0;
    std::int64_t boundary = 0;
    GridRow red_values;  ///< columns [boundary + 1, last_col]
};

/// Row 0 over [k_star - T, k_star + T], values max(1 - e^{k d_s}, 0), with
/// boundary at column 0 clamped into the window.
PutRowState initial_row(const BsmDiscretization& disc);

struct BsmResult {
    double price = 0.0;
    /// One entry per recorded row with the clamped boundary convention of
    /// PutRowState. The baseline records rows 0..T in order.
    BoundarySeries boundary;
    /// Baseline only: every row over its window when requested.
    std::optional<std::vector<GridRow>> rows;
};

/// O(T^2) projected explicit scheme on the shrinking cone of the apex.
/// Ties between continuation and exercise are classified as exercise.
BsmResult baseline_put_fd(const OptionSpec& spec, double lambda = 0.4, bool keep_rows = false);

struct BsmFastOptions {
    std::int64_t base_cutoff = 10;
    bool parallel = false;
    std::int64_t parallel_grain = 4096;
    LinearMethod method = LinearMethod::Auto;
};

/// Advance `input` by `height` rows. Needs height < (window width) / 2.
/// `log_tilt` is forwarded to every FFT application.
PutRowState solve_bsm_trapezoid(const BsmDiscretization& disc, const PutRowState& input, std::int64_t height,
                                const BsmFastOptions& opts = {}, double log_tilt = 0.0);

/// O(T log^2 T) American put: halving trapezoids, then explicit sweeps.
BsmResult fast_put_bsm(const OptionSpec& spec, double lambda = 0.4, const BsmFastOptions& opts = {});

}  // namespace optfft
