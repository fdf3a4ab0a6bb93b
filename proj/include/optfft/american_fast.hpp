#pragma once

#include <cstdint>
#include <vector>

#include "optfft/binomial_pricing.hpp"
#include "optfft/core_model.hpp"

namespace optfft {

/// Red cells of lattice row `time_index` from red_values.col_offset through
/// `boundary`, the last red column. At the top of a partition the run
/// starts at column 0; inside a trapezoid it is a suffix of the red run.
/// boundary = -1 means the row has no red cell, boundary = time_index means
/// the whole row is red.
struct RedRowState {
    std::int64_t time_index = 0;
    GridRow red_values;
    std::int64_t boundary = -1;
};

/// Advance `input` by `height` rows toward row 0. The input run must end at
/// the boundary and hold at least `height` cells; the partition passes the
/// whole red run.
struct TrapezoidProblem {
    RedRowState input;
    std::int64_t height = 0;
};

struct AmericanFastOptions {
    std::int64_t base_cutoff = 8;
    bool parallel = false;
    /// Trapezoids at least this tall fork the FFT piece onto another thread
    /// when `parallel` is set.
    std::int64_t parallel_grain = 4096;
    LinearMethod method = LinearMethod::Auto;
};

struct AmericanFastStats {
    std::vector<std::int64_t> heights;    ///< partition heights, top to bottom
    std::int64_t base_cases = 0;          ///< explicit trapezoids solved
    std::int64_t base_max_cells = 0;      ///< cells classified inside base cases
    std::int64_t edge_max_cells = 0;      ///< cells classified in the top step and residual triangle
    std::int64_t fft_calls = 0;           ///< linear multi-step applications
};

struct AmericanFastResult {
    double price = 0.0;
    /// Boundaries of row T, row T - 1, every partition interface and every
    /// residual-triangle row, in decreasing time_index.
    BoundarySeries boundary;
    AmericanFastStats stats;
};

/// Expiry row: boundary is the largest j with S u^{2j-T} - K <= 0 (from the
/// closed form, then confirmed by direct comparison), red values all zero.
RedRowState top_row_state(const OptionSpec& spec, const BinomialParams& params);

/// One trapezoid: FFT steps where the dependency cone is provably red,
/// recursion toward the boundary, explicit max sweeps at `base_cutoff`.
/// `log_tilt` is forwarded to every FFT application.
RedRowState solve_trapezoid(const OptionSpec& spec, const BinomialParams& params,
                            const TrapezoidProblem& prob, const AmericanFastOptions& opts = {},
                            double log_tilt = 0.0, AmericanFastStats* stats = nullptr);

/// O(T log^2 T) American call. Falls back to fast_european when Y = 0 or the
/// expiry row has no exercise cell.
AmericanFastResult fast_american_call(const OptionSpec& spec, const AmericanFastOptions& opts = {});

}  // namespace optfft
