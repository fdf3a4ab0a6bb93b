#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "optfft/core_model.hpp"
#include "optfft/fft_engine.hpp"

namespace optfft {

/// Expiry row: time_index T, columns 0..T, values max(S u^{2j-T} - K, 0).
GridRow leaf_row(const OptionSpec& spec, const BinomialParams& params);

/// The two-point lattice kernel [s0, s1] at offset 0.
Kernel binomial_kernel(const BinomialParams& params);

/// O(T^2) backward induction of the European call.
double baseline_european(const OptionSpec& spec);

/// Full triangular grid of an American run. Row i holds columns 0..i.
struct AmericanGrid {
    std::vector<std::vector<double>> value;
    std::vector<std::vector<std::uint8_t>> green;  ///< 1 where exercise strictly beats continuation
};

struct AmericanResult {
    double price = 0.0;
    /// For binomial calls, index is the last red column of the row: -1 when
    /// the row is entirely green, i when row i is entirely red. Red cells
    /// form a prefix of each row, so the first green column is index + 1.
    /// The baseline records rows T..0 in ascending time_index order; the
    /// fast solver records only trapezoid interfaces.
    BoundarySeries boundary;
    std::optional<AmericanGrid> grid;
};

/// O(T^2) American call: each cell takes max(continuation, S u^{2j-i} - K),
/// with ties classified red. `keep_grid` stores every value and colour.
AmericanResult baseline_american_call(const OptionSpec& spec, bool keep_grid = false);

struct FastEuropeanOptions {
    LinearMethod method = LinearMethod::Auto;
};

/// Price via one T-step FFT stencil application to the expiry row.
double fast_european(const OptionSpec& spec, const FastEuropeanOptions& opts = {});

enum class GaussianWindow {
    Standard,  ///< x within 6 standard deviations of the mean up-move count
    Full,      ///< every x in [0, T - 1]
};

/// Normal approximation of the binomial weights: mean p T, variance
/// p (1 - p) T, summed over a window of up-move counts. O(sqrt T) work with
/// the standard window. Throws DomainError when the window is empty.
double gaussian_approx_european(const OptionSpec& spec,
                                GaussianWindow window = GaussianWindow::Standard);

/// The Gaussian sum replaced by its integral from the first in-the-money
/// up-move count to T, in closed form through erf. Throws DomainError for K = 0.
double closed_form_european(const OptionSpec& spec);

}  // namespace optfft
