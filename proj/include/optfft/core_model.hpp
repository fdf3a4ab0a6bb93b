#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace optfft {

/// Market inputs for a single option plus the lattice step count.
struct OptionSpec {
    double spot = 100.0;           ///< S, currency, > 0
    double strike = 100.0;         ///< K, currency, >= 0
    double rate = 0.05;            ///< R, per-year fraction
    double dividend_yield = 0.0;   ///< Y, per-year fraction, >= 0
    double volatility = 0.2;       ///< V, per-sqrt(year), > 0
    double days = 365.0;           ///< E, calendar days to expiry, > 0
    std::int64_t steps = 1024;     ///< T, >= 1

    /// Expiry in years (ACT/365).
    double years() const { return days / 365.0; }
};

/// Throws ValidationError naming the first violated field. Field names are
/// the single-letter market symbols (S, K, R, Y, V, E) and T for steps.
void validate_spec(const OptionSpec& spec);

/// Derived constants of the Cox-Ross-Rubinstein lattice.
struct BinomialParams {
    double dt = 0;     ///< years per step
    double log_u = 0;  ///< V * sqrt(dt)
    double u = 0;
    double d = 0;
    double p = 0;      ///< risk-neutral up probability
    double m = 0;      ///< one-step discount e^{-R dt}
    double s0 = 0;     ///< weight of the lower child, m (1 - p)
    double s1 = 0;     ///< weight of the upper child, m p
};

/// dt = E / (365 T); u = e^{V sqrt(dt)}; d = 1/u;
/// p = (e^{(R-Y) dt} - d) / (u - d); m = e^{-R dt}.
/// Throws ValidationError for a bad spec and DomainError when p is not in (0, 1).
BinomialParams derive_binomial_params(const OptionSpec& spec);

/// Immediate-exercise value S u^{2j-i} - K of lattice cell (row i, column j).
double green_value_binomial(const OptionSpec& spec, const BinomialParams& params,
                            std::int64_t i, std::int64_t j);

/// Precomputed S u^e for e in [-T, T]. value(i, j) is bit-identical to
/// green_value_binomial(spec, params, i, j), so baselines and fast solvers
/// classify cells identically.
class GreenTable {
public:
    GreenTable(const OptionSpec& spec, const BinomialParams& params);

    double value(std::int64_t i, std::int64_t j) const {
        return stock_[static_cast<std::size_t>(2 * j - i + steps_)] - strike_;
    }
    /// S u^{2j-i}
    double stock(std::int64_t i, std::int64_t j) const {
        return stock_[static_cast<std::size_t>(2 * j - i + steps_)];
    }
    std::int64_t steps() const { return steps_; }

private:
    std::int64_t steps_;
    double strike_;
    std::vector<double> stock_;
};

/// A contiguous run of cell values at one time level. Column c is stored at
/// values[c - col_offset].
struct GridRow {
    std::int64_t time_index = 0;
    std::int64_t col_offset = 0;
    std::vector<double> values;

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    bool empty() const { return values.empty(); }
    std::int64_t first_col() const { return col_offset; }
    std::int64_t last_col() const { return col_offset + size() - 1; }
    double at(std::int64_t col) const { return values[static_cast<std::size_t>(col - col_offset)]; }
};

/// One recorded red/green divider position.
struct BoundaryPoint {
    std::int64_t time_index;
    std::int64_t index;

    friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;
};

/// Divider positions, one per recorded time level. The meaning of `index`
/// is fixed by the producing pricer (last red column for binomial calls,
/// last green column for BSM puts); see their headers for sentinels.
using BoundarySeries = std::vector<BoundaryPoint>;

}  // namespace optfft
