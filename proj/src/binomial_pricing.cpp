#include "optfft/binomial_pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flush_denormals.hpp"
#include "optfft/errors.hpp"

namespace optfft {

GridRow leaf_row(const OptionSpec& spec, const BinomialParams& params) {
    GreenTable green(spec, params);
    const std::int64_t T = spec.steps;
    GridRow row;
    row.time_index = T;
    row.col_offset = 0;
    row.values.resize(static_cast<std::size_t>(T + 1));
    for (std::int64_t j = 0; j <= T; ++j)
        row.values[static_cast<std::size_t>(j)] = std::max(green.value(T, j), 0.0);
    return row;
}

Kernel binomial_kernel(const BinomialParams& params) { return Kernel{{params.s0, params.s1}, 0}; }

double baseline_european(const OptionSpec& spec) {
    const detail::FlushDenormals ftz;
    const BinomialParams bp = derive_binomial_params(spec);
    std::vector<double> x = leaf_row(spec, bp).values;
    const double s0 = bp.s0, s1 = bp.s1;
    for (std::int64_t i = spec.steps - 1; i >= 0; --i) {
        double* v = x.data();
        for (std::int64_t j = 0; j <= i; ++j) v[j] = s0 * v[j] + s1 * v[j + 1];
    }
    return x[0];
}

AmericanResult baseline_american_call(const OptionSpec& spec, bool keep_grid) {
    const detail::FlushDenormals ftz;
    const BinomialParams bp = derive_binomial_params(spec);
    const GreenTable table(spec, bp);
    const std::int64_t T = spec.steps;
    const double K = spec.strike;
    const double s0 = bp.s0, s1 = bp.s1;

    // S u^e split by parity of e + T so each row reads a contiguous run:
    // cell (i, j) has e + T = (T - i) + 2j.
    std::vector<double> even(static_cast<std::size_t>(T + 1)), odd(static_cast<std::size_t>(T + 1));
    for (std::int64_t q = 0; q <= 2 * T; ++q) {
        if (q % 2 == 0)
            even[static_cast<std::size_t>(q / 2)] = table.stock(T, q / 2);
        else
            odd[static_cast<std::size_t>(q / 2)] = table.stock(T - 1, q / 2);
    }

    AmericanResult out;
    out.boundary.resize(static_cast<std::size_t>(T + 1));
    if (keep_grid) {
        out.grid.emplace();
        out.grid->value.resize(static_cast<std::size_t>(T + 1));
        out.grid->green.resize(static_cast<std::size_t>(T + 1));
    }

    std::vector<double> cur(static_cast<std::size_t>(T + 1)), nxt(static_cast<std::size_t>(T + 1));
    auto record = [&](std::int64_t i, const std::vector<double>& row, std::int64_t red_count,
                      const std::uint8_t* flags) {
        out.boundary[static_cast<std::size_t>(i)] = BoundaryPoint{i, red_count - 1};
        if (keep_grid) {
            out.grid->value[static_cast<std::size_t>(i)].assign(row.begin(), row.begin() + i + 1);
            out.grid->green[static_cast<std::size_t>(i)].assign(flags, flags + i + 1);
        }
    };
    std::vector<std::uint8_t> flags(keep_grid ? static_cast<std::size_t>(T + 1) : 0);

    {
        const double* g = even.data();  // row T: e + T = 2j
        std::int64_t reds = 0;
        for (std::int64_t j = 0; j <= T; ++j) {
            const double green = g[j] - K;
            const bool red = 0.0 >= green;
            cur[static_cast<std::size_t>(j)] = red ? 0.0 : green;
            reds += red;
            if (keep_grid) flags[static_cast<std::size_t>(j)] = !red;
        }
        record(T, cur, reds, flags.data());
    }
    for (std::int64_t i = T - 1; i >= 0; --i) {
        const std::int64_t base = T - i;
        const double* g = ((base % 2 == 0) ? even.data() : odd.data()) + base / 2;
        const double* x = cur.data();
        double* y = nxt.data();
        std::int64_t reds = 0;
        if (keep_grid) {
            for (std::int64_t j = 0; j <= i; ++j) {
                const double r = s0 * x[j] + s1 * x[j + 1];
                const double green = g[j] - K;
                const bool red = r >= green;
                y[j] = red ? r : green;
                reds += red;
                flags[static_cast<std::size_t>(j)] = !red;
            }
        } else {
            for (std::int64_t j = 0; j <= i; ++j) {
                const double r = s0 * x[j] + s1 * x[j + 1];
                const double green = g[j] - K;
                y[j] = r >= green ? r : green;
                reds += r >= green;
            }
        }
        cur.swap(nxt);
        record(i, cur, reds, flags.data());
    }
    out.price = cur[0];
    return out;
}

double fast_european(const OptionSpec& spec, const FastEuropeanOptions& opts) {
    const BinomialParams bp = derive_binomial_params(spec);
    const GridRow leaf = leaf_row(spec, bp);
    if (std::all_of(leaf.values.begin(), leaf.values.end(), [](double v) { return v == 0.0; }))
        return 0.0;
    const Kernel k = binomial_kernel(bp);
    LinearStepOptions lso;
    lso.method = opts.method;
    lso.log_tilt = choose_log_tilt(leaf, 0, k, spec.steps);
    return apply_linear_steps(leaf, k, spec.steps, TimeDirection::Backward, lso).values[0];
}

double gaussian_approx_european(const OptionSpec& spec, GaussianWindow window) {
    const BinomialParams bp = derive_binomial_params(spec);
    const auto T = static_cast<double>(spec.steps);
    const double mu = -bp.p * T;
    const double sigma = bp.p * (1.0 - bp.p) * T;
    const double center = -mu;

    std::int64_t lo = 0, hi = spec.steps - 1;
    if (window == GaussianWindow::Standard) {
        const double half = 6.0 * std::sqrt(sigma);
        lo = static_cast<std::int64_t>(std::ceil(std::max(center - half, 0.0)));
        hi = static_cast<std::int64_t>(std::floor(std::min(center + half, T))) - 1;
    }
    if (lo > hi) throw DomainError("Gaussian window is empty; increase steps", "T");

    const double scale = std::exp(-spec.rate * bp.dt * T) / std::sqrt(2.0 * std::numbers::pi * sigma);
    double sum = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
        const auto xd = static_cast<double>(x);
        const double payoff = spec.spot * std::exp((2.0 * xd - T) * bp.log_u) - spec.strike;
        if (payoff <= 0.0) continue;
        sum += payoff * std::exp(-(xd + mu) * (xd + mu) / (2.0 * sigma));
    }
    return scale * sum;
}

double closed_form_european(const OptionSpec& spec) {
    validate_spec(spec);
    if (spec.strike == 0.0)
        throw DomainError("closed form needs ln(K/S); use S e^{-Y E/365} for K = 0", "K");
    const BinomialParams bp = derive_binomial_params(spec);
    const auto T = static_cast<double>(spec.steps);
    const double lnu = bp.log_u;
    const double mu = -bp.p * T;
    const double sigma = bp.p * (1.0 - bp.p) * T;
    const double root = std::sqrt(2.0 * sigma);

    double x_lo = std::ceil(T / 2.0 + std::log(spec.strike / spec.spot) / (2.0 * lnu));
    x_lo = std::max(x_lo, 0.0);
    if (x_lo >= T) return 0.0;

    const double stock_scale = std::exp(std::log(spec.spot) + lnu * (2.0 * (lnu * sigma - mu) - T));
    auto F = [&](double x) {
        const double z = (x + mu) / root;
        return stock_scale * std::erf(z - lnu * root) - spec.strike * std::erf(z);
    };
    const double mT = std::exp(-spec.rate * bp.dt * T);
    return 0.5 * mT * (F(T) - F(x_lo));
}

}  // namespace optfft
