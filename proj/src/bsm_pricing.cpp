#include "optfft/bsm_pricing.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "flush_denormals.hpp"
#include "optfft/errors.hpp"

namespace optfft {
namespace {

// Exercise values for columns [lo, hi], bit-identical to bsm_green_value.
class GreenRow {
public:
    GreenRow(const BsmDiscretization& disc, std::int64_t lo, std::int64_t hi) : lo_(lo) {
        values_.resize(static_cast<std::size_t>(hi - lo + 1));
        for (std::int64_t k = lo; k <= hi; ++k) values_[static_cast<std::size_t>(k - lo)] = bsm_green_value(disc, k);
    }
    double operator()(std::int64_t k) const { return values_[static_cast<std::size_t>(k - lo_)]; }
    const double* at(std::int64_t k) const { return values_.data() + (k - lo_); }

private:
    std::int64_t lo_;
    std::vector<double> values_;
};

Kernel bsm_kernel(const BsmDiscretization& disc) { return Kernel{{disc.b, disc.c, disc.a}, -1}; }

// One projected step of x over [lo - 1, hi + 1] into y over [lo, hi]; returns
// the number of exercise cells.
std::int64_t projected_step(const BsmDiscretization& disc, const double* x, const double* g, double* y,
                            std::int64_t width) {
    std::int64_t greens = 0;
    for (std::int64_t q = 0; q < width; ++q) {
        const double lin = bsm_linear(disc, x[q], x[q + 1], x[q + 2]);
        const bool green = g[q] >= lin;
        y[q] = green ? g[q] : lin;
        greens += green;
    }
    return greens;
}

struct Context {
    const BsmDiscretization& disc;
    const GreenRow& green;
    Kernel kernel;
    LinearStepOptions lso;
    const BsmFastOptions& opts;
};

// Row `n` over [lo, hi]; exercise prefix up to f, red values on [f + 1, hi].
struct Seg {
    std::int64_t n;
    std::int64_t lo;
    std::int64_t hi;
    std::int64_t f;
    std::vector<double> red;
};

std::vector<double> full_values(const Context& ctx, const Seg& s, std::int64_t lo, std::int64_t hi) {
    std::vector<double> v(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t k = lo; k <= hi; ++k)
        v[static_cast<std::size_t>(k - lo)] = k <= s.f ? ctx.green(k) : s.red[static_cast<std::size_t>(k - s.f - 1)];
    return v;
}

Seg explicit_steps(const Context& ctx, const Seg& s, std::int64_t h) {
    std::vector<double> x = full_values(ctx, s, s.lo, s.hi), y(x.size());
    std::int64_t lo = s.lo, hi = s.hi, greens = 0;
    for (std::int64_t step = 0; step < h; ++step) {
        ++lo;
        --hi;
        greens = projected_step(ctx.disc, x.data(), ctx.green.at(lo), y.data(), hi - lo + 1);
        x.swap(y);
    }
    Seg out{s.n + h, lo, hi, lo + greens - 1, {}};
    out.red.assign(x.begin() + (out.f + 1 - lo), x.begin() + (hi - lo + 1));
    return out;
}

Seg clip(const Context& ctx, const Seg& s, std::int64_t lo, std::int64_t hi) {
    Seg r{s.n, lo, hi, std::clamp(s.f, lo - 1, hi), {}};
    if (r.f < hi) r.red = full_values(ctx, s, r.f + 1, hi);
    return r;
}

Seg solve(const Context& ctx, const Seg& s, std::int64_t h);

Seg half_step(const Context& ctx, const Seg& s, std::int64_t h) {
    const std::int64_t lo = s.lo + h, hi = s.hi - h;
    if (lo > hi) throw GeometryError("trapezoid window too narrow for " + std::to_string(h) + " steps");
    const std::int64_t f = s.f;
    const std::int64_t near_lo = std::max(f - h + 1, lo), near_hi = std::min(f + h - 1, hi);
    const std::int64_t fft_lo = std::max(f + h, lo);

    auto linear = [&]() -> std::vector<double> {
        if (fft_lo > hi) return {};
        GridRow in;
        in.time_index = s.n;
        in.col_offset = std::max(f, s.lo);
        in.values = full_values(ctx, s, in.col_offset, s.hi);
        GridRow out = apply_linear_steps(in, ctx.kernel, h, TimeDirection::Forward, ctx.lso);
        if (out.first_col() != fft_lo || out.last_col() != hi)
            throw GeometryError("linear segment misaligned at row " + std::to_string(s.n + h));
        return std::move(out.values);
    };
    auto near = [&]() -> Seg {
        if (near_lo > near_hi) return Seg{s.n + h, near_lo, near_hi, f >= s.hi ? near_hi : near_lo - 1, {}};
        const Seg sub = clip(ctx, s, std::max(s.lo, f - 2 * h + 1), std::min(s.hi, f + 2 * h - 1));
        return solve(ctx, sub, h);
    };

    std::vector<double> lin;
    Seg mid;
    if (ctx.opts.parallel && h >= ctx.opts.parallel_grain) {
        auto task = std::async(std::launch::async, linear);
        mid = near();
        lin = task.get();
    } else {
        lin = linear();
        mid = near();
    }
    if (mid.lo != near_lo || mid.hi != near_hi)
        throw GeometryError("near-boundary segment misaligned at row " + std::to_string(s.n + h));

    Seg out{s.n + h, lo, hi, 0, {}};
    if (near_lo <= near_hi) {
        out.f = mid.f;
    } else {
        out.f = f >= s.hi ? hi : lo - 1;
    }
    out.red = std::move(mid.red);
    if (!lin.empty() && out.f >= fft_lo)
        throw GeometryError("exercise region reaches the linear segment at row " + std::to_string(out.n));
    out.red.insert(out.red.end(), lin.begin(), lin.end());
    if (static_cast<std::int64_t>(out.red.size()) != hi - out.f)
        throw GeometryError("segments do not tile row " + std::to_string(out.n));
    return out;
}

Seg solve(const Context& ctx, const Seg& s, std::int64_t h) {
    if (h <= ctx.opts.base_cutoff) return explicit_steps(ctx, s, h);
    const std::int64_t h1 = h / 2;
    const Seg mid = half_step(ctx, s, h1);
    return half_step(ctx, mid, h - h1);
}

PutRowState to_state(const Seg& s) {
    PutRowState st;
    st.time_index = s.n;
    st.first_col = s.lo;
    st.last_col = s.hi;
    st.boundary = s.f;
    st.red_values.time_index = s.n;
    st.red_values.col_offset = s.f + 1;
    st.red_values.values = s.red;
    return st;
}

Seg from_state(const PutRowState& st) {
    if (st.boundary < st.first_col - 1 || st.boundary > st.last_col)
        throw GeometryError("boundary outside the row window");
    if (st.red_values.size() != st.last_col - st.boundary)
        throw GeometryError("red run does not cover the columns right of the boundary");
    return Seg{st.time_index, st.first_col, st.last_col, st.boundary, st.red_values.values};
}

GridRow payoff_row(const BsmDiscretization& disc, const GreenRow& green) {
    const std::int64_t T = disc.steps;
    GridRow row;
    row.time_index = 0;
    row.col_offset = disc.k_star - T;
    row.values.resize(static_cast<std::size_t>(2 * T + 1));
    for (std::int64_t k = disc.k_star - T; k <= disc.k_star + T; ++k)
        row.values[static_cast<std::size_t>(k - row.col_offset)] = std::max(green(k), 0.0);
    return row;
}

}  // namespace

BsmDiscretization discretize_bsm(const OptionSpec& spec, double lambda) {
    validate_spec(spec);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive", "lambda");
    if (spec.strike == 0.0) throw DomainError("strike K must be positive for the log-price grid", "K");
    const std::int64_t T = spec.steps;
    BsmDiscretization d;
    d.steps = T;
    d.strike = spec.strike;
    d.omega = 2.0 * spec.rate / (spec.volatility * spec.volatility);
    const double tau_max = spec.volatility * spec.volatility * spec.years() / 2.0;
    d.d_tau = tau_max / static_cast<double>(T);
    d.d_s = std::sqrt(d.d_tau / lambda);

    const double x = std::log(spec.spot / spec.strike);
    const double ratio = x / d.d_s;
    if (std::abs(ratio) > 8.0 * static_cast<double>(T))
        throw DomainError("ln(S/K) lies more than 8T grid steps from the strike", "S");
    d.k_star = static_cast<std::int64_t>(std::trunc(ratio));
    if (d.k_star == 0 && x != 0.0) d.k_star = x > 0.0 ? 1 : -1;
    if (d.k_star != 0) d.d_s = x / static_cast<double>(d.k_star);

    // Unaligned grids keep d_tau / d_s^2 = lambda exactly.
    const double r = d.k_star == 0 ? lambda : d.d_tau / (d.d_s * d.d_s);
    const double drift = (d.omega - 1.0) / 2.0 * d.d_tau / d.d_s;
    d.a = r + drift;
    d.b = r - drift;
    d.c = 1.0 - d.omega * d.d_tau - 2.0 * r;
    auto check = [&](double w, const char* name) {
        if (w < 0.0)
            throw StabilityError(std::string("stencil weight ") + name + " = " + std::to_string(w) +
                                     " is negative; lower lambda or raise T",
                                 name);
    };
    check(d.a, "a");
    check(d.b, "b");
    check(d.c, "c");
    return d;
}

PutRowState initial_row(const BsmDiscretization& disc) {
    const std::int64_t T = disc.steps;
    const GreenRow green(disc, disc.k_star - T, disc.k_star + T);
    const GridRow row = payoff_row(disc, green);
    PutRowState st;
    st.time_index = 0;
    st.first_col = row.first_col();
    st.last_col = row.last_col();
    st.boundary = std::clamp<std::int64_t>(0, st.first_col - 1, st.last_col);
    st.red_values.time_index = 0;
    st.red_values.col_offset = st.boundary + 1;
    st.red_values.values.assign(row.values.begin() + (st.boundary + 1 - st.first_col), row.values.end());
    return st;
}

BsmResult baseline_put_fd(const OptionSpec& spec, double lambda, bool keep_rows) {
    const detail::FlushDenormals ftz;
    const BsmDiscretization disc = discretize_bsm(spec, lambda);
    const std::int64_t T = disc.steps;
    const GreenRow green(disc, disc.k_star - T, disc.k_star + T);
    GridRow row = payoff_row(disc, green);

    BsmResult res;
    if (keep_rows) res.rows.emplace();
    const PutRowState init = initial_row(disc);
    res.boundary.push_back({0, init.boundary});
    if (keep_rows) res.rows->push_back(row);

    std::vector<double> x = row.values, y(x.size());
    std::int64_t lo = row.first_col(), hi = row.last_col();
    for (std::int64_t n = 1; n <= T; ++n) {
        ++lo;
        --hi;
        const std::int64_t greens = projected_step(disc, x.data(), green.at(lo), y.data(), hi - lo + 1);
        x.swap(y);
        res.boundary.push_back({n, lo + greens - 1});
        if (keep_rows) res.rows->push_back(GridRow{n, lo, std::vector<double>(x.begin(), x.begin() + (hi - lo + 1))});
    }
    res.price = disc.strike * x[0];
    return res;
}

PutRowState solve_bsm_trapezoid(const BsmDiscretization& disc, const PutRowState& input, std::int64_t height,
                                const BsmFastOptions& opts, double log_tilt) {
    if (height < 1) throw GeometryError("trapezoid height must be >= 1");
    const GreenRow green(disc, input.first_col, input.last_col);
    SpectrumCache spectra;
    const Context ctx{disc, green, bsm_kernel(disc), {log_tilt, opts.method, &spectra}, opts};
    return to_state(solve(ctx, from_state(input), height));
}

BsmResult fast_put_bsm(const OptionSpec& spec, double lambda, const BsmFastOptions& opts) {
    const BsmDiscretization disc = discretize_bsm(spec, lambda);
    const std::int64_t T = disc.steps;
    const GreenRow green(disc, disc.k_star - T, disc.k_star + T);
    const Kernel kernel = bsm_kernel(disc);
    SpectrumCache spectra;
    const double tilt = choose_log_tilt(payoff_row(disc, green), disc.k_star, kernel, T);
    const Context ctx{disc, green, kernel, {tilt, opts.method, &spectra}, opts};

    BsmResult res;
    Seg s = from_state(initial_row(disc));
    res.boundary.push_back({0, s.f});
    // The first step leaves the payoff kink at column 0; later rows are
    // genuine projected rows.
    s = explicit_steps(ctx, s, 1);
    res.boundary.push_back({s.n, s.f});

    std::int64_t remaining = T - 1;
    while (remaining > 2 * opts.base_cutoff) {
        const std::int64_t h = remaining / 2;
        s = solve(ctx, s, h);
        remaining -= h;
        res.boundary.push_back({s.n, s.f});
    }
    for (; remaining > 0; --remaining) {
        s = explicit_steps(ctx, s, 1);
        res.boundary.push_back({s.n, s.f});
    }
    const double v = s.f >= s.lo ? green(s.lo) : s.red[0];
    res.price = disc.strike * v;
    return res;
}

}  // namespace optfft
