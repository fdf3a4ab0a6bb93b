#include "optfft/american_fast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <string>

#include "optfft/errors.hpp"

namespace optfft {
namespace {

struct Context {
    const GreenTable& green;
    Kernel kernel;
    double s0;
    double s1;
    LinearStepOptions lso;
    const AmericanFastOptions& opts;
    std::atomic<std::int64_t> base_cases{0};
    std::atomic<std::int64_t> base_cells{0};
    std::atomic<std::int64_t> fft_calls{0};
};

// Red run of one row: columns [c0, c0 + v.size() - 1].
struct Run {
    std::int64_t row;
    std::int64_t c0;
    std::vector<double> v;

    std::int64_t last() const { return c0 + static_cast<std::int64_t>(v.size()) - 1; }
};

Run explicit_sweeps(Context& ctx, Run run, std::int64_t h) {
    std::vector<double> next;
    std::int64_t cells = 0;
    for (std::int64_t s = 0; s < h; ++s) {
        const std::int64_t r = run.row;
        const std::int64_t b = run.last();
        const std::int64_t limit = std::min(b, r - 1);
        next.clear();
        for (std::int64_t c = run.c0; c <= limit; ++c) {
            const std::size_t q = static_cast<std::size_t>(c - run.c0);
            const double right = c + 1 <= b ? run.v[q + 1] : ctx.green.value(r, c + 1);
            const double red = ctx.s0 * run.v[q] + ctx.s1 * right;
            const double g = ctx.green.value(r - 1, c);
            ++cells;
            if (!(red >= g)) break;
            next.push_back(red);
        }
        run.v.swap(next);
        run.row = r - 1;
    }
    ctx.base_cases.fetch_add(1, std::memory_order_relaxed);
    ctx.base_cells.fetch_add(cells, std::memory_order_relaxed);
    return run;
}

// Cells [c0, last - h] of row `run.row - h`, all of whose cones are red.
std::vector<double> linear_part(Context& ctx, const Run& run, std::int64_t h) {
    if (static_cast<std::int64_t>(run.v.size()) <= h) return {};
    GridRow in;
    in.time_index = run.row;
    in.col_offset = run.c0;
    in.values = run.v;
    ctx.fft_calls.fetch_add(1, std::memory_order_relaxed);
    GridRow out = apply_linear_steps(in, ctx.kernel, h, TimeDirection::Backward, ctx.lso);
    return std::move(out.values);
}

Run suffix(const Run& run, std::int64_t n) {
    Run s;
    s.row = run.row;
    s.c0 = run.last() - n + 1;
    s.v.assign(run.v.end() - n, run.v.end());
    return s;
}

Run solve(Context& ctx, const Run& run, std::int64_t h) {
    const auto len = static_cast<std::int64_t>(run.v.size());
    if (len < h)
        throw GeometryError("trapezoid run of " + std::to_string(len) + " cells is shorter than its height " +
                            std::to_string(h));
    if (h <= ctx.opts.base_cutoff) return explicit_sweeps(ctx, run, h);

    const bool fork = ctx.opts.parallel && h >= ctx.opts.parallel_grain;
    auto half_step = [&](const Run& in, std::int64_t steps) {
        Run out;
        out.row = in.row - steps;
        out.c0 = in.c0;
        Run tail = suffix(in, steps);
        Run sub;
        if (fork) {
            auto lin = std::async(std::launch::async, [&] { return linear_part(ctx, in, steps); });
            sub = solve(ctx, tail, steps);
            out.v = lin.get();
        } else {
            out.v = linear_part(ctx, in, steps);
            sub = solve(ctx, tail, steps);
        }
        if (out.c0 + static_cast<std::int64_t>(out.v.size()) != sub.c0 || sub.row != out.row)
            throw GeometryError("linear segment and sub-trapezoid do not tile row " + std::to_string(out.row));
        out.v.insert(out.v.end(), sub.v.begin(), sub.v.end());
        return out;
    };

    const std::int64_t h1 = h / 2;
    Run mid = half_step(run, h1);
    return half_step(mid, h - h1);
}

// Full row sweep with the max rule on every cell; returns the red count.
std::int64_t full_sweep(const Context& ctx, std::int64_t r, const std::vector<double>& x, std::vector<double>& y) {
    std::int64_t reds = 0;
    y.resize(static_cast<std::size_t>(r));
    for (std::int64_t c = 0; c < r; ++c) {
        const std::size_t q = static_cast<std::size_t>(c);
        const double red = ctx.s0 * x[q] + ctx.s1 * x[q + 1];
        const double g = ctx.green.value(r - 1, c);
        const bool is_red = red >= g;
        y[q] = is_red ? red : g;
        reds += is_red;
    }
    return reds;
}

void flush(const Context& ctx, AmericanFastStats* stats) {
    if (!stats) return;
    stats->base_cases += ctx.base_cases.load();
    stats->base_max_cells += ctx.base_cells.load();
    stats->fft_calls += ctx.fft_calls.load();
}

}  // namespace

RedRowState top_row_state(const OptionSpec& spec, const BinomialParams& params) {
    const std::int64_t T = spec.steps;
    const GreenTable green(spec, params);
    std::int64_t j = -1;
    if (spec.strike > 0.0) {
        const double x = std::floor((static_cast<double>(T) + std::log(spec.strike / spec.spot) / params.log_u) / 2.0);
        j = static_cast<std::int64_t>(std::clamp(x, -1.0, static_cast<double>(T)));
    }
    while (j >= 0 && green.value(T, j) > 0.0) --j;
    while (j < T && green.value(T, j + 1) <= 0.0) ++j;
    RedRowState st;
    st.time_index = T;
    st.boundary = j;
    st.red_values.time_index = T;
    st.red_values.col_offset = 0;
    st.red_values.values.assign(static_cast<std::size_t>(j + 1), 0.0);
    return st;
}

RedRowState solve_trapezoid(const OptionSpec& spec, const BinomialParams& params, const TrapezoidProblem& prob,
                            const AmericanFastOptions& opts, double log_tilt, AmericanFastStats* stats) {
    if (prob.height < 1) throw GeometryError("trapezoid height must be >= 1");
    if (prob.input.red_values.last_col() != prob.input.boundary)
        throw GeometryError("red run does not end at the boundary");
    if (prob.height > prob.input.time_index) throw GeometryError("trapezoid extends below row 0");
    const GreenTable green(spec, params);
    SpectrumCache spectra;
    Context ctx{green, binomial_kernel(params), params.s0, params.s1, {log_tilt, opts.method, &spectra}, opts};
    Run in{prob.input.time_index, prob.input.red_values.col_offset, prob.input.red_values.values};
    Run out = solve(ctx, in, prob.height);
    flush(ctx, stats);
    RedRowState st;
    st.time_index = out.row;
    st.boundary = out.last();
    st.red_values.time_index = out.row;
    st.red_values.col_offset = out.c0;
    st.red_values.values = std::move(out.v);
    return st;
}

AmericanFastResult fast_american_call(const OptionSpec& spec, const AmericanFastOptions& opts) {
    const BinomialParams bp = derive_binomial_params(spec);
    const std::int64_t T = spec.steps;
    AmericanFastResult res;

    const RedRowState top = top_row_state(spec, bp);
    res.boundary.push_back({T, top.boundary});
    if (spec.dividend_yield == 0.0 || top.boundary == T) {
        res.price = fast_european(spec, {opts.method});
        return res;
    }

    const GreenTable green(spec, bp);
    const Kernel kernel = binomial_kernel(bp);
    const double tilt = choose_log_tilt(leaf_row(spec, bp), 0, kernel, T);
    SpectrumCache spectra;
    Context ctx{green, kernel, bp.s0, bp.s1, {tilt, opts.method, &spectra}, opts};
    AmericanFastStats& st = res.stats;

    // Row T -> T-1 over the full row: this transition may move the boundary
    // right, which the trapezoid cone argument does not allow.
    std::vector<double> full(static_cast<std::size_t>(T + 1)), next;
    for (std::int64_t j = 0; j <= T; ++j)
        full[static_cast<std::size_t>(j)] = j <= top.boundary ? 0.0 : green.value(T, j);
    std::int64_t reds = full_sweep(ctx, T, full, next);
    st.edge_max_cells += T;
    st.heights.push_back(1);
    std::int64_t i = T - 1;
    res.boundary.push_back({i, reds - 1});
    Run run{i, 0, std::vector<double>(next.begin(), next.begin() + reds)};

    const auto stop = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(T))));
    while (i > stop) {
        const std::int64_t b = run.last();
        if (b < 0) {
            // No red cell now means none below either.
            st.heights.push_back(i);
            res.price = green.value(0, 0);
            flush(ctx, &st);
            return res;
        }
        if (b == i) {
            ctx.fft_calls.fetch_add(1, std::memory_order_relaxed);
            GridRow row{i, 0, run.v};
            res.price = apply_linear_steps(row, kernel, i, TimeDirection::Backward, ctx.lso).values[0];
            st.heights.push_back(i);
            flush(ctx, &st);
            return res;
        }
        const std::int64_t h = b + 1;
        run = solve(ctx, run, h);
        i -= h;
        st.heights.push_back(h);
        res.boundary.push_back({i, run.last()});
    }

    // Residual triangle.
    full.assign(static_cast<std::size_t>(i + 1), 0.0);
    for (std::int64_t j = 0; j <= i; ++j)
        full[static_cast<std::size_t>(j)] = j <= run.last() ? run.v[static_cast<std::size_t>(j)] : green.value(i, j);
    for (; i > 0; --i) {
        reds = full_sweep(ctx, i, full, next);
        st.edge_max_cells += i;
        full.swap(next);
        res.boundary.push_back({i - 1, reds - 1});
    }
    res.price = full[0];
    flush(ctx, &st);
    return res;
}

}  // namespace optfft
