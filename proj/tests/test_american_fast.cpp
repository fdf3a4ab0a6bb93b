#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "optfft/american_fast.hpp"
#include "optfft/binomial_pricing.hpp"
#include "optfft/errors.hpp"
#include "oracles.hpp"

using namespace optfft;

namespace {

OptionSpec desk_spec(std::int64_t T) {
    OptionSpec s;
    s.strike = 90;
    s.rate = 0.03;
    s.dividend_yield = 0.07;
    s.volatility = 0.25;
    s.steps = T;
    return s;
}

// Red run [first, last] of row i of a baseline grid.
RedRowState grid_state(const AmericanGrid& g, std::int64_t i, std::int64_t first, std::int64_t last) {
    RedRowState st;
    st.time_index = i;
    st.boundary = last;
    st.red_values.time_index = i;
    st.red_values.col_offset = first;
    const auto& row = g.value[static_cast<std::size_t>(i)];
    st.red_values.values.assign(row.begin() + first, row.begin() + last + 1);
    return st;
}

}  // namespace

TEST(TopRowState, AtTheMoney) {
    OptionSpec s;
    s.steps = 101;
    const RedRowState st = top_row_state(s, derive_binomial_params(s));
    EXPECT_EQ(st.boundary, 50);
    EXPECT_EQ(st.time_index, 101);
    EXPECT_EQ(st.red_values.size(), 51);
}

TEST(TopRowState, WholeRowRedWhenPayoffNeverPositive) {
    OptionSpec s;
    s.strike = 1e5;
    s.steps = 64;
    EXPECT_EQ(top_row_state(s, derive_binomial_params(s)).boundary, 64);
}

TEST(TopRowState, ClosedFormAgreesWithLeafScan) {
    OptionSpec s;
    s.spot = 100;
    s.strike = 90;
    s.steps = 100;
    s.days = 365;
    s.volatility = std::log(1.02) / std::sqrt(0.01);
    const BinomialParams p = derive_binomial_params(s);
    EXPECT_NEAR(p.u, 1.02, 1e-14);
    const auto want = static_cast<std::int64_t>(std::floor((100 + std::log(0.9) / std::log(1.02)) / 2));
    const RedRowState st = top_row_state(s, p);
    EXPECT_EQ(st.boundary, want);
    const GridRow leaf = leaf_row(s, p);
    std::int64_t scanned = -1;
    while (scanned + 1 <= 100 && leaf.at(scanned + 1) == 0.0) ++scanned;
    EXPECT_EQ(st.boundary, scanned);
    for (double v : st.red_values.values) EXPECT_EQ(v, 0.0);
}

TEST(TopRowState, ZeroStrikeIsAllGreen) {
    OptionSpec s;
    s.strike = 0;
    EXPECT_EQ(top_row_state(s, derive_binomial_params(s)).boundary, -1);
}

TEST(SolveTrapezoid, HeightOneIsOneExplicitStep) {
    const OptionSpec s = desk_spec(256);
    const BinomialParams p = derive_binomial_params(s);
    const AmericanResult base = baseline_american_call(s, true);
    const std::int64_t i = 200;
    const std::int64_t b = base.boundary[static_cast<std::size_t>(i)].index;
    const RedRowState out = solve_trapezoid(s, p, {grid_state(*base.grid, i, b, b), 1});
    EXPECT_EQ(out.time_index, i - 1);
    EXPECT_EQ(out.boundary, base.boundary[static_cast<std::size_t>(i - 1)].index);
    for (std::int64_t c = out.red_values.first_col(); c <= out.boundary; ++c)
        EXPECT_EQ(out.red_values.at(c), base.grid->value[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)]);
}

TEST(SolveTrapezoid, Height64MatchesBaselineGrid) {
    oracle::Rng rng(31);
    int checked = 0;
    while (checked < 5) {
        const OptionSpec s = oracle::random_spec(rng, 1024);
        const BinomialParams p = derive_binomial_params(s);
        const AmericanResult base = baseline_american_call(s, true);
        const std::int64_t i = 700;
        const std::int64_t b = base.boundary[static_cast<std::size_t>(i)].index;
        if (b < 63 || b == i) continue;
        ++checked;
        for (std::int64_t first : {b - 63, std::int64_t{0}}) {
            const RedRowState out = solve_trapezoid(s, p, {grid_state(*base.grid, i, first, b), 64});
            const auto& want = base.grid->value[static_cast<std::size_t>(i - 64)];
            EXPECT_EQ(out.time_index, i - 64);
            EXPECT_EQ(out.boundary, base.boundary[static_cast<std::size_t>(i - 64)].index) << oracle::describe(s);
            EXPECT_EQ(out.red_values.first_col(), first);
            EXPECT_EQ(out.red_values.last_col(), out.boundary);
            for (std::int64_t c = first; c <= out.boundary; ++c)
                EXPECT_LE(oracle::rel_err(out.red_values.at(c), want[static_cast<std::size_t>(c)]), 1e-9);
        }
    }
}

TEST(SolveTrapezoid, NoDividendIsPureLinearEvolution) {
    OptionSpec s = desk_spec(512);
    s.dividend_yield = 0;
    const BinomialParams p = derive_binomial_params(s);
    const AmericanResult base = baseline_american_call(s, true);
    const std::int64_t i = 300;
    ASSERT_EQ(base.boundary[static_cast<std::size_t>(i)].index, i);
    const RedRowState in = grid_state(*base.grid, i, 0, i);
    const RedRowState out = solve_trapezoid(s, p, {in, 100});
    LinearStepOptions direct;
    direct.method = LinearMethod::Direct;
    const GridRow lin = apply_linear_steps(in.red_values, binomial_kernel(p), 100, TimeDirection::Backward, direct);
    ASSERT_EQ(out.red_values.size(), lin.size());
    EXPECT_EQ(out.boundary, i - 100);
    // Deep out-of-the-money cells are many orders below the row maximum, so
    // agreement is measured against the row scale.
    const double scale = *std::max_element(lin.values.begin(), lin.values.end());
    for (std::int64_t c = 0; c < lin.size(); ++c) EXPECT_LE(std::abs(out.red_values.at(c) - lin.at(c)), 1e-10 * scale);
}

TEST(SolveTrapezoid, ShortRunIsGeometryError) {
    const OptionSpec s = desk_spec(256);
    const BinomialParams p = derive_binomial_params(s);
    RedRowState st;
    st.time_index = 100;
    st.boundary = 40;
    st.red_values.col_offset = 35;
    st.red_values.values.assign(6, 1.0);
    EXPECT_THROW(solve_trapezoid(s, p, {st, 20}), GeometryError);
    st.boundary = 41;
    EXPECT_THROW(solve_trapezoid(s, p, {st, 2}), GeometryError);
}

TEST(FastAmerican, NoDividendEqualsFastEuropean) {
    OptionSpec s = desk_spec(4096);
    s.dividend_yield = 0;
    EXPECT_EQ(fast_american_call(s).price, fast_european(s));
}

TEST(FastAmerican, SmallTIdenticalToBaseline) {
    for (std::int64_t T = 1; T <= 8; ++T) {
        const OptionSpec s = desk_spec(T);
        EXPECT_EQ(fast_american_call(s).price, baseline_american_call(s).price) << T;
    }
}

TEST(FastAmerican, DeskSpecMatchesBaseline) {
    for (std::int64_t T = 1 << 8; T <= 1 << 13; T *= 2) {
        const OptionSpec s = desk_spec(T);
        const AmericanFastResult f = fast_american_call(s);
        const AmericanResult b = baseline_american_call(s);
        EXPECT_LE(oracle::rel_err(f.price, b.price), 1e-8) << T;
        for (const auto& bp : f.boundary)
            EXPECT_EQ(bp.index, b.boundary[static_cast<std::size_t>(bp.time_index)].index) << T << " row " << bp.time_index;
    }
}

TEST(FastAmerican, PartitionCoversAllButResidual) {
    const OptionSpec s = desk_spec(1 << 12);
    const AmericanFastResult f = fast_american_call(s);
    std::int64_t covered = 0;
    for (auto h : f.stats.heights) covered += h;
    EXPECT_GE(covered, s.steps - 64);
    EXPECT_GT(f.stats.fft_calls, 0);
    EXPECT_GT(f.stats.base_cases, 0);
    // The max rule touches only base cases and the edge rows, a small
    // fraction of the T^2 / 2 lattice cells.
    EXPECT_LT(f.stats.base_max_cells + f.stats.edge_max_cells, s.steps * s.steps / 20);
    for (std::size_t k = 1; k < f.boundary.size(); ++k) {
        const auto& up = f.boundary[k - 1];
        const auto& down = f.boundary[k];
        EXPECT_LT(down.time_index, up.time_index);
    }
}

TEST(FastAmerican, ParallelBitIdentical) {
    oracle::Rng rng(41);
    for (int t = 0; t < 5; ++t) {
        const OptionSpec s = oracle::random_spec(rng, 4096);
        AmericanFastOptions par;
        par.parallel = true;
        par.parallel_grain = 16;
        const AmericanFastResult a = fast_american_call(s), b = fast_american_call(s, par);
        EXPECT_EQ(a.price, b.price);
        EXPECT_EQ(a.boundary, b.boundary);
    }
}
