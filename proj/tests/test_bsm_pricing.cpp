#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "optfft/bsm_pricing.hpp"
#include "optfft/errors.hpp"
#include "oracles.hpp"

using namespace optfft;

namespace {

OptionSpec put_spec(std::int64_t T) {
    OptionSpec s;
    s.spot = 100;
    s.strike = 100;
    s.rate = 0.05;
    s.dividend_yield = 0;
    s.volatility = 0.2;
    s.days = 365;
    s.steps = T;
    return s;
}

// Row n of a baseline run as a PutRowState.
PutRowState baseline_state(const BsmResult& r, std::int64_t n) {
    const GridRow& row = (*r.rows)[static_cast<std::size_t>(n)];
    PutRowState st;
    st.time_index = n;
    st.first_col = row.first_col();
    st.last_col = row.last_col();
    st.boundary = r.boundary[static_cast<std::size_t>(n)].index;
    st.red_values.time_index = n;
    st.red_values.col_offset = st.boundary + 1;
    for (std::int64_t k = st.boundary + 1; k <= st.last_col; ++k) st.red_values.values.push_back(row.at(k));
    return st;
}

double ulp(double x) { return std::nextafter(std::abs(x), 2.0 * std::abs(x) + 1.0) - std::abs(x); }

}  // namespace

TEST(Discretize, AtTheMoneyCentersOnStrike) {
    const BsmDiscretization d = discretize_bsm(put_spec(1024), 0.4);
    EXPECT_EQ(d.k_star, 0);
    EXPECT_NEAR(d.d_tau, 0.02 / 1024, 1e-18);
    EXPECT_NEAR(d.d_s, std::sqrt(d.d_tau / 0.4), 1e-15);
    EXPECT_NEAR(d.omega, 2.5, 1e-14);
    EXPECT_LE(std::abs(d.a + d.b + d.c - (1 - d.omega * d.d_tau)), 4 * ulp(1 - d.omega * d.d_tau));
    EXPECT_GE(d.a, 0);
    EXPECT_GE(d.b, 0);
    EXPECT_GE(d.c, 0);
}

TEST(Discretize, ZeroRateCenterWeight) {
    OptionSpec s = put_spec(500);
    s.rate = 0;
    for (double lambda : {0.1, 0.25, 0.5}) {
        const BsmDiscretization d = discretize_bsm(s, lambda);
        EXPECT_EQ(d.omega, 0.0);
        EXPECT_NEAR(d.c, 1 - 2 * lambda, 1e-14);
    }
}

TEST(Discretize, SpotLiesOnTheGrid) {
    oracle::Rng rng(50);
    for (int t = 0; t < 20; ++t) {
        const OptionSpec s = oracle::random_bsm_spec(rng, 1 << (6 + t % 6));
        const BsmDiscretization d = discretize_bsm(s, 0.4);
        EXPECT_NEAR(static_cast<double>(d.k_star) * d.d_s, std::log(s.spot / s.strike), 1e-14);
        const double target = 1 - d.omega * d.d_tau;
        EXPECT_LE(std::abs(d.a + d.b + d.c - target), 4 * ulp(target));
    }
}

TEST(Discretize, Errors) {
    OptionSpec s = put_spec(64);
    EXPECT_THROW(discretize_bsm(s, 0.0), ValidationError);
    EXPECT_THROW(discretize_bsm(s, -0.1), ValidationError);
    s.strike = 0;
    EXPECT_THROW(discretize_bsm(s, 0.4), DomainError);
    s = put_spec(8);
    try {
        discretize_bsm(s, 0.6);
        FAIL() << "expected StabilityError";
    } catch (const StabilityError& e) {
        EXPECT_EQ(e.field(), "c");
        EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
    }
    s = put_spec(4);
    s.spot = 1e-6;
    EXPECT_THROW(discretize_bsm(s, 0.4), DomainError);
}

TEST(GreenValue, Examples) {
    BsmDiscretization d;
    d.d_s = std::numbers::ln2;
    EXPECT_EQ(bsm_green_value(d, 0), 0.0);
    EXPECT_NEAR(bsm_green_value(d, 1), -1.0, 1e-15);
    EXPECT_NEAR(bsm_green_value(d, -2000), 1.0, 1e-15);
}

TEST(InitialRow, PayoffAndBoundary) {
    OptionSpec s = put_spec(16);
    s.spot = 90;
    const BsmDiscretization d = discretize_bsm(s, 0.4);
    const PutRowState st = initial_row(d);
    EXPECT_EQ(st.time_index, 0);
    EXPECT_EQ(st.first_col, d.k_star - 16);
    EXPECT_EQ(st.last_col, d.k_star + 16);
    EXPECT_EQ(st.boundary, 0);
    ASSERT_EQ(st.red_values.size(), st.last_col);
    for (double v : st.red_values.values) EXPECT_EQ(v, 0.0);

    const BsmResult base = baseline_put_fd(s, 0.4, true);
    const GridRow& row0 = base.rows->front();
    EXPECT_EQ(row0.at(0), 0.0);
    for (std::int64_t k = row0.first_col(); k < 0; ++k) {
        EXPECT_GT(row0.at(k), 0.0);
        EXPECT_NEAR(row0.at(k), 1 - std::exp(static_cast<double>(k) * d.d_s), 1e-15);
    }
}

TEST(InitialRow, BoundaryClampedOutsideWindow) {
    OptionSpec s = put_spec(2);
    s.spot = 300;
    const BsmDiscretization d = discretize_bsm(s, 0.4);
    ASSERT_GT(d.k_star - 2, 0);
    const PutRowState st = initial_row(d);
    EXPECT_EQ(st.boundary, st.first_col - 1);
    EXPECT_EQ(st.red_values.size(), 5);
}

TEST(BaselinePut, PayoffFloorAndTheorems) {
    oracle::Rng rng(52);
    for (int t = 0; t < 10; ++t) {
        const OptionSpec s = oracle::random_bsm_spec(rng, 256);
        const BsmDiscretization d = discretize_bsm(s, 0.4);
        const BsmResult r = baseline_put_fd(s, 0.4, true);
        EXPECT_GE(r.price, std::max(s.strike - s.spot, 0.0) - 1e-9);
        EXPECT_EQ(oracle::check_bsm_theorems(d, r), "") << oracle::describe(s);
        EXPECT_EQ(oracle::check_payoff_dominance(d, *r.rows), "") << oracle::describe(s);
        EXPECT_EQ(r.price, s.strike * r.rows->back().values[0]);
    }
}

TEST(BaselinePut, RowsFollowProjectedRule) {
    const OptionSpec s = put_spec(128);
    const BsmDiscretization d = discretize_bsm(s, 0.4);
    const BsmResult r = baseline_put_fd(s, 0.4, true);
    for (std::int64_t n = 1; n <= 128; ++n) {
        const GridRow& prev = (*r.rows)[static_cast<std::size_t>(n - 1)];
        const GridRow& row = (*r.rows)[static_cast<std::size_t>(n)];
        EXPECT_EQ(row.first_col(), -(128 - n));
        EXPECT_EQ(row.last_col(), 128 - n);
        for (std::int64_t k = row.first_col(); k <= row.last_col(); ++k) {
            const double lin = d.c * prev.at(k) + d.a * prev.at(k + 1) + d.b * prev.at(k - 1);
            EXPECT_EQ(row.at(k), std::max(lin, bsm_green_value(d, k)));
        }
    }
}

TEST(BaselinePut, SelfConvergence) {
    const OptionSpec base = put_spec(0);
    double prev_gap = 1e9;
    for (std::int64_t T : {256, 512, 1024}) {
        OptionSpec a = base, b = base;
        a.steps = T;
        b.steps = 2 * T;
        const double gap = std::abs(baseline_put_fd(b).price - baseline_put_fd(a).price);
        EXPECT_LT(gap, prev_gap) << T;
        prev_gap = gap;
    }
}

TEST(SolveBsmTrapezoid, HeightOneIsOneProjectedStep) {
    const OptionSpec s = put_spec(256);
    const BsmDiscretization d = discretize_bsm(s, 0.4);
    const BsmResult r = baseline_put_fd(s, 0.4, true);
    const PutRowState out = solve_bsm_trapezoid(d, baseline_state(r, 40), 1);
    const PutRowState want = baseline_state(r, 41);
    EXPECT_EQ(out.time_index, 41);
    EXPECT_EQ(out.first_col, want.first_col);
    EXPECT_EQ(out.last_col, want.last_col);
    EXPECT_EQ(out.boundary, want.boundary);
    EXPECT_EQ(out.red_values.values, want.red_values.values);
}

TEST(SolveBsmTrapezoid, Height64MatchesBaselineRows) {
    oracle::Rng rng(54);
    for (int t = 0; t < 5; ++t) {
        const OptionSpec s = t == 0 ? put_spec(1024) : oracle::random_bsm_spec(rng, 1024);
        const BsmDiscretization d = discretize_bsm(s, 0.4);
        const BsmResult r = baseline_put_fd(s, 0.4, true);
        const GridRow& payoff = r.rows->front();
        const double tilt = choose_log_tilt(payoff, d.k_star, Kernel{{d.b, d.c, d.a}, -1}, 1024);
        for (std::int64_t n : {1, 300, 700}) {
            const PutRowState out = solve_bsm_trapezoid(d, baseline_state(r, n), 64, {}, tilt);
            const PutRowState want = baseline_state(r, n + 64);
            EXPECT_EQ(out.first_col, want.first_col);
            EXPECT_EQ(out.last_col, want.last_col);
            EXPECT_EQ(out.boundary, want.boundary) << oracle::describe(s) << " row " << n;
            ASSERT_EQ(out.red_values.size(), want.red_values.size());
            // Relative to the largest red value of the row: far out of the
            // money the cells underflow toward zero.
            double scale = 0;
            for (double v : want.red_values.values) scale = std::max(scale, std::abs(v));
            for (std::int64_t k = out.boundary + 1; k <= out.last_col; ++k)
                EXPECT_LE(std::abs(out.red_values.at(k) - want.red_values.at(k)), 1e-9 * scale)
                    << oracle::describe(s) << " row " << n << " col " << k;
        }
    }
}

TEST(SolveBsmTrapezoid, AllRedWindowIsLinearEvolution) {
    const OptionSpec s = put_spec(1024);
    const BsmDiscretization d = discretize_bsm(s, 0.4);
    const BsmResult r = baseline_put_fd(s, 0.4, true);
    const std::int64_t n = 200;
    const GridRow& row = (*r.rows)[static_cast<std::size_t>(n)];
    const std::int64_t f = r.boundary[static_cast<std::size_t>(n)].index;
    PutRowState st;
    st.time_index = n;
    st.first_col = f + 40;
    st.last_col = f + 300;
    st.boundary = st.first_col - 1;
    st.red_values.time_index = n;
    st.red_values.col_offset = st.first_col;
    for (std::int64_t k = st.first_col; k <= st.last_col; ++k) st.red_values.values.push_back(row.at(k));
    const PutRowState out = solve_bsm_trapezoid(d, st, 64);
    LinearStepOptions direct;
    direct.method = LinearMethod::Direct;
    const GridRow lin = apply_linear_steps(st.red_values, Kernel{{d.b, d.c, d.a}, -1}, 64, TimeDirection::Forward, direct);
    EXPECT_EQ(out.boundary, out.first_col - 1);
    ASSERT_EQ(out.red_values.size(), lin.size());
    const double scale = st.red_values.values.front();
    for (std::int64_t k = lin.first_col(); k <= lin.last_col(); ++k)
        EXPECT_LE(std::abs(out.red_values.at(k) - lin.at(k)), 1e-10 * scale);
}

TEST(SolveBsmTrapezoid, NarrowWindowIsGeometryError) {
    const BsmDiscretization d = discretize_bsm(put_spec(64), 0.4);
    PutRowState st = initial_row(d);
    EXPECT_THROW(solve_bsm_trapezoid(d, st, 65), GeometryError);
    st.boundary += 1;
    EXPECT_THROW(solve_bsm_trapezoid(d, st, 4), GeometryError);
}

TEST(FastPut, SmallTIdenticalToBaseline) {
    for (std::int64_t T = 1; T <= 20; ++T) {
        const OptionSpec s = put_spec(T);
        EXPECT_EQ(fast_put_bsm(s).price, baseline_put_fd(s).price) << T;
    }
}

TEST(FastPut, DeskSpecMatchesBaseline) {
    for (std::int64_t T = 1 << 8; T <= 1 << 12; T *= 2) {
        const OptionSpec s = put_spec(T);
        const BsmResult f = fast_put_bsm(s);
        const BsmResult b = baseline_put_fd(s);
        EXPECT_LE(oracle::rel_err(f.price, b.price), 1e-8) << T;
        for (const auto& p : f.boundary)
            EXPECT_EQ(p.index, b.boundary[static_cast<std::size_t>(p.time_index)].index) << T << " row " << p.time_index;
    }
}

TEST(FastPut, DeepInTheMoneyIsIntrinsic) {
    OptionSpec s = put_spec(512);
    s.spot = 40;
    const BsmResult f = fast_put_bsm(s);
    EXPECT_NEAR(f.price, s.strike - s.spot, 1e-9);
}

TEST(FastPut, ParallelBitIdentical) {
    oracle::Rng rng(56);
    for (int t = 0; t < 5; ++t) {
        const OptionSpec s = oracle::random_bsm_spec(rng, 2048);
        BsmFastOptions par;
        par.parallel = true;
        par.parallel_grain = 16;
        const BsmResult a = fast_put_bsm(s), b = fast_put_bsm(s, 0.4, par);
        EXPECT_EQ(a.price, b.price);
        EXPECT_EQ(a.boundary, b.boundary);
    }
}
