#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "optfft/american_fast.hpp"
#include "optfft/binomial_pricing.hpp"
#include "optfft/bsm_pricing.hpp"
#include "optfft/fft_engine.hpp"

namespace optfft::cli {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

OptionSpec random_spec(Rng& rng, std::int64_t T) {
    OptionSpec s;
    s.spot = uniform(rng, 50, 200);
    s.strike = uniform(rng, 50, 200);
    s.rate = uniform(rng, 0.01, 0.1);
    s.dividend_yield = uniform(rng, 0.01, 0.1);
    s.volatility = uniform(rng, 0.1, 0.5);
    s.days = uniform(rng, 30, 730);
    s.steps = T;
    return s;
}

std::string describe(const OptionSpec& s) {
    std::ostringstream os;
    os << "S=" << format_double(s.spot) << " K=" << format_double(s.strike) << " R=" << format_double(s.rate)
       << " Y=" << format_double(s.dividend_yield) << " V=" << format_double(s.volatility)
       << " E=" << format_double(s.days) << " T=" << s.steps;
    return os.str();
}

double rel(double a, double b) {
    const double d = std::abs(a - b);
    return d == 0.0 ? 0.0 : d / std::max(std::abs(b), std::numeric_limits<double>::min());
}

double ulp(double x) { return std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) - std::abs(x); }

struct Outcome {
    double worst = 0.0;
    std::string failure;  ///< empty while passing
};

// Runs `trial(t, outcome)` for each trial until the first failure.
struct Suite {
    std::string name;
    std::function<void(int, Rng&, Outcome&)> trial;
};

std::vector<std::int64_t> step_grid(std::int64_t max_steps) {
    std::vector<std::int64_t> grid;
    for (std::int64_t T = 64; T <= max_steps; T *= 2) grid.push_back(T);
    if (grid.empty()) grid.push_back(std::max<std::int64_t>(1, max_steps));
    return grid;
}

std::vector<double> naive_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Binomial grid lemmas; returns a description of the first violation.
std::string check_lemmas(const OptionSpec& spec, const AmericanResult& r) {
    const BinomialParams bp = derive_binomial_params(spec);
    const std::int64_t T = spec.steps;
    const auto& G = r.grid->value;
    const auto& green = r.grid->green;
    auto g = [&](std::int64_t i, std::int64_t j) { return green[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] != 0; };
    auto v = [&](std::int64_t i, std::int64_t j) { return G[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
    auto last_red = [&](std::int64_t i) {
        std::int64_t j = 0;
        while (j <= i && !g(i, j)) ++j;
        return j - 1;
    };
    const double floor_offset = (std::log(spec.strike / spec.spot) +
                                 std::log((1.0 - std::exp(-spec.rate * bp.dt)) / (1.0 - std::exp(-spec.dividend_yield * bp.dt)))) /
                                (2.0 * bp.log_u);
    for (std::int64_t i = 0; i <= T; ++i) {
        for (std::int64_t j = 0; j < i; ++j)
            if (g(i, j) && !g(i, j + 1)) return "row green closure at (" + std::to_string(i) + "," + std::to_string(j) + ")";
        if (i <= T - 2) {
            for (std::int64_t j = 0; j <= i; ++j) {
                if (g(i + 1, j) && !g(i, j)) return "column green closure at (" + std::to_string(i) + "," + std::to_string(j) + ")";
                if (!g(i + 1, j + 1) && g(i, j)) return "diagonal red closure at (" + std::to_string(i) + "," + std::to_string(j) + ")";
                if (j < i && v(i, j) < v(i + 2, j + 1) - 1e-12)
                    return "two-step decay at (" + std::to_string(i) + "," + std::to_string(j) + ")";
            }
            const std::int64_t a = last_red(i), b = last_red(i + 1);
            if (!(b - 1 <= a && a <= b)) return "boundary step at row " + std::to_string(i);
        }
        if (i <= T - 1)
            for (std::int64_t j = 0; j <= i; ++j)
                if (g(i, j) && static_cast<double>(j) < static_cast<double>(i) / 2.0 + floor_offset - 1e-9)
                    return "green floor at (" + std::to_string(i) + "," + std::to_string(j) + ")";
    }
    return {};
}

// Interval form of a clamped BSM boundary: sentinels stand for every
// position beyond the window.
std::pair<double, double> boundary_interval(std::int64_t k, std::int64_t lo, std::int64_t hi) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (k < lo) return {-inf, static_cast<double>(k)};
    if (k >= hi) return {static_cast<double>(k), inf};
    return {static_cast<double>(k), static_cast<double>(k)};
}

std::string check_bsm_theorems(const BsmDiscretization& disc, const BsmResult& r) {
    const std::int64_t T = disc.steps;
    for (std::int64_t n = 0; n < T; ++n) {
        const auto [x1, x2] = boundary_interval(r.boundary[static_cast<std::size_t>(n)].index, disc.k_star - (T - n),
                                                disc.k_star + (T - n));
        const auto [y1, y2] = boundary_interval(r.boundary[static_cast<std::size_t>(n + 1)].index,
                                                disc.k_star - (T - n - 1), disc.k_star + (T - n - 1));
        if (x1 - y2 > 1.0 || x2 - y1 < 0.0) return "boundary step at row " + std::to_string(n);
    }
    return {};
}

OptionSpec random_bsm_spec(Rng& rng, std::int64_t T, BsmDiscretization* disc) {
    for (;;) {
        OptionSpec s = random_spec(rng, T);
        s.dividend_yield = 0.0;
        try {
            *disc = discretize_bsm(s, 0.4);
            return s;
        } catch (const StabilityError&) {
        }
    }
}

std::vector<Suite> make_suites(const VerifyOptions& o) {
    const std::vector<std::int64_t> grid = step_grid(o.max_steps);
    auto pick = [grid](int t) { return grid[static_cast<std::size_t>(t) % grid.size()]; };
    const std::int64_t lemma_max = std::min<std::int64_t>(512, o.max_steps);
    const bool parallel = o.parallel;
    std::vector<Suite> s;

    s.push_back({"core.params", [pick](int t, Rng& rng, Outcome& out) {
                     const OptionSpec spec = random_spec(rng, pick(t));
                     const BinomialParams bp = derive_binomial_params(spec);
                     const double m_ulps = std::abs(bp.s0 + bp.s1 - bp.m) / ulp(bp.m);
                     const double ud_ulps = std::abs(bp.u * bp.d - 1.0) / ulp(1.0);
                     out.worst = std::max({out.worst, m_ulps, ud_ulps});
                     if (m_ulps > 4 || ud_ulps > 2) out.failure = describe(spec);
                 }});
    s.push_back({"fft.roundtrip", [](int t, Rng& rng, Outcome& out) {
                     const std::size_t n = std::size_t{1} << (t % 12 + 1);
                     ComplexVec x(n);
                     for (auto& v : x) v = Complex(uniform(rng, -1, 1), uniform(rng, -1, 1));
                     const ComplexVec y = fft_inverse(fft_forward(x));
                     for (std::size_t i = 0; i < n; ++i) out.worst = std::max(out.worst, std::abs(y[i] - x[i]));
                     if (out.worst > 1e-12) out.failure = "N=" + std::to_string(n);
                 }});
    s.push_back({"fft.convolve", [](int, Rng& rng, Outcome& out) {
                     std::vector<double> a(1 + rng() % 512), b(1 + rng() % 512);
                     for (auto& v : a) v = uniform(rng, -1, 1);
                     for (auto& v : b) v = uniform(rng, -1, 1);
                     const auto got = convolve(a, b), want = naive_convolve(a, b);
                     for (std::size_t i = 0; i < want.size(); ++i) out.worst = std::max(out.worst, std::abs(got[i] - want[i]));
                     if (out.worst > 1e-10) out.failure = "lengths " + std::to_string(a.size()) + "," + std::to_string(b.size());
                 }});
    s.push_back({"fft.kernel_power", [](int, Rng& rng, Outcome& out) {
                     Kernel k{std::vector<double>(2 + rng() % 3), 0};
                     for (auto& w : k.weights) w = uniform(rng, 0, 1);
                     double sum = 0;
                     for (double w : k.weights) sum += w;
                     const double scale = uniform(rng, 0.5, 1.0) / sum;
                     for (auto& w : k.weights) w *= scale;
                     const std::int64_t h = 1 + static_cast<std::int64_t>(rng() % 256);
                     std::vector<double> want{1.0};
                     for (std::int64_t i = 0; i < h; ++i) want = naive_convolve(want, k.weights);
                     const Kernel got = kernel_power(k, h);
                     for (std::size_t i = 0; i < want.size(); ++i)
                         out.worst = std::max(out.worst, std::abs(got.weights[i] - want[i]));
                     if (out.worst > 1e-10) out.failure = "h=" + std::to_string(h);
                 }});
    s.push_back({"fft.apply_linear_steps", [](int, Rng& rng, Outcome& out) {
                     Kernel k{std::vector<double>(2 + rng() % 2), -static_cast<std::int64_t>(rng() % 2)};
                     for (auto& w : k.weights) w = uniform(rng, 0.05, 0.5);
                     const std::size_t len = 64 + rng() % 449;
                     const std::int64_t max_h = std::min<std::int64_t>(256, static_cast<std::int64_t>((len - 1) / (k.weights.size() - 1)));
                     const std::int64_t h = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_h));
                     GridRow row{0, static_cast<std::int64_t>(rng() % 100), std::vector<double>(len)};
                     for (auto& v : row.values) v = uniform(rng, 0.1, 1.0);
                     std::vector<double> want = row.values;
                     for (std::int64_t s = 0; s < h; ++s) {
                         std::vector<double> next(want.size() - (k.weights.size() - 1), 0.0);
                         for (std::size_t q = 0; q < next.size(); ++q)
                             for (std::size_t i = 0; i < k.weights.size(); ++i) next[q] += k.weights[i] * want[q + i];
                         want.swap(next);
                     }
                     LinearStepOptions lso;
                     lso.method = LinearMethod::Fft;
                     const GridRow got = apply_linear_steps(row, k, h, TimeDirection::Forward, lso);
                     for (std::size_t i = 0; i < want.size(); ++i) out.worst = std::max(out.worst, rel(got.values[i], want[i]));
                     if (out.worst > 1e-9) out.failure = "len=" + std::to_string(len) + " h=" + std::to_string(h);
                 }});
    s.push_back({"european.fast_vs_baseline", [pick](int t, Rng& rng, Outcome& out) {
                     const OptionSpec spec = random_spec(rng, pick(t));
                     const double e = rel(fast_european(spec), baseline_european(spec));
                     out.worst = std::max(out.worst, e);
                     if (e > 1e-8) out.failure = describe(spec);
                 }});
    s.push_back({"american.dominance", [pick](int t, Rng& rng, Outcome& out) {
                     const OptionSpec spec = random_spec(rng, pick(t));
                     const double gap = baseline_european(spec) - baseline_american_call(spec).price;
                     out.worst = std::max(out.worst, gap);
                     if (gap > 1e-12) out.failure = describe(spec);
                 }});
    s.push_back({"binomial.boundary_lemmas", [lemma_max](int t, Rng& rng, Outcome& out) {
                     const std::int64_t T = std::max<std::int64_t>(2, lemma_max >> (t % 4));
                     const OptionSpec spec = random_spec(rng, T);
                     const std::string why = check_lemmas(spec, baseline_american_call(spec, true));
                     if (!why.empty()) out.failure = why + " for " + describe(spec);
                 }});
    s.push_back({"american.fast_vs_baseline", [pick, parallel](int t, Rng& rng, Outcome& out) {
                     const OptionSpec spec = random_spec(rng, pick(t));
                     AmericanFastOptions fo;
                     fo.parallel = parallel;
                     const AmericanFastResult f = fast_american_call(spec, fo);
                     const AmericanResult b = baseline_american_call(spec);
                     const double e = rel(f.price, b.price);
                     out.worst = std::max(out.worst, e);
                     if (e > 1e-8) out.failure = describe(spec);
                     for (const auto& p : f.boundary)
                         if (b.boundary[static_cast<std::size_t>(p.time_index)].index != p.index)
                             out.failure = "boundary at row " + std::to_string(p.time_index) + " for " + describe(spec);
                     std::int64_t covered = 0;
                     for (auto h : f.stats.heights) covered += h;
                     const auto stop = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(spec.steps))));
                     if (!f.stats.heights.empty() && covered < spec.steps - stop)
                         out.failure = "partition heights cover only " + std::to_string(covered) + " rows for " + describe(spec);
                 }});
    s.push_back({"bsm.weights", [pick](int t, Rng& rng, Outcome& out) {
                     BsmDiscretization d;
                     const OptionSpec spec = random_bsm_spec(rng, pick(t), &d);
                     const double target = 1.0 - d.omega * d.d_tau;
                     const double ulps = std::abs(d.a + d.b + d.c - target) / ulp(target);
                     out.worst = std::max(out.worst, ulps);
                     if (ulps > 4 || d.a < 0 || d.b < 0 || d.c < 0) out.failure = describe(spec);
                 }});
    s.push_back({"bsm.boundary_theorems", [pick](int t, Rng& rng, Outcome& out) {
                     BsmDiscretization d;
                     const OptionSpec spec = random_bsm_spec(rng, pick(t), &d);
                     const std::string why = check_bsm_theorems(d, baseline_put_fd(spec));
                     if (!why.empty()) out.failure = why + " for " + describe(spec);
                 }});
    s.push_back({"bsm.fast_vs_baseline", [pick, parallel](int t, Rng& rng, Outcome& out) {
                     BsmDiscretization d;
                     const OptionSpec spec = random_bsm_spec(rng, pick(t), &d);
                     BsmFastOptions fo;
                     fo.parallel = parallel;
                     const BsmResult f = fast_put_bsm(spec, 0.4, fo);
                     const BsmResult b = baseline_put_fd(spec, 0.4, true);
                     const double e = rel(f.price, b.price);
                     out.worst = std::max(out.worst, e);
                     if (e > 1e-8) out.failure = describe(spec);
                     for (const auto& row : *b.rows)
                         for (std::int64_t k = row.first_col(); k <= row.last_col(); ++k)
                             if (row.at(k) < std::max(bsm_green_value(d, k), 0.0) - 1e-12)
                                 out.failure = "payoff dominance at row " + std::to_string(row.time_index) + " for " + describe(spec);
                 }});
    return s;
}

}  // namespace

int cmd_verify(const VerifyOptions& opts, std::ostream& out) {
    if (opts.trials <= 0) return kOk;
    bool all = true;
    for (const Suite& suite : make_suites(opts)) {
        Rng rng(opts.seed);
        Outcome o;
        int done = 0;
        for (; done < opts.trials && o.failure.empty(); ++done) suite.trial(done, rng, o);
        const bool ok = o.failure.empty();
        all = all && ok;
        out << (ok ? "PASS " : "FAIL ") << suite.name << " trials=" << done << " worst=" << format_double(o.worst);
        if (!ok) out << " failing: " << o.failure;
        out << "\n";
    }
    return all ? kOk : kVerifyFailed;
}

}  // namespace optfft::cli
