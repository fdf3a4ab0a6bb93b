#include "optfft/fft_engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "optfft/errors.hpp"

namespace optfft {
namespace {

constexpr int kMaxLevel = 40;

// Level s holds exp(-i pi k / 2^s) for k < 2^s, i.e. the twiddles of a
// length 2^{s+1} butterfly stage. Tables are built once and never move.
class TwiddleRegistry {
public:
    const Complex* level(int s) {
        if (s >= built_.load(std::memory_order_acquire)) build_through(s);
        return tables_[static_cast<std::size_t>(s)].get();
    }

private:
    void build_through(int s) {
        if (s >= kMaxLevel) throw LengthError("transform length exceeds 2^40");
        std::lock_guard lock(mutex_);
        for (int l = built_.load(std::memory_order_relaxed); l <= s; ++l) {
            const std::size_t m = std::size_t{1} << l;
            auto table = std::make_unique<Complex[]>(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double angle = -std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
                table[k] = Complex(std::cos(angle), std::sin(angle));
            }
            tables_[static_cast<std::size_t>(l)] = std::move(table);
            built_.store(l + 1, std::memory_order_release);
        }
    }

    std::mutex mutex_;
    std::atomic<int> built_{0};
    std::array<std::unique_ptr<Complex[]>, kMaxLevel> tables_{};
};

TwiddleRegistry& twiddles() {
    static TwiddleRegistry registry;
    return registry;
}

int log2_exact(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw LengthError("transform length " + std::to_string(n) + " is not a power of two", "N");
    int s = 0;
    while ((std::size_t{1} << s) < n) ++s;
    return s;
}

// exp(-2 pi i r / n) for n a power of two >= 2.
Complex unit_root(std::size_t n, std::size_t r, const Complex* half_table) {
    r &= n - 1;
    const std::size_t half = n / 2;
    if (r < half) return half_table[r];
    return -half_table[r - half];
}

// Decimation in frequency: natural order in, bit-reversed order out.
void dif_forward(std::span<Complex> x, int log_n) {
    const std::size_t n = x.size();
    auto* data = reinterpret_cast<double*>(x.data());
    for (int s = log_n - 1; s >= 0; --s) {
        const std::size_t half = std::size_t{1} << s;
        const Complex* tw = twiddles().level(s);
        for (std::size_t start = 0; start < n; start += 2 * half) {
            double* lo = data + 2 * start;
            double* hi = data + 2 * (start + half);
            for (std::size_t k = 0; k < half; ++k) {
                const double ar = lo[2 * k], ai = lo[2 * k + 1];
                const double br = hi[2 * k], bi = hi[2 * k + 1];
                const double dr = ar - br, di = ai - bi;
                const double wr = tw[k].real(), wi = tw[k].imag();
                lo[2 * k] = ar + br;
                lo[2 * k + 1] = ai + bi;
                hi[2 * k] = dr * wr - di * wi;
                hi[2 * k + 1] = dr * wi + di * wr;
            }
        }
    }
}

// Decimation in time with conjugated twiddles: bit-reversed order in,
// natural order out, no 1/N factor.
void dit_inverse(std::span<Complex> x, int log_n) {
    const std::size_t n = x.size();
    auto* data = reinterpret_cast<double*>(x.data());
    for (int s = 0; s < log_n; ++s) {
        const std::size_t half = std::size_t{1} << s;
        const Complex* tw = twiddles().level(s);
        for (std::size_t start = 0; start < n; start += 2 * half) {
            double* lo = data + 2 * start;
            double* hi = data + 2 * (start + half);
            for (std::size_t k = 0; k < half; ++k) {
                const double wr = tw[k].real(), wi = -tw[k].imag();
                const double br0 = hi[2 * k], bi0 = hi[2 * k + 1];
                const double br = br0 * wr - bi0 * wi;
                const double bi = br0 * wi + bi0 * wr;
                const double ar = lo[2 * k], ai = lo[2 * k + 1];
                lo[2 * k] = ar + br;
                lo[2 * k + 1] = ai + bi;
                hi[2 * k] = ar - br;
                hi[2 * k + 1] = ai - bi;
            }
        }
    }
}

void bit_reverse_permute(std::span<Complex> x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
}

// z^h by repeated squaring.
Complex integer_power(Complex z, std::int64_t h) {
    double rr = 1.0, ri = 0.0;
    double zr = z.real(), zi = z.imag();
    while (h > 0) {
        if (h & 1) {
            const double t = rr * zr - ri * zi;
            ri = rr * zi + ri * zr;
            rr = t;
        }
        h >>= 1;
        if (h > 0) {
            const double t = zr * zr - zi * zi;
            zi = 2.0 * zr * zi;
            zr = t;
        }
    }
    return {rr, ri};
}

// P(k)^h for k in [0, n), P(k) = sum_i w_i e^{-2 pi i k i / n}, natural
// order. Real weights give P(n - k) = conj(P(k)), so only half is powered.
// Samples whose powered magnitude is below e^{-80} relative to a unit-sum
// kernel are zeroed without being powered.
ComplexVec powered_spectrum(std::size_t n, std::span<const double> w, std::int64_t h) {
    ComplexVec spec(n);
    if (n == 1) {
        double sum = 0.0;
        for (double v : w) sum += v;
        spec[0] = integer_power(Complex(sum, 0.0), h);
        return spec;
    }
    double mass = 0.0;
    for (double v : w) mass += std::abs(v);
    const double cutoff_sq = h > 0 && mass > 0.0
                                 ? mass * mass * std::exp(-160.0 / static_cast<double>(h))
                                 : 0.0;
    const Complex* half_table = twiddles().level(log2_exact(n) - 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        double pr = 0.0, pi = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const Complex r = unit_root(n, k * i, half_table);
            pr += w[i] * r.real();
            pi += w[i] * r.imag();
        }
        const Complex v = pr * pr + pi * pi < cutoff_sq ? Complex(0.0, 0.0) : integer_power(Complex(pr, pi), h);
        spec[k] = v;
        if (k > 0 && k < n / 2) spec[n - k] = std::conj(v);
    }
    return spec;
}

// out[i] = in[i] e^{a + i b}. The exponential is evaluated once per block
// and advanced by multiplication inside it, falling back to logs wherever
// the factor alone would leave the double range.
void scale_geometric(const double* in, double* out, std::size_t n, double a, double b) {
    constexpr std::size_t kBlock = 64;
    const double ratio = std::exp(b);
    for (std::size_t i0 = 0; i0 < n; i0 += kBlock) {
        const std::size_t i1 = std::min(n, i0 + kBlock);
        const double e0 = a + static_cast<double>(i0) * b;
        const double e1 = a + static_cast<double>(i1 - 1) * b;
        if (std::max(e0, e1) < 700.0 && std::min(e0, e1) > -700.0) {
            double f = std::exp(e0);
            for (std::size_t i = i0; i < i1; ++i) {
                out[i] = in[i] * f;
                f *= ratio;
            }
        } else {
            for (std::size_t i = i0; i < i1; ++i) {
                const double v = in[i];
                out[i] = v == 0.0 ? 0.0
                                  : std::copysign(std::exp(std::log(std::abs(v)) + a + static_cast<double>(i) * b), v);
            }
        }
    }
}

// Tilted weights w_i e^{(min_offset + i) t}, normalized to unit sum when
// that sum is positive. Returns ln of the normalizer (0 if not normalized).
double tilt_kernel(const Kernel& k, double t, std::vector<double>& out) {
    out.resize(k.weights.size());
    for (std::size_t i = 0; i < k.weights.size(); ++i)
        out[i] = k.weights[i] *
                 std::exp(static_cast<double>(k.min_offset + static_cast<std::int64_t>(i)) * t);
    double sum = 0.0;
    for (double v : out) sum += v;
    if (!(sum > 0.0)) return 0.0;
    for (double& v : out) v /= sum;
    return std::log(sum);
}

GridRow direct_steps(const GridRow& row, const Kernel& k, std::int64_t h, std::int64_t out_first,
                     std::int64_t out_len) {
    const std::size_t kl = k.weights.size();
    std::vector<double> cur(row.values.begin(), row.values.end());
    std::vector<double> next;
    for (std::int64_t step = 0; step < h; ++step) {
        const std::size_t n = cur.size() - (kl - 1);
        next.assign(n, 0.0);
        if (kl == 2) {
            const double w0 = k.weights[0], w1 = k.weights[1];
            for (std::size_t q = 0; q < n; ++q) next[q] = w0 * cur[q] + w1 * cur[q + 1];
        } else if (kl == 3) {
            const double w0 = k.weights[0], w1 = k.weights[1], w2 = k.weights[2];
            for (std::size_t q = 0; q < n; ++q)
                next[q] = w1 * cur[q + 1] + w2 * cur[q + 2] + w0 * cur[q];
        } else {
            for (std::size_t q = 0; q < n; ++q) {
                double acc = 0.0;
                for (std::size_t i = 0; i < kl; ++i) acc += k.weights[i] * cur[q + i];
                next[q] = acc;
            }
        }
        cur.swap(next);
    }
    GridRow out;
    out.col_offset = out_first;
    out.values.assign(cur.begin(), cur.begin() + out_len);
    return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_forward_inplace(std::span<Complex> x) {
    const int log_n = log2_exact(x.size());
    dif_forward(x, log_n);
    bit_reverse_permute(x);
}

void fft_inverse_inplace(std::span<Complex> x) {
    const int log_n = log2_exact(x.size());
    bit_reverse_permute(x);
    dit_inverse(x, log_n);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= scale;
}

ComplexVec fft_forward(std::span<const Complex> x) {
    ComplexVec out(x.begin(), x.end());
    fft_forward_inplace(out);
    return out;
}

ComplexVec fft_inverse(std::span<const Complex> x) {
    ComplexVec out(x.begin(), x.end());
    fft_inverse_inplace(out);
    return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    const int log_n = log2_exact(n);
    ComplexVec fa(n), fb(n);
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    dif_forward(fa, log_n);
    dif_forward(fb, log_n);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    dit_inverse(fa, log_n);
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real() * scale;
    return out;
}

Kernel kernel_power(const Kernel& k, std::int64_t h) {
    if (k.weights.empty()) throw InsufficientWidthError("kernel has no weights", "kernel");
    if (h < 0) throw DomainError("kernel power must be non-negative", "h");
    if (h == 0) return Kernel{{1.0}, 0};
    const std::size_t out_len = static_cast<std::size_t>(h) * (k.weights.size() - 1) + 1;
    const std::size_t n = next_pow2(out_len);
    ComplexVec spec = powered_spectrum(n, k.weights, h);
    fft_inverse_inplace(spec);
    Kernel out;
    out.min_offset = h * k.min_offset;
    out.weights.resize(out_len);
    double residue = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        residue = std::max(residue, std::abs(spec[i].imag()));
        if (i < out_len) out.weights[i] = spec[i].real();
    }
    double scale = 0.0;
    for (double w : k.weights) scale += std::abs(w);
    const double tol = 1e-10 * std::max(1.0, std::pow(scale, static_cast<double>(h)));
    if (residue > tol)
        throw NumericalError("composed kernel has imaginary residue " + std::to_string(residue),
                             "kernel");
    return out;
}

GridRow apply_linear_steps(const GridRow& row, const Kernel& k, std::int64_t h, TimeDirection dir,
                           const LinearStepOptions& opts) {
    if (h < 1) throw DomainError("linear step count must be >= 1", "h");
    if (k.weights.empty()) throw InsufficientWidthError("kernel has no weights", "kernel");
    const std::int64_t span = h * static_cast<std::int64_t>(k.weights.size() - 1);
    const std::int64_t out_len = row.size() - span;
    if (out_len < 1)
        throw InsufficientWidthError("row of " + std::to_string(row.size()) + " cells cannot advance " +
                                         std::to_string(h) + " steps",
                                     "row");
    const std::int64_t out_first = row.first_col() - h * k.min_offset;
    const std::int64_t out_time = row.time_index + static_cast<std::int64_t>(dir) * h;

    const std::size_t len = row.values.size();
    const std::size_t n = next_pow2(len);
    const int log_n = log2_exact(n);

    LinearMethod method = opts.method;
    if (method == LinearMethod::Auto) {
        const double direct_cost = static_cast<double>(h) * static_cast<double>(len) *
                                   static_cast<double>(k.weights.size());
        const double fft_cost = 6.0 * static_cast<double>(n) * static_cast<double>(log_n + 1);
        method = direct_cost <= fft_cost ? LinearMethod::Direct : LinearMethod::Fft;
    }
    if (method == LinearMethod::Direct) {
        GridRow out = direct_steps(row, k, h, out_first, out_len);
        out.time_index = out_time;
        return out;
    }

    const double t = opts.log_tilt;
    std::vector<double> w;
    const double log_kappa = tilt_kernel(k, t, w);

    GridRow out;
    out.time_index = out_time;
    out.col_offset = out_first;
    out.values.assign(static_cast<std::size_t>(out_len), 0.0);

    // Normalizer M >= max_c ln|x_c| - c t, within ln 2, from binary exponents.
    double big = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
        const double v = row.values[i];
        if (v == 0.0 || !std::isfinite(v)) continue;
        const auto col = static_cast<double>(row.col_offset + static_cast<std::int64_t>(i));
        big = std::max(big, (std::ilogb(v) + 1) * std::numbers::ln2 - col * t);
    }
    if (big == -std::numeric_limits<double>::infinity()) return out;

    std::vector<double> scaled(len);
    scale_geometric(row.values.data(), scaled.data(), len, -static_cast<double>(row.col_offset) * t - big, -t);
    ComplexVec buf(n);
    for (std::size_t i = 0; i < len; ++i) buf[i] = Complex(scaled[i], 0.0);
    dif_forward(buf, log_n);

    // Correlation with W multiplies by conj(W^hat); the transform is in
    // bit-reversed order.
    SpectrumCache::Spectrum spec = opts.spectra ? opts.spectra->find(n, h) : nullptr;
    if (!spec) {
        ComplexVec nat = powered_spectrum(n, w, h);
        for (auto& v : nat) v = std::conj(v);
        bit_reverse_permute(nat);
        spec = opts.spectra ? opts.spectra->insert(n, h, std::move(nat))
                            : std::make_shared<const ComplexVec>(std::move(nat));
    }
    {
        auto* x = reinterpret_cast<double*>(buf.data());
        const auto* y = reinterpret_cast<const double*>(spec->data());
        for (std::size_t i = 0; i < n; ++i) {
            const double xr = x[2 * i], xi = x[2 * i + 1];
            const double yr = y[2 * i], yi = y[2 * i + 1];
            x[2 * i] = xr * yr - xi * yi;
            x[2 * i + 1] = xr * yi + xi * yr;
        }
    }
    dit_inverse(buf, log_n);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t q = 0; q < out_len; ++q) scaled[static_cast<std::size_t>(q)] = buf[static_cast<std::size_t>(q)].real() * inv_n;
    const double base = big + static_cast<double>(h) * log_kappa + static_cast<double>(out_first) * t;
    scale_geometric(scaled.data(), out.values.data(), static_cast<std::size_t>(out_len), base, t);
    return out;
}

SpectrumCache::Spectrum SpectrumCache::find(std::size_t n, std::int64_t h) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({n, h});
    return it == entries_.end() ? nullptr : it->second;
}

SpectrumCache::Spectrum SpectrumCache::insert(std::size_t n, std::int64_t h, ComplexVec spectrum) {
    std::lock_guard lock(mutex_);
    auto [it, fresh] = entries_.try_emplace({n, h}, nullptr);
    if (fresh) it->second = std::make_shared<const ComplexVec>(std::move(spectrum));
    return it->second;
}

double choose_log_tilt(const GridRow& payoff, std::int64_t origin, const Kernel& k,
                       std::int64_t steps) {
    std::vector<double> cols, logs;
    for (std::int64_t c = payoff.first_col(); c <= payoff.last_col(); ++c) {
        const double v = payoff.at(c);
        if (v > 0.0) {
            cols.push_back(static_cast<double>(c - origin));
            logs.push_back(std::log(v));
        }
    }
    if (cols.empty() || k.weights.empty()) return 0.0;

    // Derivative of g(t) = max_c [ln f_c - c t] + steps ln kappa(t): minus the
    // maximizing column plus steps times the tilted mean offset.
    auto slope = [&](double t) {
        double best = -std::numeric_limits<double>::infinity();
        double arg = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const double v = logs[i] - cols[i] * t;
            if (v > best) {
                best = v;
                arg = cols[i];
            }
        }
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k.weights.size(); ++i) {
            if (k.weights[i] > 0.0)
                top = std::max(top, std::log(k.weights[i]) +
                                        static_cast<double>(k.min_offset + static_cast<std::int64_t>(i)) * t);
        }
        double mass = 0.0, moment = 0.0;
        for (std::size_t i = 0; i < k.weights.size(); ++i) {
            if (k.weights[i] <= 0.0) continue;
            const double o = static_cast<double>(k.min_offset + static_cast<std::int64_t>(i));
            const double e = std::exp(std::log(k.weights[i]) + o * t - top);
            mass += e;
            moment += o * e;
        }
        return -arg + static_cast<double>(steps) * moment / mass;
    };

    double lo = -50.0, hi = 50.0;
    if (slope(lo) >= 0.0) return lo;
    if (slope(hi) <= 0.0) return hi;
    for (int it = 0; it < 64 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace optfft
