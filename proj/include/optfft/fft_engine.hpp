#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "optfft/core_model.hpp"

namespace optfft {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

/// Unnormalized forward DFT, X_k = sum_n x_n e^{-2 pi i k n / N}.
/// Throws LengthError unless N is a power of two.
ComplexVec fft_forward(std::span<const Complex> x);

/// Inverse DFT including the 1/N factor.
ComplexVec fft_inverse(std::span<const Complex> x);

/// In-place variants used on hot paths.
void fft_forward_inplace(std::span<Complex> x);
void fft_inverse_inplace(std::span<Complex> x);

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

/// Full linear convolution (length |a| + |b| - 1) through a zero-padded FFT.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// A linear stencil on one spatial dimension. Reading the neighbouring time
/// level, weights[i] multiplies the cell at column offset (min_offset + i).
struct Kernel {
    std::vector<double> weights;
    std::int64_t min_offset = 0;

    std::int64_t max_offset() const {
        return min_offset + static_cast<std::int64_t>(weights.size()) - 1;
    }
};

/// Coefficients of h successive applications of `k`, computed by pointwise
/// h-th powering in the frequency domain. The result has min_offset
/// h * k.min_offset and h * (len - 1) + 1 weights; h = 0 gives the identity.
Kernel kernel_power(const Kernel& k, std::int64_t h);

enum class TimeDirection { Backward = -1, Forward = 1 };

enum class LinearMethod {
    Auto,    ///< FFT, or direct sweeps when the problem is small
    Fft,
    Direct,  ///< explicit sweeps, O(h * len)
};

/// Powered kernel spectra keyed by (transform length, step count), shared by
/// every apply_linear_steps call of one pricing run. All calls using a cache
/// must pass the same kernel and tilt. Safe for concurrent use.
class SpectrumCache {
public:
    using Spectrum = std::shared_ptr<const ComplexVec>;

    Spectrum find(std::size_t n, std::int64_t h) const;
    Spectrum insert(std::size_t n, std::int64_t h, ComplexVec spectrum);

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::size_t, std::int64_t>, Spectrum> entries_;
};

struct LinearStepOptions {
    /// Exponential tilt t. The FFT works on x_c e^{-c t} with the kernel
    /// weight at offset o scaled by e^{o t}; the result is mapped back
    /// exactly. Choosing t so that the tilted row is flat where it matters
    /// keeps the transform's absolute error small relative to the output.
    double log_tilt = 0.0;
    LinearMethod method = LinearMethod::Auto;
    SpectrumCache* spectra = nullptr;
};

/// Advance `row` by h linear steps of `k`. Output column j receives
/// sum_r W_r row[j + h*min_offset + r] with W = kernel_power(k, h). Only
/// columns whose full h-step cone lies inside `row` are returned:
/// [first_col - h*min_offset, last_col - h*max_offset].
/// Throws InsufficientWidthError when that range is empty.
GridRow apply_linear_steps(const GridRow& row, const Kernel& k, std::int64_t h,
                           TimeDirection dir, const LinearStepOptions& opts = {});

/// Tilt that minimizes max_c f(c) e^{-(c - origin) t} * kappa(t)^steps, where
/// kappa(t) = sum_o w_o e^{o t}, over the terminal payoff row f. That
/// quantity bounds every tilted cell feeding the value at `origin`, so the
/// minimizer gives the smallest FFT error relative to that value. Returns 0
/// when the payoff is nowhere positive.
double choose_log_tilt(const GridRow& payoff, std::int64_t origin, const Kernel& k,
                       std::int64_t steps);

}  // namespace optfft
