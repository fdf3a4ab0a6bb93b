#pragma once

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace optfft::detail {

// Sets flush-to-zero and denormals-are-zero for the current thread and
// restores the previous mode on exit. The O(T^2) sweeps push the far
// out-of-the-money tail through the subnormal range, where each operation
// costs tens of cycles; flushing changes values only below 2^-1022.
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#else
    FlushDenormals() = default;
#endif
    FlushDenormals(const FlushDenormals&) = delete;
    FlushDenormals& operator=(const FlushDenormals&) = delete;
};

}  // namespace optfft::detail
