#pragma once

// Thin FFTW wrapper: cached plans, std::complex buffers, 1/N-normalized
// inverse. Single-threaded use only (FFTW plan creation is not reentrant).

#include <complex>
#include <cstddef>
#include <vector>

namespace sqz::fft {

size_t next_pow2(size_t n);

/// In-place DFT. inverse=true applies the 1/N normalization.
void transform(std::vector<std::complex<double>>& x, bool inverse);

} // namespace sqz::fft
