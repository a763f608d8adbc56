// Unitary FFT/IFFT over FFTW with a mutex-guarded plan cache.
// Execution is thread-safe; planning is serialized internally.
#pragma once

#include <span>
#include <vector>

#include "msk3/common.hpp"

namespace msk3 {

// out = FFT(in) / sqrt(n). in and out must have equal size and not alias.
void fft_forward(std::span<const cd> in, std::span<cd> out);
// out = IFFT(in) / sqrt(n).
void fft_inverse(std::span<const cd> in, std::span<cd> out);

std::vector<cd> fft_forward(std::span<const cd> in);
std::vector<cd> fft_inverse(std::span<const cd> in);

}  // namespace msk3
