#pragma once

#include <complex>
#include <vector>

namespace toruslab::fft {

using cd = std::complex<double>;

// Unnormalized d-dimensional DFTs on an M^d row-major array.
//   forward:  X[m] = sum_j x[j] e^{-2 pi i <j,m>/M}
//   backward: x[j] = sum_m X[m] e^{+2 pi i <j,m>/M}
// Plans are cached per (d, M, sign); both calls are thread-safe.
void forward(std::vector<cd>& data, int d, int M);
void backward(std::vector<cd>& data, int d, int M);

}  // namespace toruslab::fft
