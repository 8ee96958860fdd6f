#pragma once

#include <span>

#include "exprec/grid.hpp"

namespace exprec::fft {

// Unnormalized in-place 2-D transforms over a row-major P x Q frame.
// forward:  X[k] = sum_r x[r] exp(-2 pi i k.r)
// backward: x[r] = sum_k X[k] exp(+2 pi i k.r)
void forward(std::span<cx> frame, int P, int Q);
void backward(std::span<cx> frame, int P, int Q);

// Unitary variants (scaled by 1/sqrt(PQ)).
void forward_unitary(std::span<cx> frame, int P, int Q);
void inverse_unitary(std::span<cx> frame, int P, int Q);

}  // namespace exprec::fft
