#pragma once

#include "srec/numkit/tensor.hpp"

namespace srec::harness {

/// Cap applied when the MSE is zero (identical images) and as an upper bound.
inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(1 / MSE) with MAX = 1; identical inputs return the 100 dB cap.
double psnr(const numkit::Tensor<float>& reference, const numkit::Tensor<float>& candidate);

}  // namespace srec::harness
