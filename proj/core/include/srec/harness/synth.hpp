#pragma once

#include <cstdint>
#include <string>

#include "srec/numkit/tensor.hpp"

namespace srec::harness {

/// Deterministic synthetic test image: a handful of Gaussian blobs over a
/// linear gradient, normalized to the full [0, 1] range, with correlated
/// per-channel tints. Smooth but high-contrast, like a cartoon landscape.
numkit::Tensor<float> synthetic_image(std::uint64_t seed, std::size_t height, std::size_t width);

/// Writes `count` synthetic PNGs (img_0000.png, ...) into `dir`, creating it
/// if needed.
void write_synthetic_corpus(const std::string& dir, std::size_t count, std::size_t size,
                            std::uint64_t seed);

}  // namespace srec::harness
