#pragma once

#include <string>

#include "srec/numkit/tensor.hpp"

namespace srec::harness {

/// Decodes an 8-bit PNG into a 3 x H x W tensor scaled to [0, 1].
/// Grayscale is replicated across channels; an alpha channel is dropped.
numkit::Tensor<float> read_png(const std::string& path);

/// Writes a 3 x H x W tensor in [0, 1] as an 8-bit RGB PNG.
void write_png(const std::string& path, const numkit::Tensor<float>& image);

}  // namespace srec::harness
