#pragma once

#include <string>
#include <vector>

#include "srec/numkit/tensor.hpp"

namespace srec::harness {

/// Loads every decodable PNG in `path` (lexicographic filename order),
/// center-cropped to crop x crop with values in [0, 1]. Undersized images are
/// skipped with a warning; an empty result is an error.
std::vector<numkit::Tensor<float>> load_corpus(const std::string& path, std::size_t crop);

/// Center crop of a 3 x H x W tensor.
numkit::Tensor<float> center_crop(const numkit::Tensor<float>& image, std::size_t crop);

}  // namespace srec::harness
