#include "srec/harness/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "srec/harness/png_io.hpp"

namespace srec::harness {

numkit::Tensor<float> center_crop(const numkit::Tensor<float>& image, std::size_t crop) {
    const std::size_t h = image.shape[1], w = image.shape[2];
    if (h < crop || w < crop) throw std::invalid_argument("center_crop: image smaller than crop");
    const std::size_t y0 = (h - crop) / 2, x0 = (w - crop) / 2;
    numkit::Tensor<float> out({3, crop, crop});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < crop; ++y)
            for (std::size_t x = 0; x < crop; ++x) out(c, y, x) = image(c, y0 + y, x0 + x);
    return out;
}

std::vector<numkit::Tensor<float>> load_corpus(const std::string& path, std::size_t crop) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) throw std::runtime_error("load_corpus: '" + path + "' is not a directory");

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() >= 4) {
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (ext == ".png") files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("load_corpus: no PNG files in '" + path + "'");

    std::vector<numkit::Tensor<float>> crops;
    for (const auto& file : files) {
        numkit::Tensor<float> image;
        try {
            image = read_png(file);
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping undecodable '" << file << "': " << e.what() << "\n";
            continue;
        }
        if (image.shape[1] < crop || image.shape[2] < crop) {
            std::cerr << "warning: skipping undersized '" << file << "' ("
                      << image.shape[1] << "x" << image.shape[2] << " < crop " << crop << ")\n";
            continue;
        }
        crops.push_back(center_crop(image, crop));
    }
    if (crops.empty())
        throw std::runtime_error("load_corpus: no usable images in '" + path + "' at crop " +
                                 std::to_string(crop));
    return crops;
}

}  // namespace srec::harness
