#include "srec/harness/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "srec/harness/png_io.hpp"
#include "srec/numkit/rng.hpp"

namespace srec::harness {

numkit::Tensor<float> synthetic_image(std::uint64_t seed, std::size_t height, std::size_t width) {
    numkit::Rng rng(seed);
    const double hd = static_cast<double>(height), wd = static_cast<double>(width);

    struct Blob {
        double cx, cy, sigma, amp;
    };
    std::vector<Blob> blobs(2 + rng.below(3));
    for (auto& b : blobs) {
        b.cx = rng.uniform(0.1, 0.9) * wd;
        b.cy = rng.uniform(0.1, 0.9) * hd;
        b.sigma = rng.uniform(0.1, 0.35) * std::min(hd, wd);
        b.amp = rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);

    std::vector<double> base(height * width);
    double lo = 1e300, hi = -1e300;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            double v = gx * static_cast<double>(x) / wd + gy * static_cast<double>(y) / hd;
            for (const auto& b : blobs) {
                const double dx = static_cast<double>(x) - b.cx;
                const double dy = static_cast<double>(y) - b.cy;
                v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
            }
            base[y * width + x] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;

    numkit::Tensor<float> image({3, height, width});
    for (std::size_t c = 0; c < 3; ++c) {
        // Channel 0 always spans the full range; the others carry the tint.
        const double tint = c == 0 ? rng.uniform(0.92, 1.0) : rng.uniform(0.55, 1.0);
        const double offset = c == 0 ? 0.0 : rng.uniform(0.0, 0.12);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                double v = (base[y * width + x] - lo) / span;
                image(c, y, x) = static_cast<float>(std::clamp(v * tint + offset, 0.0, 1.0));
            }
    }
    return image;
}

void write_synthetic_corpus(const std::string& dir, std::size_t count, std::size_t size,
                            std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%04zu.png", i);
        write_png(dir + "/" + name,
                  synthetic_image(numkit::hash_mix(seed, i), size, size));
    }
}

}  // namespace srec::harness
