#include "srec/harness/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace srec::harness {

double psnr(const numkit::Tensor<float>& reference, const numkit::Tensor<float>& candidate) {
    numkit::check_same_shape(reference, candidate, "psnr");
    double acc = 0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        double d = static_cast<double>(reference.data[i]) - static_cast<double>(candidate.data[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(reference.numel());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

}  // namespace srec::harness
