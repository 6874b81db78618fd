#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "srec/numkit/rng.hpp"
#include "srec/numkit/tensor.hpp"

namespace test_support {

template <typename S>
srec::numkit::Tensor<S> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed,
                                      double lo = -1.0, double hi = 1.0) {
    srec::numkit::Rng rng(seed);
    srec::numkit::Tensor<S> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(lo, hi));
    return t;
}

/// Temp directory under the system temp path, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("srec_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace test_support
