#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "srec/numkit/checkpoint.hpp"
#include "test_support.hpp"

using namespace srec::numkit;

TEST_CASE("checkpoint round trip is bit exact") {
    test_support::TempDir dir("ckpt");
    std::vector<CheckpointEntry> entries;
    entries.push_back({"layer.weight", test_support::random_tensor<float>({4, 3, 3, 3}, 1)});
    entries.push_back({"layer.bias", test_support::random_tensor<float>({4}, 2)});
    entries.push_back({"__meta.codec", Tensor<float>({1}, {0.2f})});
    // Values with tricky bit patterns.
    entries.push_back({"edge", Tensor<float>({4}, {0.0f, -0.0f, 1e-38f, 3.4e38f})});

    const std::string path = dir.file("model.bin");
    save_checkpoint(path, entries);
    auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(loaded[i].name == entries[i].name);
        CHECK(loaded[i].tensor.shape == entries[i].tensor.shape);
        for (std::size_t j = 0; j < entries[i].tensor.data.size(); ++j) {
            // Bit-level comparison.
            std::uint32_t a, b;
            std::memcpy(&a, &loaded[i].tensor.data[j], 4);
            std::memcpy(&b, &entries[i].tensor.data[j], 4);
            CHECK(a == b);
        }
    }

    // Saving the loaded entries again reproduces the file byte for byte.
    const std::string path2 = dir.file("model2.bin");
    save_checkpoint(path2, loaded);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
    CHECK(c1.substr(0, 8) == std::string("SRECNK1\0", 8));
}

TEST_CASE("checkpoint rejects bad files") {
    test_support::TempDir dir("ckpt_bad");
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.bin")), std::runtime_error);

    std::ofstream os(dir.file("junk.bin"), std::ios::binary);
    os << "NOTMAGIC and more";
    os.close();
    CHECK_THROWS_AS(load_checkpoint(dir.file("junk.bin")), std::runtime_error);
}

TEST_CASE("find_entry") {
    std::vector<CheckpointEntry> entries;
    entries.push_back({"a", Tensor<float>({1}, {1.0f})});
    CHECK(find_entry(entries, "a").tensor.data[0] == 1.0f);
    CHECK(has_entry(entries, "a"));
    CHECK_FALSE(has_entry(entries, "b"));
    CHECK_THROWS_AS(find_entry(entries, "b"), std::runtime_error);
}
