#include "srec/numkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace srec::numkit {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'E', 'C', 'N', 'K', '1', '\0'};

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

float get_f32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    for (const auto& e : entries) {
        put_u64(os, e.name.size());
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u64(os, e.tensor.rank());
        for (std::size_t ext : e.tensor.shape) put_u64(os, ext);
        for (float v : e.tensor.data) put_f32(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");

    std::vector<CheckpointEntry> entries;
    while (true) {
        is.peek();
        if (is.eof()) break;
        CheckpointEntry e;
        std::uint64_t name_len = get_u64(is);
        e.name.resize(name_len);
        is.read(e.name.data(), static_cast<std::streamsize>(name_len));
        std::uint64_t rank = get_u64(is);
        std::vector<std::size_t> shape(rank);
        for (auto& ext : shape) ext = static_cast<std::size_t>(get_u64(is));
        e.tensor = Tensor<float>(shape);
        for (auto& v : e.tensor.data) v = get_f32(is);
        if (!is) throw std::runtime_error("checkpoint: truncated record in '" + path + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

const CheckpointEntry& find_entry(const std::vector<CheckpointEntry>& entries, const std::string& name) {
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw std::runtime_error("checkpoint: missing entry '" + name + "'");
}

bool has_entry(const std::vector<CheckpointEntry>& entries, const std::string& name) {
    for (const auto& e : entries)
        if (e.name == name) return true;
    return false;
}

}  // namespace srec::numkit
