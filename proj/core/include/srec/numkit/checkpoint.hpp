#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srec/numkit/tensor.hpp"

namespace srec::numkit {

/// One named tensor as stored in a checkpoint file.
struct CheckpointEntry {
    std::string name;
    Tensor<float> tensor;
};

/// Binary checkpoint: magic "SRECNK1\0", then per-tensor records of
/// (u64 name length, UTF-8 name, u64 rank, u64 extents..., f32 values),
/// all little-endian. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

/// Returns the entry with the given name or throws.
const CheckpointEntry& find_entry(const std::vector<CheckpointEntry>& entries, const std::string& name);
bool has_entry(const std::vector<CheckpointEntry>& entries, const std::string& name);

}  // namespace srec::numkit
