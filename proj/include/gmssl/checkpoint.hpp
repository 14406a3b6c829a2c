#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gmssl {

// One named tensor inside a checkpoint. Values are stored as little-endian
// 32-bit floats; callers keep their in-memory doubles f32-representable so
// save/load round-trips are lossless.
struct TensorRecord {
    std::string name;
    std::vector<uint32_t> dims;
    std::vector<double> data;
};

// File format: magic "GMSSL1", then per tensor: u32 name length, name bytes,
// u32 rank, u32 dims[rank], then the row-major float payload.
void save_checkpoint(const std::string& path, const std::vector<TensorRecord>& tensors);
std::vector<TensorRecord> load_checkpoint(const std::string& path);

}  // namespace gmssl
