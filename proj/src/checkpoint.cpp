#include "gmssl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {

constexpr char kMagic[6] = {'G', 'M', 'S', 'S', 'L', '1'};

void put_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void put_f32(std::ofstream& f, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(f, bits);
}

float get_f32(std::ifstream& f) {
    uint32_t bits = get_u32(f);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<TensorRecord>& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParamError("save_checkpoint: cannot open " + path);
    f.write(kMagic, sizeof kMagic);
    for (const auto& t : tensors) {
        put_u32(f, uint32_t(t.name.size()));
        f.write(t.name.data(), std::streamsize(t.name.size()));
        put_u32(f, uint32_t(t.dims.size()));
        size_t count = 1;
        for (uint32_t d : t.dims) {
            put_u32(f, d);
            count *= d;
        }
        if (count != t.data.size())
            throw ContractError("save_checkpoint: dims do not match data for " + t.name);
        for (double v : t.data) put_f32(f, float(v));
    }
    if (!f) throw NumericError("save_checkpoint: write failed for " + path);
}

std::vector<TensorRecord> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParamError("load_checkpoint: cannot open " + path);
    char magic[6];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw ParamError("load_checkpoint: bad magic in " + path);
    std::vector<TensorRecord> out;
    while (true) {
        uint32_t name_len = get_u32(f);
        if (f.eof()) break;
        if (!f || name_len > 4096) throw ParamError("load_checkpoint: corrupt record");
        TensorRecord t;
        t.name.resize(name_len);
        f.read(t.name.data(), name_len);
        uint32_t rank = get_u32(f);
        if (rank > 8) throw ParamError("load_checkpoint: implausible rank");
        size_t count = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            t.dims.push_back(get_u32(f));
            count *= t.dims.back();
        }
        t.data.resize(count);
        for (auto& v : t.data) v = double(get_f32(f));
        if (!f) throw ParamError("load_checkpoint: truncated tensor " + t.name);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace gmssl
