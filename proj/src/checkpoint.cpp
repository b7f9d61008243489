#include "lznet/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace lznet::io {

namespace {

constexpr char kMagic[8] = {'L', 'Z', 'N', 'E', 'T', 'C', 'K', 'P'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw CorruptCheckpointError("checkpoint: truncated header field");
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw CorruptCheckpointError("checkpoint: truncated length field");
    return v;
}

std::string read_string(std::istream& in, std::uint64_t max_len) {
    const std::uint64_t len = read_u64(in);
    if (len > max_len) throw CorruptCheckpointError("checkpoint: corrupt length field");
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw CorruptCheckpointError("checkpoint: truncated string");
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, sizeof kMagic);
    write_u32(out, ckpt.version);
    write_string(out, ckpt.config_echo);
    write_string(out, ckpt.rng_state);
    write_u64(out, ckpt.tensors.size());
    for (const auto& [name, tensor] : ckpt.tensors) {
        write_string(out, name);
        write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto d : tensor.shape()) write_u64(out, d);
        out.write(reinterpret_cast<const char*>(tensor.data().data()),
                  static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    if (!out) throw Error("checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw CorruptCheckpointError("checkpoint: bad magic in " + path);
    }
    Checkpoint ckpt;
    ckpt.version = read_u32(in);
    if (ckpt.version != kCheckpointVersion) {
        throw CorruptCheckpointError("checkpoint: version " +
                                     std::to_string(ckpt.version) + " unsupported (want " +
                                     std::to_string(kCheckpointVersion) + ")");
    }
    constexpr std::uint64_t kMaxBlob = 1ull << 30;
    ckpt.config_echo = read_string(in, kMaxBlob);
    ckpt.rng_state = read_string(in, kMaxBlob);
    const std::uint64_t count = read_u64(in);
    if (count > (1ull << 20)) throw CorruptCheckpointError("checkpoint: corrupt count");
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = read_string(in, 1ull << 16);
        const std::uint32_t rank = read_u32(in);
        if (rank > 2) throw CorruptCheckpointError("checkpoint: corrupt rank");
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint64_t dim = read_u64(in);
            if (dim == 0 || dim > kMaxBlob) {
                throw CorruptCheckpointError("checkpoint: corrupt dimension");
            }
            shape.push_back(dim);
            numel *= dim;
        }
        std::vector<double> data(numel);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!in) throw CorruptCheckpointError("checkpoint: truncated tensor data");
        ckpt.tensors.emplace(std::move(name), ad::Tensor(shape, std::move(data)));
    }
    return ckpt;
}

}  // namespace lznet::io
