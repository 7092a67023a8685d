#include "gfsl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "gfsl/error.hpp"

namespace gfsl {

std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) {
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

namespace {

void append_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFFu));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFFu));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFFu));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFFu));
}

void append_f32(std::vector<unsigned char>& out, float v) {
    append_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    Reader(const unsigned char* data, std::size_t size, std::string path)
        : data_(data), size_(size), path_(std::move(path)) {}

    std::uint32_t read_u32() {
        if (pos_ + 4 > size_) {
            throw CheckpointError(path_ + ": truncated checkpoint (wanted 4 bytes at offset " +
                                  std::to_string(pos_) + ")");
        }
        const std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                                (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
                                (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
                                (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    float read_f32() { return std::bit_cast<float>(read_u32()); }

    std::string read_name(std::uint32_t len) {
        if (pos_ + len > size_) {
            throw CheckpointError(path_ + ": truncated checkpoint in entry name");
        }
        std::string name(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return name;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const unsigned char* data_;
    std::size_t size_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
    std::vector<unsigned char> buffer;
    buffer.push_back('G');
    buffer.push_back('F');
    buffer.push_back('S');
    buffer.push_back('L');
    append_u32(buffer, kCheckpointVersion);
    append_u32(buffer, static_cast<std::uint32_t>(params.size()));
    for (const Param& p : params.all()) {
        append_u32(buffer, static_cast<std::uint32_t>(p.name.size()));
        buffer.insert(buffer.end(), p.name.begin(), p.name.end());
        append_u32(buffer, static_cast<std::uint32_t>(p.value.rank()));
        for (int d : p.value.shape()) {
            append_u32(buffer, static_cast<std::uint32_t>(d));
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            append_f32(buffer, p.value[i]);
        }
    }
    append_u32(buffer, crc32(buffer.data(), buffer.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size()));
    if (!out) {
        throw IoError("failed writing checkpoint to " + path.string());
    }
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<unsigned char> buffer((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
    const std::string name = path.string();
    if (buffer.size() < 16) {
        throw CheckpointError(name + ": truncated checkpoint (only " +
                              std::to_string(buffer.size()) + " bytes)");
    }
    if (std::memcmp(buffer.data(), "GFSL", 4) != 0) {
        throw CheckpointError(name + ": not a GFSL checkpoint (bad magic)");
    }

    // CRC covers everything before the final 4 bytes.
    const std::size_t body = buffer.size() - 4;
    Reader trailer(buffer.data() + body, 4, name);
    const std::uint32_t stored_crc = trailer.read_u32();
    const std::uint32_t actual_crc = crc32(buffer.data(), body);
    if (stored_crc != actual_crc) {
        throw CheckpointError(name + ": CRC mismatch (file is corrupt)");
    }

    Reader reader(buffer.data() + 4, body - 4, name);
    const std::uint32_t version = reader.read_u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError(name + ": unsupported checkpoint version " +
                              std::to_string(version));
    }
    const std::uint32_t count = reader.read_u32();

    ParameterSet params;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = reader.read_u32();
        const std::string entry_name = reader.read_name(name_len);
        const std::uint32_t rank = reader.read_u32();
        if (rank > 8) {
            throw CheckpointError(name + ": entry '" + entry_name +
                                  "' has implausible rank " + std::to_string(rank));
        }
        std::vector<int> shape(rank);
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = reader.read_u32();
            if (dim == 0 || dim > (1u << 28)) {
                throw CheckpointError(name + ": entry '" + entry_name + "' has invalid dimension " +
                                      std::to_string(dim));
            }
            shape[d] = static_cast<int>(dim);
            total *= dim;
        }
        if (reader.remaining() < total * 4) {
            throw CheckpointError(name + ": truncated checkpoint in entry '" + entry_name + "'");
        }
        std::vector<float> values(total);
        for (std::size_t i = 0; i < total; ++i) {
            values[i] = reader.read_f32();
        }
        params.add(entry_name, Tensor(std::move(shape), std::move(values)));
    }
    if (reader.remaining() != 0) {
        throw CheckpointError(name + ": " + std::to_string(reader.remaining()) +
                              " unexpected trailing bytes");
    }
    return params;
}

}  // namespace gfsl
