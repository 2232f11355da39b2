#pragma once

// Little-endian record I/O shared by the weights and index containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "yzr/error.hpp"

namespace yzr::detail {

inline constexpr char kMagic[4] = {'Y', 'Z', 'R', 'C'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kKindWeights = 1;
inline constexpr std::uint32_t kKindIndex = 2;

class Fnv1a {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 1099511628211ULL;
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 14695981039346656037ULL;
};

template <typename U>
U to_little(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        U out;
        auto* src = reinterpret_cast<const unsigned char*>(&v);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
        return out;
    } else {
        return v;
    }
}

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    }
    template <typename U>
    void put(U v) {
        v = to_little(v);
        bytes(&v, sizeof v);
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw Error(ErrorCode::Io, "write failed on " + path_);
    }
    void string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void close() {
        out_.close();
        if (!out_) throw Error(ErrorCode::Io, "close failed on " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

// A short read means the file was cut off, which is reported as a checksum
// failure: the trailing record checksum can no longer be verified.
class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw Error(ErrorCode::Io, "cannot open " + path);
    }
    template <typename U>
    U get() {
        U v;
        bytes(&v, sizeof v);
        return to_little(v);
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(ErrorCode::Checksum, path_ + " is truncated");
        }
    }
    std::string string(std::size_t max_len = 1 << 20) {
        const auto n = get<std::uint32_t>();
        if (n > max_len) throw Error(ErrorCode::Checksum, path_ + ": implausible string length");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

inline void write_header(Writer& w, std::uint32_t kind) {
    w.bytes(kMagic, sizeof kMagic);
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint32_t>(kind);
}

inline void read_header(Reader& r, std::uint32_t kind) {
    char magic[4];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error(ErrorCode::Format, r.path() + " is not a YZR container");
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, r.path() + ": format version " + std::to_string(version) +
                                                    ", expected " + std::to_string(kFormatVersion));
    }
    const auto k = r.get<std::uint32_t>();
    if (k != kind) throw Error(ErrorCode::VersionMismatch, r.path() + ": unexpected container kind");
}

// Tensor record: name, rank, dims (u64), row-major f32 data, u64 checksum over
// name, dims and data bytes.
inline void write_tensor(Writer& w, const std::string& name, const std::vector<std::uint64_t>& dims,
                         const float* data) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    Fnv1a sum;
    w.string(name);
    sum.update(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) {
        w.put<std::uint64_t>(d);
        const auto le = to_little(d);
        sum.update(&le, sizeof le);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto le = to_little(std::bit_cast<std::uint32_t>(data[i]));
        w.put<std::uint32_t>(std::bit_cast<std::uint32_t>(data[i]));
        sum.update(&le, sizeof le);
    }
    w.put<std::uint64_t>(sum.value());
}

struct TensorRecord {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
    std::uint64_t checksum = 0;
};

inline TensorRecord read_tensor(Reader& r) {
    TensorRecord t;
    Fnv1a sum;
    t.name = r.string(4096);
    sum.update(t.name.data(), t.name.size());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw Error(ErrorCode::Checksum, r.path() + ": implausible tensor rank");
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const auto d = r.get<std::uint64_t>();
        const auto le = to_little(d);
        sum.update(&le, sizeof le);
        t.dims.push_back(d);
        n *= d;
    }
    if (n > (1ULL << 32)) throw Error(ErrorCode::Checksum, r.path() + ": implausible tensor size");
    t.data.resize(static_cast<std::size_t>(n));
    for (auto& v : t.data) {
        const auto bits = r.get<std::uint32_t>();
        const auto le = to_little(bits);
        sum.update(&le, sizeof le);
        v = std::bit_cast<float>(bits);
    }
    t.checksum = r.get<std::uint64_t>();
    if (t.checksum != sum.value()) throw Error(ErrorCode::Checksum, r.path() + ": checksum mismatch in '" + t.name + "'");
    return t;
}

}  // namespace yzr::detail
