#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mif {

// Little-endian binary writer/reader. All on-disk multi-byte values in this
// project are little-endian; on a big-endian host the byte swaps below kick in.

namespace detail {
constexpr bool host_little_endian() {
    return __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__;
}
template <typename T>
T byteswap(T v) {
    unsigned char* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    return v;
}
}  // namespace detail

class BinWriter {
public:
    explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("io-error: cannot open for writing: " + path);
    }

    template <typename T>
    void write(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        if constexpr (sizeof(T) > 1) {
            if (!detail::host_little_endian()) v = detail::byteswap(v);
        }
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    void write_bytes(const void* data, std::size_t n) {
        out_.write(reinterpret_cast<const char*>(data), std::streamsize(n));
    }

    void write_magic(const char (&magic)[8]) { out_.write(magic, 8); }

    void write_f64_array(const double* data, std::size_t n) {
        if (detail::host_little_endian()) {
            write_bytes(data, n * sizeof(double));
        } else {
            for (std::size_t i = 0; i < n; ++i) write(data[i]);
        }
    }

    std::uint64_t tell() { return std::uint64_t(out_.tellp()); }
    void seek(std::uint64_t pos) { out_.seekp(std::streamoff(pos)); }

    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("io-error: write failed");
    }

private:
    std::ofstream out_;
};

class BinReader {
public:
    explicit BinReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("io-error: cannot open for reading: " + path);
    }

    template <typename T>
    T read() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw std::runtime_error("format-error: truncated file");
        if constexpr (sizeof(T) > 1) {
            if (!detail::host_little_endian()) v = detail::byteswap(v);
        }
        return v;
    }

    void read_bytes(void* data, std::size_t n) {
        in_.read(reinterpret_cast<char*>(data), std::streamsize(n));
        if (!in_) throw std::runtime_error("format-error: truncated file");
    }

    void expect_magic(const char (&magic)[8], const std::string& what) {
        char buf[8];
        read_bytes(buf, 8);
        if (std::memcmp(buf, magic, 8) != 0)
            throw std::runtime_error("format-error: bad magic for " + what);
    }

    void read_f64_array(double* data, std::size_t n) {
        read_bytes(data, n * sizeof(double));
        if (!detail::host_little_endian()) {
            for (std::size_t i = 0; i < n; ++i) data[i] = detail::byteswap(data[i]);
        }
    }

    bool eof_next() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::ifstream in_;
};

}  // namespace mif
