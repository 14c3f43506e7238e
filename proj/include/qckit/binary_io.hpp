#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qckit/common.hpp"

namespace qc::io {

static_assert(std::endian::native == std::endian::little,
              "file writers assume a little-endian host");

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path.string()), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path_);
    }

    void magic(const char (&tag)[9]) { raw(tag, 8); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f64_array(const double* data, std::size_t n) { raw(data, n * sizeof(double)); }
    void bytes(const void* data, std::size_t n) { raw(data, n); }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed: " + path_);
    }

    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open for reading: " + path_);
    }

    void expect_magic(const char (&tag)[9]) {
        char got[8];
        raw(got, 8);
        if (std::memcmp(got, tag, 8) != 0)
            throw FormatError("bad magic in " + path_ + ": expected " + std::string(tag, 8) +
                              ", got " + std::string(got, 8));
    }

    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
    double f64() { double v; raw(&v, sizeof v); return v; }
    void f64_array(double* data, std::size_t n) { raw(data, n * sizeof(double)); }
    void bytes(void* data, std::size_t n) { raw(data, n); }

    bool at_eof() {
        return in_.peek() == std::ifstream::traits_type::eof();
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw FormatError("truncated file: " + path_);
    }

    std::string path_;
    std::ifstream in_;
};

}  // namespace qc::io
