#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>

#include <Eigen/Core>

#include "sgwc/util.hpp"

namespace sgwc {

// All on-disk formats are little-endian binary with a 16-byte header:
// 8-byte magic tag, u32 format version, u32 reserved.

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_)
            throw Error("cannot open file for writing: " + path);
    }

    void header(const char tag[8], std::uint32_t version)
    {
        out_.write(tag, 8);
        u32(version);
        u32(0);
    }

    void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
    void u64(std::uint64_t v) { raw(&v, sizeof(v)); }
    void f64(double v) { raw(&v, sizeof(v)); }

    void doubles(const double* data, std::size_t count)
    {
        raw(data, count * sizeof(double));
    }

    void matrix(const Eigen::MatrixXd& m)  // column-major payload
    {
        doubles(m.data(), static_cast<std::size_t>(m.size()));
    }

    void string(const std::string& s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    void finish()
    {
        out_.flush();
        if (!out_)
            throw Error("write failed: " + path_);
        out_.close();
    }

private:
    void raw(const void* data, std::size_t size)
    {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    }

    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path)
        : path_(path), in_(path, std::ios::binary)
    {
        if (!in_)
            throw Error("cannot open file for reading: " + path);
    }

    std::uint32_t header(const char tag[8])
    {
        std::array<char, 8> got{};
        raw(got.data(), 8);
        if (!std::equal(got.begin(), got.end(), tag))
            throw Error("bad magic in " + path_);
        std::uint32_t version = u32();
        u32();  // reserved
        return version;
    }

    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof(v)); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof(v)); return v; }
    double f64() { double v; raw(&v, sizeof(v)); return v; }

    void doubles(double* data, std::size_t count)
    {
        raw(data, count * sizeof(double));
    }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols)
    {
        Eigen::MatrixXd m(rows, cols);
        doubles(m.data(), static_cast<std::size_t>(m.size()));
        return m;
    }

    std::string string()
    {
        std::string s(u32(), '\0');
        raw(s.data(), s.size());
        return s;
    }

private:
    void raw(void* data, std::size_t size)
    {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (!in_)
            throw Error("truncated or unreadable file: " + path_);
    }

    std::string path_;
    std::ifstream in_;
};

/// Write through a temp file and rename into place, so concurrent readers
/// never see a partial file.
void atomic_file_write(const std::string& path,
                       const std::function<void(BinaryWriter&)>& fill);

}  // namespace sgwc
