#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "rbridge/approximator.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/io/hash.hpp"

namespace rbridge::io {

/**
 * Checkpoint layout, all integers and floats little-endian:
 *
 *   "RBRG" | u8 version (1) | u8 activation | u16 reserved
 *   u32 dim | u32 time frequencies | f64 T | f64 sigma[dim]
 *   u32 layer count L | u32 widths[L + 1]
 *   per layer: f64 weights (row-major) | f64 bias
 *   u64 FNV-1a of every preceding byte
 */
inline constexpr std::uint8_t kCheckpointVersion = 1;

namespace detail {

class Writer {
  public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::string_view s) { bytes_.append(s); }
    [[nodiscard]] std::string& bytes() noexcept { return bytes_; }

  private:
    std::string bytes_;
};

class Reader {
  public:
    Reader(std::string_view bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        }
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw ConfigError(source_ + ": truncated checkpoint");
        }
    }

  private:
    std::string_view bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_checkpoint(const nn::ModelParams& p) {
    p.validate();
    detail::Writer w;
    w.raw("RBRG");
    w.u8(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(p.activation));
    w.u8(0);
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(p.dim));
    w.u32(static_cast<std::uint32_t>(p.time_frequencies));
    w.f64(p.horizon);
    for (Eigen::Index j = 0; j < p.sigma.size(); ++j) {
        w.f64(p.sigma[j]);
    }
    const auto widths = p.widths();
    w.u32(static_cast<std::uint32_t>(p.layers()));
    for (std::size_t width : widths) {
        w.u32(static_cast<std::uint32_t>(width));
    }
    for (std::size_t l = 0; l < p.layers(); ++l) {
        const auto& m = p.weights[l];
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                w.f64(m(r, c));
            }
        }
        for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) {
            w.f64(p.biases[l][r]);
        }
    }
    const std::uint64_t checksum = fnv1a64(w.bytes());
    w.u64(checksum);
    return std::move(w.bytes());
}

inline nn::ModelParams deserialize_checkpoint(std::string_view bytes, const std::string& source = "checkpoint") {
    if (bytes.size() < 8 || bytes.substr(0, 4) != "RBRG") {
        throw ConfigError(source + ": not a checkpoint (bad magic bytes)");
    }
    detail::Reader r(bytes, source);
    r.u32(); // magic
    const std::uint8_t version = r.u8();
    if (version != kCheckpointVersion) {
        throw ConfigError(source + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint8_t act = r.u8();
    if (act > 1) {
        throw ConfigError(source + ": unknown activation code " + std::to_string(act));
    }
    r.u8();
    r.u8();
    nn::ModelParams p;
    p.activation = static_cast<nn::Activation>(act);
    p.dim = r.u32();
    p.time_frequencies = r.u32();
    p.horizon = r.f64();
    if (p.dim == 0 || p.dim > (1u << 20)) {
        throw ConfigError(source + ": implausible dimension");
    }
    r.need(8 * p.dim);
    p.sigma.resize(static_cast<Eigen::Index>(p.dim));
    for (std::size_t j = 0; j < p.dim; ++j) {
        p.sigma[static_cast<Eigen::Index>(j)] = r.f64();
    }
    const std::uint32_t layers = r.u32();
    if (layers == 0 || layers > 1024) {
        throw ConfigError(source + ": implausible layer count");
    }
    r.need(4 * (static_cast<std::size_t>(layers) + 1));
    std::vector<std::size_t> widths(layers + 1);
    for (auto& width : widths) {
        width = r.u32();
    }
    for (std::uint32_t l = 0; l < layers; ++l) {
        const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
        const auto cols = static_cast<Eigen::Index>(widths[l]);
        r.need(8 * static_cast<std::size_t>(rows * cols + rows));
        nn::Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                m(i, j) = r.f64();
            }
        }
        Vector b(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            b[i] = r.f64();
        }
        p.weights.push_back(std::move(m));
        p.biases.push_back(std::move(b));
    }
    const std::size_t body = r.position();
    const std::uint64_t stored = r.u64();
    if (r.position() != bytes.size()) {
        throw ConfigError(source + ": trailing bytes after checksum");
    }
    if (stored != fnv1a64(bytes.substr(0, body))) {
        throw ConfigError(source + ": checksum mismatch");
    }
    if (widths.front() != p.input_dim()) {
        throw ConfigError(source + ": input width does not match dim and time features");
    }
    p.validate();
    return p;
}

inline void write_checkpoint(const std::string& path, const nn::ModelParams& p) {
    write_file(path, serialize_checkpoint(p));
}

inline nn::ModelParams read_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path), path); }

} // namespace rbridge::io
