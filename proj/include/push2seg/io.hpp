#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "push2seg/flow.hpp"
#include "push2seg/mask.hpp"

namespace push2seg {

// File formats:
//   LabelImage  - binary PGM "P5", maxval 65535, 16-bit big-endian samples.
//   GrayImage   - binary PGM "P5", maxval 255.
//   FlowField   - Middlebury .flo: little-endian float magic 202021.25,
//                 int32 width, int32 height, interleaved float (u,v) rows.

namespace detail {

inline void append_le32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t read_le32(const std::string& s, std::size_t pos) {
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[pos])) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[pos + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[pos + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[pos + 3])) << 24);
}

/// Reads one whitespace-delimited PGM header token, skipping '#' comments.
inline std::string pgm_token(const std::string& s, std::size_t& pos) {
    while (pos < s.size()) {
        char c = s[pos];
        if (c == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw std::runtime_error("pgm: truncated header");
    return s.substr(start, pos - start);
}

struct PgmHeader {
    int width, height, maxval;
    std::size_t data_pos;
};

inline PgmHeader parse_pgm_header(const std::string& s) {
    std::size_t pos = 0;
    if (pgm_token(s, pos) != "P5") throw std::runtime_error("pgm: not a P5 file");
    PgmHeader h{};
    h.width = std::stoi(pgm_token(s, pos));
    h.height = std::stoi(pgm_token(s, pos));
    h.maxval = std::stoi(pgm_token(s, pos));
    if (pos >= s.size()) throw std::runtime_error("pgm: truncated header");
    h.data_pos = pos + 1;  // exactly one whitespace byte after maxval
    if (h.width < 0 || h.height < 0) throw std::runtime_error("pgm: bad dimensions");
    return h;
}

}  // namespace detail

inline std::string encode_label_pgm(const LabelImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n65535\n";
    out.reserve(out.size() + img.data.size() * 2);
    for (std::uint16_t v : img.data) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

inline LabelImage decode_label_pgm(const std::string& bytes) {
    auto h = detail::parse_pgm_header(bytes);
    if (h.maxval != 65535) throw std::runtime_error("label pgm: expected maxval 65535");
    std::size_t need = static_cast<std::size_t>(h.width) * h.height * 2;
    if (bytes.size() - h.data_pos < need) throw std::runtime_error("label pgm: truncated data");
    LabelImage img(h.width, h.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        std::uint8_t hi = static_cast<std::uint8_t>(bytes[h.data_pos + 2 * i]);
        std::uint8_t lo = static_cast<std::uint8_t>(bytes[h.data_pos + 2 * i + 1]);
        img.data[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return img;
}

inline std::string encode_gray_pgm(const GrayImage& img) {
    std::string out =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

inline GrayImage decode_gray_pgm(const std::string& bytes) {
    auto h = detail::parse_pgm_header(bytes);
    if (h.maxval != 255) throw std::runtime_error("gray pgm: expected maxval 255");
    std::size_t need = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.data_pos < need) throw std::runtime_error("gray pgm: truncated data");
    GrayImage img(h.width, h.height);
    std::memcpy(img.data.data(), bytes.data() + h.data_pos, need);
    return img;
}

inline std::string encode_flo(const FlowField& f) {
    std::string out;
    out.reserve(12 + f.u.size() * 8);
    detail::append_le32(out, std::bit_cast<std::uint32_t>(202021.25f));
    detail::append_le32(out, static_cast<std::uint32_t>(f.width));
    detail::append_le32(out, static_cast<std::uint32_t>(f.height));
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        detail::append_le32(out, std::bit_cast<std::uint32_t>(f.u[i]));
        detail::append_le32(out, std::bit_cast<std::uint32_t>(f.v[i]));
    }
    return out;
}

inline FlowField decode_flo(const std::string& bytes) {
    if (bytes.size() < 12) throw std::runtime_error("flo: truncated header");
    float magic = std::bit_cast<float>(detail::read_le32(bytes, 0));
    if (magic != 202021.25f) throw std::runtime_error("flo: bad magic");
    int w = static_cast<int>(detail::read_le32(bytes, 4));
    int h = static_cast<int>(detail::read_le32(bytes, 8));
    if (w < 0 || h < 0) throw std::runtime_error("flo: bad dimensions");
    std::size_t need = 12 + static_cast<std::size_t>(w) * h * 8;
    if (bytes.size() < need) throw std::runtime_error("flo: truncated data");
    FlowField f(w, h);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u[i] = std::bit_cast<float>(detail::read_le32(bytes, 12 + 8 * i));
        f.v[i] = std::bit_cast<float>(detail::read_le32(bytes, 12 + 8 * i + 4));
    }
    return f;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw std::runtime_error("read failed: " + path.string());
    return bytes;
}

/// Writes via a temp file in the same directory plus rename, so concurrent
/// writers never expose partially written files.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open file for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out.good()) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_label_pgm(const std::filesystem::path& p, const LabelImage& img) {
    atomic_write_file(p, encode_label_pgm(img));
}
inline LabelImage read_label_pgm(const std::filesystem::path& p) {
    try {
        return decode_label_pgm(read_file(p));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
    }
}
inline void write_gray_pgm(const std::filesystem::path& p, const GrayImage& img) {
    atomic_write_file(p, encode_gray_pgm(img));
}
inline GrayImage read_gray_pgm(const std::filesystem::path& p) {
    try {
        return decode_gray_pgm(read_file(p));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
    }
}
inline void write_flo(const std::filesystem::path& p, const FlowField& f) {
    atomic_write_file(p, encode_flo(f));
}
inline FlowField read_flo(const std::filesystem::path& p) {
    try {
        return decode_flo(read_file(p));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
    }
}

}  // namespace push2seg
