#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"

// Binary netpbm codecs: PGM (P5, maxval 65535, big-endian samples) for raw
// digital numbers and PPM (P6, maxval 255) for RGB. Round trips are bit-exact.

namespace thermforge {

namespace detail {

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

inline bool is_pnm_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    long maxval = 0;
    std::size_t maxval_offset = 0;
    std::size_t payload_offset = 0;
};

inline PnmHeader parse_pnm_header(const std::vector<char>& buf, const std::string& expected_magic) {
    std::size_t pos = 0;
    auto next_token = [&](const char* what) {
        while (pos < buf.size() && is_pnm_space(buf[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < buf.size() && !is_pnm_space(buf[pos])) ++pos;
        if (start == pos)
            throw ParseError(std::string("missing ") + what + " token", start);
        return std::pair<std::string, std::size_t>(std::string(buf.begin() + start, buf.begin() + pos), start);
    };

    PnmHeader h;
    auto [magic, magic_at] = next_token("magic");
    if (magic != expected_magic)
        throw ParseError("unsupported format: expected \"" + expected_magic + "\", got \"" + magic + "\"", magic_at);
    h.magic = magic;

    auto parse_int = [&](const char* what) {
        auto [tok, at] = next_token(what);
        long v = 0;
        for (char c : tok) {
            if (c < '0' || c > '9')
                throw ParseError(std::string("malformed ") + what + " token \"" + tok + "\"", at);
            v = v * 10 + (c - '0');
            if (v > 1000000000) throw ParseError(std::string(what) + " out of range", at);
        }
        return std::pair<long, std::size_t>(v, at);
    };

    auto [w, w_at] = parse_int("width");
    auto [ht, h_at] = parse_int("height");
    if (w < 1) throw ParseError("width must be >= 1", w_at);
    if (ht < 1) throw ParseError("height must be >= 1", h_at);
    auto [mv, mv_at] = parse_int("maxval");
    h.width = static_cast<int>(w);
    h.height = static_cast<int>(ht);
    h.maxval = mv;
    h.maxval_offset = mv_at;
    // exactly one whitespace byte separates maxval from the payload
    if (pos >= buf.size() || !is_pnm_space(buf[pos]))
        throw ParseError("missing whitespace before payload", pos);
    h.payload_offset = pos + 1;
    return h;
}

} // namespace detail

inline ThermalFrame load_pgm16(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    const auto h = detail::parse_pnm_header(buf, "P5");
    if (h.maxval != 65535)
        throw ParseError("maxval must be 65535, got " + std::to_string(h.maxval), h.maxval_offset);

    ThermalFrame frame;
    frame.width = h.width;
    frame.height = h.height;
    frame.capture_id = path.stem().string();
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t need = 2 * n;
    const std::size_t have = buf.size() - h.payload_offset;
    if (have < need)
        throw ParseError("payload truncated: expected " + std::to_string(need) +
                             " bytes, got " + std::to_string(have),
                         have);
    frame.dn.resize(n);
    const auto* p = reinterpret_cast<const std::uint8_t*>(buf.data() + h.payload_offset);
    for (std::size_t i = 0; i < n; ++i)
        frame.dn[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    return frame;
}

inline void save_pgm16(const ThermalFrame& frame, const std::filesystem::path& path) {
    check_frame(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    std::vector<std::uint8_t> payload(frame.dn.size() * 2);
    for (std::size_t i = 0; i < frame.dn.size(); ++i) {
        payload[2 * i] = static_cast<std::uint8_t>(frame.dn[i] >> 8);
        payload[2 * i + 1] = static_cast<std::uint8_t>(frame.dn[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline RgbFrame load_ppm(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    const auto h = detail::parse_pnm_header(buf, "P6");
    if (h.maxval != 255)
        throw ParseError("maxval must be 255, got " + std::to_string(h.maxval), h.maxval_offset);

    RgbFrame frame;
    frame.width = h.width;
    frame.height = h.height;
    frame.capture_id = path.stem().string();
    const std::size_t need = 3 * static_cast<std::size_t>(h.width) * h.height;
    const std::size_t have = buf.size() - h.payload_offset;
    if (have < need)
        throw ParseError("payload truncated: expected " + std::to_string(need) +
                             " bytes, got " + std::to_string(have),
                         have);
    frame.rgb.assign(buf.begin() + static_cast<std::ptrdiff_t>(h.payload_offset),
                     buf.begin() + static_cast<std::ptrdiff_t>(h.payload_offset + need));
    return frame;
}

inline void save_ppm(const RgbFrame& frame, const std::filesystem::path& path) {
    check_frame(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.rgb.data()),
              static_cast<std::streamsize>(frame.rgb.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace thermforge
