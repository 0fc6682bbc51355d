#include "nanprop/wire.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>

#include "nanprop/errors.hpp"
#include "nanprop/payload.hpp"

namespace nanprop::wire {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + k])) << (8 * k);
    return v;
}

std::uint64_t get_u64(std::string_view b, std::size_t at) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + k])) << (8 * k);
    return v;
}

std::uint32_t checked_count(std::size_t n) {
    if (n > kMaxValues) throw WireError("frame too large: " + std::to_string(n) + " values");
    return static_cast<std::uint32_t>(n);
}

void check_magic(std::string_view buffer) {
    const std::size_t k = std::min(buffer.size(), kMagic.size());
    if (buffer.substr(0, k) != kMagic.substr(0, k)) throw WireError("bad frame magic");
}

std::optional<std::vector<double>> read_values(std::string_view buffer, std::size_t at,
                                               std::uint32_t n, std::size_t& consumed) {
    if (n > kMaxValues) throw WireError("frame too large: " + std::to_string(n) + " values");
    const std::size_t need = at + 8 * static_cast<std::size_t>(n);
    if (buffer.size() < need) return std::nullopt;
    std::vector<double> values(n);
    for (std::uint32_t k = 0; k < n; ++k) values[k] = from_bits(get_u64(buffer, at + 8 * k));
    consumed = need;
    return values;
}

// Collects `count` complete lines starting at `pos`; nullopt if incomplete.
std::optional<std::vector<std::string_view>> take_lines(std::string_view buffer, std::size_t pos,
                                                        std::size_t count, std::size_t& end) {
    std::vector<std::string_view> lines;
    lines.reserve(count);
    while (lines.size() < count) {
        const std::size_t nl = buffer.find('\n', pos);
        if (nl == std::string_view::npos) return std::nullopt;
        std::string_view line = buffer.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    end = pos;
    return lines;
}

std::uint64_t parse_uint(std::string_view token, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        throw WireError(std::string("bad ") + what + " '" + std::string(token) + "'");
    }
    return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<std::vector<double>> hex_values(std::string_view buffer, std::size_t pos,
                                              std::uint64_t n, std::size_t& consumed) {
    if (n > kMaxValues) throw WireError("frame too large: " + std::to_string(n) + " values");
    std::size_t end = 0;
    auto lines = take_lines(buffer, pos, static_cast<std::size_t>(n), end);
    if (!lines) return std::nullopt;
    std::vector<double> values;
    values.reserve(lines->size());
    for (auto line : *lines) values.push_back(parse_hex_bits(line));
    consumed = end;
    return values;
}

}  // namespace

std::string hex_bits(double v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::uint64_t bits = to_bits(v);
    std::string out(16, '0');
    for (int k = 0; k < 16; ++k) out[15 - k] = kDigits[(bits >> (4 * k)) & 0xF];
    return out;
}

double parse_hex_bits(std::string_view text) {
    if (text.size() != 16) throw WireError("hex value must have 16 digits: '" + std::string(text) + "'");
    std::uint64_t bits = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), bits, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw WireError("bad hex value '" + std::string(text) + "'");
    }
    return from_bits(bits);
}

std::string encode_request(std::span<const double> values, Format format) {
    const std::uint32_t n = checked_count(values.size());
    std::string out;
    if (format == Format::Binary) {
        out.reserve(8 + 8 * values.size());
        out += kMagic;
        put_u32(out, n);
        for (double v : values) put_u64(out, to_bits(v));
    } else {
        out += std::string(kMagic) + ' ' + std::to_string(n) + '\n';
        for (double v : values) out += hex_bits(v) + '\n';
    }
    return out;
}

std::string encode_response(Status status, std::span<const double> values, Format format) {
    const std::uint32_t n = checked_count(values.size());
    std::string out;
    if (format == Format::Binary) {
        out.reserve(9 + 8 * values.size());
        out += kMagic;
        out.push_back(static_cast<char>(status));
        put_u32(out, n);
        for (double v : values) put_u64(out, to_bits(v));
    } else {
        out += std::string(kMagic) + ' ' + std::to_string(static_cast<int>(status)) + ' ' +
               std::to_string(n) + '\n';
        for (double v : values) out += hex_bits(v) + '\n';
    }
    return out;
}

std::optional<std::vector<double>> try_parse_request(std::string_view buffer, Format format,
                                                     std::size_t& consumed) {
    check_magic(buffer);
    if (format == Format::Binary) {
        if (buffer.size() < 8) return std::nullopt;
        return read_values(buffer, 8, get_u32(buffer, 4), consumed);
    }
    std::size_t pos = 0;
    auto header = take_lines(buffer, 0, 1, pos);
    if (!header) return std::nullopt;
    const auto tok = tokens(header->front());
    if (tok.size() != 2 || tok[0] != kMagic) throw WireError("bad hex request header");
    return hex_values(buffer, pos, parse_uint(tok[1], "value count"), consumed);
}

std::optional<Response> try_parse_response(std::string_view buffer, Format format,
                                           std::size_t& consumed) {
    check_magic(buffer);
    Response response;
    std::optional<std::vector<double>> values;
    std::uint64_t status = 0;
    if (format == Format::Binary) {
        if (buffer.size() < 9) return std::nullopt;
        status = static_cast<unsigned char>(buffer[4]);
        if (status > 1) throw WireError("bad response status " + std::to_string(status));
        values = read_values(buffer, 9, get_u32(buffer, 5), consumed);
    } else {
        std::size_t pos = 0;
        auto header = take_lines(buffer, 0, 1, pos);
        if (!header) return std::nullopt;
        const auto tok = tokens(header->front());
        if (tok.size() != 3 || tok[0] != kMagic) throw WireError("bad hex response header");
        status = parse_uint(tok[1], "status");
        if (status > 1) throw WireError("bad response status " + std::to_string(status));
        values = hex_values(buffer, pos, parse_uint(tok[2], "value count"), consumed);
    }
    if (!values) return std::nullopt;
    response.status = static_cast<Status>(status);
    response.values = std::move(*values);
    return response;
}

}  // namespace nanprop::wire
