#include "mathpii/text.hpp"

#include <algorithm>
#include <cstdint>

namespace mathpii {

namespace {

std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // stray continuation byte; count it as its own unit
}

}  // namespace

OffsetMap::OffsetMap(std::string_view text) {
    byte_offsets_.reserve(text.size() + 1);
    std::size_t i = 0;
    while (i < text.size()) {
        byte_offsets_.push_back(i);
        i += sequence_length(static_cast<unsigned char>(text[i]));
    }
    byte_offsets_.push_back(std::min(i, text.size()));
}

std::size_t OffsetMap::to_codepoint(std::size_t byte) const {
    auto it = std::upper_bound(byte_offsets_.begin(), byte_offsets_.end(), byte);
    return static_cast<std::size_t>(std::distance(byte_offsets_.begin(), it)) - 1;
}

bool is_valid_utf8(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t n = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c >> 5) == 0x6) {
            n = 1;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            n = 2;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            n = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + n >= text.size()) return false;
        for (std::size_t k = 1; k <= n; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc >> 6) != 0x2) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000)) return false;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += n + 1;
    }
    return true;
}

std::size_t codepoint_length(std::string_view text) {
    std::size_t n = 0;
    for (char c : text)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

std::string codepoint_slice(std::string_view text, std::size_t start, std::size_t end) {
    OffsetMap map(text);
    start = std::min(start, map.size());
    end = std::clamp(end, start, map.size());
    const auto b = map.to_byte(start);
    return std::string(text.substr(b, map.to_byte(end) - b));
}

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim_whitespace(std::string_view text) {
    while (!text.empty() && is_ascii_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_ascii_space(text.back())) text.remove_suffix(1);
    return text;
}

std::string normalize_span_text(std::string_view text) {
    return ascii_lower(trim_whitespace(text));
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : trim_whitespace(text)) {
        if (is_ascii_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace mathpii
