#pragma once

// UTF-8 offset handling and the small string helpers shared across modules.
// Span offsets everywhere in the data model count Unicode scalar values, while
// regex engines and std::string work in bytes; OffsetMap translates between
// the two for one piece of text.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mathpii {

class OffsetMap {
public:
    explicit OffsetMap(std::string_view text);

    // Number of scalar values in the text.
    std::size_t size() const { return byte_offsets_.size() - 1; }

    // Byte offset of scalar index `cp` (cp == size() maps to the byte length).
    std::size_t to_byte(std::size_t cp) const { return byte_offsets_.at(cp); }

    // Scalar index containing byte `byte`; a byte inside a multi-byte sequence
    // maps to the scalar it belongs to.
    std::size_t to_codepoint(std::size_t byte) const;

private:
    std::vector<std::size_t> byte_offsets_;
};

bool is_valid_utf8(std::string_view text);
std::size_t codepoint_length(std::string_view text);

// Substring by scalar offsets [start, end).
std::string codepoint_slice(std::string_view text, std::size_t start, std::size_t end);

// ASCII-only lowering; multi-byte sequences pass through untouched.
std::string ascii_lower(std::string_view text);

std::string_view trim_whitespace(std::string_view text);

// Case-fold + trim, the normalization used when comparing span texts.
std::string normalize_span_text(std::string_view text);

// Collapse runs of ASCII whitespace to one space and trim the ends.
std::string collapse_whitespace(std::string_view text);

bool is_ascii_space(char c);

}  // namespace mathpii
