#pragma once

#include <string_view>

namespace mathpii {

enum class PromptVariant { Basic, MathAware, SegmentAware };

std::string_view to_string(PromptVariant variant);
// Accepts BASIC / MATH_AWARE / SEGMENT_AWARE and the short CLI forms
// basic / math / segment (case-insensitive, '-' and '_' interchangeable).
PromptVariant parse_prompt_variant(std::string_view text);

// System text for each detection variant.
std::string_view detection_prompt(PromptVariant variant);

// System text for the redaction audit and surrogate generation pass.
std::string_view audit_prompt();

}  // namespace mathpii
