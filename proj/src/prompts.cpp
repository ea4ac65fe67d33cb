#include "mathpii/prompts.hpp"

#include "mathpii/errors.hpp"
#include "mathpii/text.hpp"

#include <algorithm>
#include <string>

namespace mathpii {

namespace {

// Shared taxonomy block of the three detection prompts.
#define MATHPII_DETECTION_TYPES                                                                                      \
    "PII Types to detect:\n"                                                                                         \
    "\n"                                                                                                             \
    "AGE\n"                                                                                                          \
    "\n"                                                                                                             \
    "COURSE: must be a subject or its acronym with a multi-digit number, e.g., algebra 300, geometry 101, CS 503; "  \
    "only a subject name without a course number, e.g., calculus, precal one, geomtry 2 is NOT a COURSE\n"           \
    "\n"                                                                                                             \
    "DATE: a specific date; just a year, a month, or a day of the week (i.e., Monday, Tuesday, Wednesday, "         \
    "Thursday, Friday, Saturday, Sunday) is not a specific date\n"                                                   \
    "\n"                                                                                                             \
    "EMAIL_ADDRESS\n"                                                                                                \
    "\n"                                                                                                             \
    "GRADE_LEVEL: grade level should be related to the speaker's identity rather than a general mention of a "      \
    "grade level\n"                                                                                                  \
    "\n"                                                                                                             \
    "IP_ADDRESS\n"                                                                                                   \
    "\n"                                                                                                             \
    "LOCATION: geographic subdivisions smaller than a State\n"                                                       \
    "\n"                                                                                                             \
    "NRP: Nationality, Religous, and Political groups; it should not be non-personal identifiable information, "    \
    "e.g., the \"Greek\" letter, the \"English\" word\n"                                                             \
    "\n"                                                                                                             \
    "PERSON: any person's name in any language\n"                                                                    \
    "\n"                                                                                                             \
    "PHONE_NUMBER\n"                                                                                                 \
    "\n"                                                                                                             \
    "SCHOOL: common school names, e.g., Jackson High, or public school numbering, e.g. PS 123, 22K014, etc.\n"      \
    "\n"                                                                                                             \
    "SOCIAL_HANDLE\n"                                                                                                \
    "\n"                                                                                                             \
    "URL\n"                                                                                                          \
    "\n"                                                                                                             \
    "US_BANK_NUMBER\n"                                                                                               \
    "\n"                                                                                                             \
    "US_DRIVER_LICENSE\n"                                                                                            \
    "\n"                                                                                                             \
    "US_PASSPORT\n"                                                                                                  \
    "\n"                                                                                                             \
    "US_SSN\n"                                                                                                       \
    "\n"                                                                                                             \
    "Output:\n"                                                                                                      \
    "\n"                                                                                                             \
    "- \"text\": The exact string representing the PII found in the message.\n"                                     \
    "\n"                                                                                                             \
    "- \"type\": The PII type from the list above.\n"                                                                \
    "\n"                                                                                                             \
    "If no PII is found, do not return anything.\n"

constexpr std::string_view kBasic =
    "You are a specialist in PII (Personally Identifiable Information) detection.\n"
    "\n"
    "Your task is to identify ALL PII in the provided message content.\n"
    "\n" MATHPII_DETECTION_TYPES;

constexpr std::string_view kMathAware =
    "You are a specialist in PII (Personally Identifiable Information) detection.\n"
    "\n"
    "Your task is to identify ALL PII in the provided message content that comes from math tutoring sessions. "
    "Pay attention that general math content should not be annotated as PII, e.g., math subjects, concepts, "
    "symbols, equations, mathematicians' names, etc.\n"
    "\n" MATHPII_DETECTION_TYPES;

constexpr std::string_view kSegmentAware =
    "You are a specialist in PII (Personally Identifiable Information) detection.\n"
    "\n"
    "Your task is to identify ALL PII in the provided message content.\n"
    "\n"
    "If the message is likely to be about mathematics, its \"math_label\" field will have the value \"MATH\". "
    "Otherwise, the \"math_label\" will be \"NON-MATH\". Note that math terms, symbols, and expressions can be "
    "similar to some PII types below. Be extra careful when detecting PII within math messages.\n"
    "\n" MATHPII_DETECTION_TYPES;

#undef MATHPII_DETECTION_TYPES

constexpr std::string_view kAudit =
    "Role: You are a Senior PII (Personally Identifiable Information) Analyst and Data Sanitization Expert "
    "specializing in math tutoring transcripts.\n"
    "\n"
    "Objective: Analyze transcripts to identify unredacted PII, validate existing redactions, and generate "
    "high-quality, context-aware \"surrogates\" (replacement data) to maintain the natural flow of the "
    "conversation. Note: a lot of existing redactions are not accurate. They often confuse the math content with "
    "PII. Be careful when evaluating them and generating surrogate.\n"
    "\n"
    "PII Taxonomy (17 Types):\n"
    "\n"
    "AGE\n"
    "\n"
    "COURSE: must be a subject or its acronym with a multi-digit number, e.g., algebra 300, geometry 101, CS 503; "
    "only a subject name without a course number, e.g., calculus, precal one, geomtry 2 is NOT a COURSE\n"
    "\n"
    "DATE\n"
    "\n"
    "EMAIL_ADDRESS\n"
    "\n"
    "GRADE_LEVEL\n"
    "\n"
    "IP_ADDRESS\n"
    "\n"
    "LOCATION: geographic subdivisions smaller than a State\n"
    "NRP: Nationality, Religous, and Political groups; it should not be non-personal identifiable information, "
    "e.g., the \"Greek\" letter, the \"English\" word\n"
    "\n"
    "PERSON: any person's name in any language\n"
    "\n"
    "PHONE_NUMBER\n"
    "\n"
    "SCHOOL: common school names, e.g., Jackson High, or public school numbering, e.g. PS 123, 22K014, etc.\n"
    "\n"
    "SOCIAL_HANDLE\n"
    "\n"
    "URL\n"
    "\n"
    "US_BANK_NUMBER\n"
    "\n"
    "US_DRIVER_LICENSE\n"
    "\n"
    "US_PASSPORT\n"
    "\n"
    "US_SSN\n"
    "\n"
    "Task Instructions:\n"
    "\n"
    "1. Detection: Scan each message for PII from the taxonomy. Some PII has been redacted. Some has not. For every "
    "PII instance, identify which PII type in the taxonomy it belongs to.\n"
    "\n"
    "2. Evaluation: For every PII instance (pre-redacted or newly found), use at least a window of 3 messages above "
    "and 3 messages below to determine if the tag is valid. Label as \"PII\", \"Not PII\", or \"Uncertain\".\n"
    "\n"
    "3. Redaction: If unredacted PII is found, provide the message with the PII replaced by the tag (e.g., "
    "<PERSON>).\n"
    "\n"
    "4. Surrogation:\n"
    "\n"
    "4.1. If \"PII\" or \"Uncertain\": Generate a specific, realistic surrogate that fit the PII type (e.g., replace "
    "<SCHOOL> with \"Northview High\", not \"the school\"). Keep the entity name consistent in a transcript. "
    "Meanwhile, do not reuse the same names or places across the transcript. If the original PII is know, the "
    "generated surrogate should be significantly different in spelling from the original one.\n"
    "\n"
    "4.2. If \"Not PII\": If the redaction was a mistake, replace it with the content that fit the context. In "
    "particular, if it is actually math content, replace it with mathematically sound values that fit the logic of "
    "the statement.\n"
    "\n"
    "4.3. Format: Return only the surrogate value (e.g., \"John\"), not the full sentence.\n"
    "\n"
    "Output Format: Return the analysis in a table with the following columns:\n"
    "\n"
    "1. pii_type: The identified category from the 17 types of each message containing PII.\n"
    "\n"
    "2. ai_redacted_content: The message with <PII_TYPE> (only for newly discovered PII; otherwise leave blank).\n"
    "\n"
    "3. pii_evaluation: \"PII\", \"Not PII\", or \"Uncertain\".\n"
    "\n"
    "4. surrogate: The specific replacement value for the tag.\n";

}  // namespace

std::string_view to_string(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::Basic: return "BASIC";
        case PromptVariant::MathAware: return "MATH_AWARE";
        case PromptVariant::SegmentAware: return "SEGMENT_AWARE";
    }
    return "BASIC";
}

PromptVariant parse_prompt_variant(std::string_view text) {
    std::string t = ascii_lower(trim_whitespace(text));
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "basic") return PromptVariant::Basic;
    if (t == "math_aware" || t == "math") return PromptVariant::MathAware;
    if (t == "segment_aware" || t == "segment") return PromptVariant::SegmentAware;
    throw ValidationError("unknown prompt variant '" + std::string(text) + "'");
}

std::string_view detection_prompt(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::Basic: return kBasic;
        case PromptVariant::MathAware: return kMathAware;
        case PromptVariant::SegmentAware: return kSegmentAware;
    }
    return kBasic;
}

std::string_view audit_prompt() { return kAudit; }

}  // namespace mathpii
