#include "mathpii/pii_type.hpp"

#include "mathpii/errors.hpp"

#include <string>

namespace mathpii {

namespace {

constexpr std::array<std::string_view, 17> kCodes = {
    "AGE",           "COURSE_NUMBER", "DATE",       "EMAIL_ADDRESS",
    "GRADE_LEVEL",   "IP_ADDRESS",    "LOCATION",   "NRP",
    "PERSON",        "PHONE_NUMBER",  "SCHOOL",     "SOCIAL_HANDLE",
    "URL",           "US_BANK_NUMBER", "US_DRIVER_LICENSE", "US_PASSPORT",
    "US_SSN",
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view to_string(PiiType type) { return kCodes[index_of(type)]; }

std::string_view prompt_name(PiiType type) {
    return type == PiiType::CourseNumber ? std::string_view("COURSE") : to_string(type);
}

std::optional<PiiType> try_parse_pii_type(std::string_view text) {
    text = trim(text);
    if (text.size() >= 2 && text.front() == '<' && text.back() == '>')
        text = trim(text.substr(1, text.size() - 2));
    if (text == "COURSE") return PiiType::CourseNumber;
    for (std::size_t i = 0; i < kCodes.size(); ++i)
        if (kCodes[i] == text) return kAllPiiTypes[i];
    return std::nullopt;
}

PiiType parse_pii_type(std::string_view text) {
    if (auto t = try_parse_pii_type(text)) return *t;
    throw ValidationError("unknown PII type '" + std::string(text) + "'");
}

bool is_numeric_type(PiiType type) {
    switch (type) {
        case PiiType::Date:
        case PiiType::UsDriverLicense:
        case PiiType::PhoneNumber:
        case PiiType::UsSsn:
        case PiiType::UsBankNumber:
            return true;
        default:
            return false;
    }
}

}  // namespace mathpii
