#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace mathpii {

// The 17-member taxonomy used by every engine and by the benchmark labels.
enum class PiiType {
    Age,
    CourseNumber,
    Date,
    EmailAddress,
    GradeLevel,
    IpAddress,
    Location,
    Nrp,
    Person,
    PhoneNumber,
    School,
    SocialHandle,
    Url,
    UsBankNumber,
    UsDriverLicense,
    UsPassport,
    UsSsn,
};

inline constexpr std::array<PiiType, 17> kAllPiiTypes = {
    PiiType::Age,          PiiType::CourseNumber, PiiType::Date,
    PiiType::EmailAddress, PiiType::GradeLevel,   PiiType::IpAddress,
    PiiType::Location,     PiiType::Nrp,          PiiType::Person,
    PiiType::PhoneNumber,  PiiType::School,       PiiType::SocialHandle,
    PiiType::Url,          PiiType::UsBankNumber, PiiType::UsDriverLicense,
    PiiType::UsPassport,   PiiType::UsSsn,
};

// Canonical code, e.g. "COURSE_NUMBER".
std::string_view to_string(PiiType type);

// Name used inside the prompt taxonomy; differs from the code only for
// COURSE_NUMBER, which prompts call "COURSE".
std::string_view prompt_name(PiiType type);

// Accepts the 17 codes and the "COURSE" alias. Surrounding whitespace and
// angle brackets ("<PERSON>") are tolerated; case is not.
std::optional<PiiType> try_parse_pii_type(std::string_view text);

// Throws ValidationError on anything outside the taxonomy.
PiiType parse_pii_type(std::string_view text);

// Types whose surface forms are numeric identifiers; these are the ones math
// content gets mistaken for.
bool is_numeric_type(PiiType type);

inline constexpr std::size_t index_of(PiiType type) { return static_cast<std::size_t>(type); }

}  // namespace mathpii
