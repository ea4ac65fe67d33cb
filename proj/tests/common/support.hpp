#pragma once

#include "mathpii/corpus.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testsupport {

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mathpii-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline mathpii::Message message(std::size_t index, std::string role, std::string text) {
    mathpii::Message m;
    m.index = index;
    m.role = std::move(role);
    m.text = std::move(text);
    return m;
}

// Label over the first occurrence of `surface` (ASCII text only).
inline mathpii::PiiSpan label_at(const std::string& text, const std::string& surface, mathpii::PiiType type,
                                 mathpii::Provenance prov = mathpii::Provenance::Upstream) {
    const auto pos = text.find(surface);
    if (pos == std::string::npos) throw std::logic_error("surface not in text: " + surface);
    return mathpii::PiiSpan{pos, pos + surface.size(), surface, type, prov};
}

}  // namespace testsupport
