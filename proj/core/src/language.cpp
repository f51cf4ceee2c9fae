// SPDX-License-Identifier: Apache-2.0
#include "codesieve/language.hpp"

#include <algorithm>

namespace codesieve {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    });
    return out;
}

bool LanguageTag::operator==(const LanguageTag& other) const {
    return lower_ascii(name) == lower_ascii(other.name);
}

bool LanguageTag::operator<(const LanguageTag& other) const {
    return lower_ascii(name) < lower_ascii(other.name);
}

LanguageSet::LanguageSet(std::vector<std::string> names) : names_(std::move(names)) {
    lowered_.reserve(names_.size());
    for (const auto& n : names_) lowered_.push_back(lower_ascii(n));
}

const LanguageSet& LanguageSet::default_set() {
    static const LanguageSet set({
        "Python", "Java", "C++", "C", "JavaScript", "PHP", "C#", "Go",
        "TypeScript", "SQL", "Ruby", "Rust", "Jupyter Notebook", "Scala",
        "Kotlin", "Shell", "Dart", "Swift",
    });
    return set;
}

std::optional<LanguageTag> LanguageSet::canonicalize(std::string_view name) const {
    const std::string key = lower_ascii(name);
    for (size_t i = 0; i < lowered_.size(); ++i) {
        if (lowered_[i] == key) return LanguageTag{names_[i]};
    }
    return std::nullopt;
}

bool LanguageSet::contains(std::string_view name) const {
    return canonicalize(name).has_value();
}

} // namespace codesieve
