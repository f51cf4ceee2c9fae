// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

// Canonical language name. Comparison is case-insensitive; the canonical
// spelling is whatever the owning LanguageSet declares.
struct LanguageTag {
    std::string name;

    bool operator==(const LanguageTag& other) const;
    bool operator<(const LanguageTag& other) const;
};

std::string lower_ascii(std::string_view s);

// The closed set of languages a corpus manifest declares. Lookup is
// case-insensitive and returns the canonical spelling.
class LanguageSet {
public:
    LanguageSet() = default;
    explicit LanguageSet(std::vector<std::string> names);

    // The 18 languages used by the default corpus configuration.
    static const LanguageSet& default_set();

    std::optional<LanguageTag> canonicalize(std::string_view name) const;
    bool contains(std::string_view name) const;
    const std::vector<std::string>& names() const { return names_; }
    size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;            // canonical spellings, declared order
    std::vector<std::string> lowered_;          // parallel lowercase keys
};

} // namespace codesieve
