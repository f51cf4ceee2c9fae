// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/language.hpp"

#include <cstdint>
#include <string>

namespace codesieve {

// One source file; the unit flowing through every pipeline stage.
struct CodeDocument {
    std::string id;         // unique within a corpus
    std::string repo_name;
    std::string path;       // file path within the repo
    std::string language;   // canonical name from the manifest's language set
    std::string content;    // UTF-8 text
    uint64_t token_count = 0;

    bool operator==(const CodeDocument&) const = default;
};

// Stable id for records that arrive without one:
// hex(fnv) over (repo_name, path, content hash).
std::string derive_document_id(const std::string& repo_name,
                               const std::string& path,
                               const std::string& content);

bool is_valid_utf8(std::string_view bytes);

} // namespace codesieve
