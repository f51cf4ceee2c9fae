// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/document.hpp"

#include <map>
#include <string>
#include <vector>

namespace codesieve {

// Bucket documents by language. Every input document lands in exactly one
// bucket, keyed by its canonical language name; within-bucket order is input
// order. The map is ordered so iteration is deterministic.
std::map<std::string, std::vector<CodeDocument>> partition_by_language(std::vector<CodeDocument> docs);

// Per-language token mass of a collection; the measured mix ratio input.
std::map<std::string, uint64_t> token_mass_by_language(const std::vector<CodeDocument>& docs);

} // namespace codesieve
