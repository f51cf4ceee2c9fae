// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace codesieve {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (bad parameters, missing resources
// named by config, schema violations). Maps to exit code 3 in the CLI.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed or contradictory data encountered while a stage runs.
// Maps to exit code 4 in the CLI.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// A stage was asked to run before the stage that produces its input.
// Maps to exit code 5 in the CLI.
class UpstreamMissingError : public Error {
public:
    explicit UpstreamMissingError(const std::string& msg) : Error(msg) {}
};

} // namespace codesieve
