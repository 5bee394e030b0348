#pragma once

#include <stdexcept>
#include <string>

namespace rocod {

// Bad parameters, bad configuration, misuse of a pipeline stage. CLI exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed input data. CLI exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace rocod
