#pragma once

#include <stdexcept>
#include <string>

namespace darap {

// Error categories map 1:1 onto CLI exit codes (see tools/darap.cpp).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct protocol_error : std::runtime_error {
    explicit protocol_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace darap
