#pragma once

#include <stdexcept>
#include <string>

namespace uica {

// Error classes map to distinct CLI exit codes and python exception types.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulation aborts on instructions outside the loaded table; blocks are
// never silently truncated.
struct UnknownInstructionError : std::runtime_error {
    explicit UnknownInstructionError(const std::string& key)
        : std::runtime_error("unknown instruction: " + key), key(key) {}
    std::string key;
};

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uica
