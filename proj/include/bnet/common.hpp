#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bnet {

// Error taxonomy mapped to CLI exit codes (usage=2, data=3, numerical=4).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr const char* kVersion = "burnnet 0.1.0";

// FNV-1a, used to fingerprint effective run configurations.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

} // namespace bnet
