#pragma once
// Shared error types and small utilities used across the harness.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace depsteer {

// Error taxonomy maps onto the CLI exit codes: config problems,
// transport problems (endpoints), and evaluation problems (campaign
// internals). Everything else surfaces as std exceptions.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64: one-shot mix with good dispersion even for consecutive
// inputs. Used to derive per-call seeds and for mock hit-rate draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Uniform draw in [0,1) from a single mixed value.
inline double unit_draw(std::uint64_t seed) {
    return static_cast<double>(splitmix64(seed) >> 11) * 0x1.0p-53;
}

inline std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return splitmix64(fnv1a64(tag, base) ^ (index * 0x9e3779b97f4a7c15ull));
}

std::string to_hex(std::uint64_t value);

std::string replace_all(std::string text, std::string_view needle,
                        std::string_view replacement);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace depsteer
