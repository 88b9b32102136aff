#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace surveygen {

// =============================================================================
// String helpers
// =============================================================================

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Case-insensitive prefix test.
bool istarts_with(std::string_view s, std::string_view prefix);

bool contains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_lines(std::string_view text);

/// Lowercase, non-alphanumeric squashed to '-', collapsed runs; for output dirs.
std::string slugify(std::string_view s);

// =============================================================================
// Hashing
// =============================================================================

/// FNV-1a 64-bit. Stable across platforms; used by the test embedder and the
/// mock provider's content keying.
std::uint64_t fnv1a64(std::string_view s);

// =============================================================================
// Deterministic RNG
// =============================================================================

/// mt19937_64 with a hand-rolled bounded draw so shuffles are reproducible
/// everywhere (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// =============================================================================
// Logging
// =============================================================================

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kSilent = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);
void log_error(const std::string& msg);

} // namespace surveygen
