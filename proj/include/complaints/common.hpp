#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace complaints {

// User-facing failures (bad input, bad configuration). The CLI maps these to
// exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class StratificationError : public Error {
public:
    using Error::Error;
};

// A quantity that is mathematically undefined for the given input
// (zero-variance correlation, single-class AUC, ...).
class UndefinedError : public Error {
public:
    using Error::Error;
};

// Internal invariant violations. Exit code 2.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class LeakageError : public InvariantError {
public:
    using InvariantError::InvariantError;
};

inline constexpr std::string_view kToolkitVersion = "1.0.0";

// Seeded generator whose output is identical across standard libraries:
// mt19937_64 is fully specified, and the mappings below avoid the
// implementation-defined std:: distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n).
    std::size_t below(std::size_t n);

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace complaints
