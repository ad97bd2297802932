#pragma once

// Shared plumbing: error hierarchy, stderr logger, deterministic RNG helpers.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rulegen {

// Sparse vector as (index, value) pairs with strictly increasing indices.
using SparseColumn = std::vector<std::pair<int, double>>;

// ===== errors =====
//
// Every failure the library raises derives from RulegenError so callers can
// map categories to process exit codes without string matching.

class RulegenError : public std::runtime_error {
public:
    explicit RulegenError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad caller-supplied configuration or parameters.
class ArgumentError : public RulegenError {
public:
    explicit ArgumentError(const std::string& msg) : RulegenError(msg) {}
};

// Malformed or inconsistent input data (CSV contents, schema mismatches).
class DataError : public RulegenError {
public:
    explicit DataError(const std::string& msg) : RulegenError(msg) {}
};

// Numerical failure inside the LP solver (singular basis, no convergence).
class SolverError : public RulegenError {
public:
    explicit SolverError(const std::string& msg) : RulegenError(msg) {}
};

// Out-of-range feature/class/sample index.
class IndexError : public RulegenError {
public:
    explicit IndexError(const std::string& msg) : RulegenError(msg) {}
};

// A requested enumeration would exceed the hard size guard.
class SizeError : public RulegenError {
public:
    explicit SizeError(const std::string& msg) : RulegenError(msg) {}
};

// A rule whose conditions contradict each other (empty region).
class InfeasibleRuleError : public RulegenError {
public:
    explicit InfeasibleRuleError(const std::string& msg) : RulegenError(msg) {}
};

// ===== logging =====
//
// Minimal stderr logger. Level comes from RULEGEN_LOG (error|warn|info|debug),
// default warn. Kept free of iostream so headers stay cheap to include.

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("RULEGEN_LOG");
        if (env == nullptr) return LogLevel::Warn;
        const std::string v(env);
        if (v == "error") return LogLevel::Error;
        if (v == "warn") return LogLevel::Warn;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[rulegen %s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::Error, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

// ===== deterministic randomness =====
//
// All stochastic behaviour (bootstrap, feature subsampling, fold shuffles)
// flows through these helpers so results are identical across platforms and
// standard libraries. std::mt19937_64 has a pinned algorithm; the
// distribution wrappers in <random> do not, so we roll the two draws we need.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed for substream `index` of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n). Modulo bias is ~n/2^64, irrelevant at our scales.
    std::size_t bounded(std::size_t n) {
        return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[bounded(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rulegen
