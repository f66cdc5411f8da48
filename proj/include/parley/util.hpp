#pragma once
// Shared plumbing: error types, seed derivation, a deterministic RNG wrapper,
// float formatting for stable text output, and a minimal stderr logger.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace parley {

inline constexpr const char* kVersion = "1.0.0";

// Base error for all library failures. `code` is a stable machine-readable
// tag; `what()` carries the human-readable message.
class error : public std::runtime_error {
 public:
  explicit error(std::string message, std::string code = "error")
      : std::runtime_error(std::move(message)), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Bad or missing configuration (maps to CLI exit code 1).
class config_error : public error {
 public:
  explicit config_error(std::string message)
      : error(std::move(message), "config_error") {}
};

// Malformed input text; carries a 1-based line number when known.
class parse_error : public error {
 public:
  explicit parse_error(std::string message, long line = 0)
      : error(std::move(message), "parse_error"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Agent backend failure after retries (maps to CLI exit code 2).
class agent_error : public error {
 public:
  explicit agent_error(std::string message)
      : error(std::move(message), "agent_error") {}
};

// Judge backend failure (propagated with the offending reason index).
class judge_error : public error {
 public:
  explicit judge_error(std::string message)
      : error(std::move(message), "judge_error") {}
};

// FNV-1a, used to fold strings into seed material.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// SplitMix64 step; good enough to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view salt) {
  return derive_seed(base, fnv1a64(salt));
}

// Deterministic RNG. mt19937_64 has a standard-specified sequence and the
// helpers below avoid std::uniform_*_distribution, whose output is
// implementation-defined; together that makes every stream reproducible
// across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift; bias is < 2^-64 per draw,
  // irrelevant at our trial counts and identical everywhere.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// Shortest round-trip decimal form; used wherever floats enter text
// artifacts (CSV cells, log lines) so byte-level determinism holds.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::warn;
  return level;
}

inline LogLevel log_level_from_string(const std::string& s) {
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  if (s == "warn") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  if (s == "off") return LogLevel::off;
  throw config_error("unknown log level: " + s);
}

inline void log(LogLevel level, const std::string& message) {
  if (level < log_level() || level == LogLevel::off) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)],
               message.c_str());
}

}  // namespace parley
