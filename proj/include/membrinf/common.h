#ifndef MEMBRINF_COMMON_H_
#define MEMBRINF_COMMON_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace membrinf {

inline constexpr std::string_view kLibraryVersion = "0.3.0";

// Error hierarchy. Everything thrown by the library derives from Error so
// callers (the CLI in particular) can separate library failures from bugs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed from a parent seed and a path of coordinates. Experiment cells
// derive every seed this way, so results never depend on scheduling order.
inline std::uint64_t DeriveSeed(std::uint64_t parent,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = MixSeed(parent);
  for (std::uint64_t p : path) s = MixSeed(s ^ MixSeed(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stable 64-bit FNV-1a over bytes; used for tags and config hashes.
constexpr std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace membrinf

#endif  // MEMBRINF_COMMON_H_
