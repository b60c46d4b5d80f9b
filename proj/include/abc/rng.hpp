#pragma once

#include <cstdint>
#include <optional>

namespace abc {

// SplitMix64 stream. Every randomized routine takes one explicitly so runs
// are reproducible from a single integer seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  // Independent child stream seeded from this one.
  SplitMix64 split();

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

// 64-bit FNV-1a, used for content-addressed caching.
class Fingerprint {
 public:
  Fingerprint& bytes(const void* data, std::size_t n);
  Fingerprint& add(double v) { return bytes(&v, sizeof v); }
  Fingerprint& add(std::int64_t v) { return bytes(&v, sizeof v); }
  Fingerprint& add(const char* s);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace abc
