#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdcsa {

/// All randomness in the toolkit flows from one root seed. Components pull
/// named sub-streams so that adding draws to one component never perturbs
/// another ("simulation", "init", "batching", "bootstrap", ...).
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t root_seed) : root_(root_seed) {}

  /// Deterministically derive the seed for a named sub-stream.
  std::uint64_t derive(std::string_view name, std::uint64_t index = 0) const;

  /// Convenience: an engine seeded from a named sub-stream.
  std::mt19937_64 engine(std::string_view name, std::uint64_t index = 0) const {
    return std::mt19937_64(derive(name, index));
  }

  std::uint64_t root() const { return root_; }

 private:
  std::uint64_t root_;
};

/// FNV-1a 64-bit, used both for seed derivation and content hashing of
/// artifact files.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace mdcsa
