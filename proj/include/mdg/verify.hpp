#pragma once

// Randomised agreement checks between the closed-form solver and the
// brute-force oracles. Backs the `verify` subcommand.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "mdg/game.hpp"
#include "mdg/oracle.hpp"

namespace mdg::verify {

/// Powers log-uniform in [2^-2, 2^8], t uniform in [0, 2^8], p uniform in
/// [0, 0.95]. One draw in eight has t = 0 and one in eight has m2 = m1, so
/// that every solver branch is exercised.
GameParamsd draw_params(std::mt19937_64& rng);

/// "m1=... m2=... t=... p=..." with round-trip precision.
std::string describe(const GameParamsd& params);

struct VerifyOptions {
  int cases = 200;
  std::uint64_t seed = 42;
  oracle::GridSpec grid{};
};

struct PropertyResult {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  /// First failing draw, ready to paste into `solve`.
  std::string first_failure;

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::uint64_t seed = 0;
  int cases = 0;
  std::vector<PropertyResult> properties;

  bool passed() const;
};

VerifyReport run(const VerifyOptions& options);

void print(std::ostream& out, const VerifyReport& report);

}  // namespace mdg::verify
