#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spdddpm::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;   // worst deviation measured
  double threshold = 0.0;  // pinned tolerance
};

/// Central-difference validation (h = 1e-5) of each tape operation and of the
/// full network loss graph.  Symmetric inputs are perturbed along E_ij + E_ji
/// and compared against g_ij + g_ji; large parameter blocks are subsampled
/// deterministically.  Normalized error |ad - fd| / max(1, |ad|, |fd|) must
/// stay below 1e-4 everywhere.
std::vector<CheckResult> gradient_checks(int dim, std::uint64_t seed);

/// Deterministic identities: group structure of (oplus, ominus, odot), metric
/// invariances, log/exp round trips, the exact-translation distance law,
/// schedule recursions and end values, posterior reconstruction, the
/// commuting-case forward step, the two-point Frechet mean, and the m = 2
/// normalizer against its closed form.
std::vector<CheckResult> property_checks(int dim, std::uint64_t seed);

bool all_passed(const std::vector<CheckResult>& results);
void print_results(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace spdddpm::verify
