// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace uwmmse {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst observed error against the threshold
};

/// Runs the oracle suites: inner-cost gradient, training gradient,
/// eigensolver, bisection residual, w = 1 + SINR, WMMSE monotonicity,
/// long-run PGD against the exact solve, and the single-user closed form.
/// `report` is called once per suite as soon as it finishes.
std::vector<SelftestResult> run_selftest(
    std::uint64_t seed = 7, const std::function<void(const SelftestResult&)>& report = {});

}  // namespace uwmmse
