// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "isac/config.hpp"

namespace isac {

/// Desk-scale self-check: every closed form is replayed against its
/// independent oracle (brute-force Fisher information, symbol-level SINR,
/// surrogate bound properties, rejection sampling vs the solver, timing
/// identities). Runs in about a minute.
struct ValidationCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;  // worst observed error / margin
  double bound = 0.0;     // acceptance threshold
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

ValidationReport validate(const SystemConfig& config);

std::string to_string(const ValidationReport& report);

}  // namespace isac
