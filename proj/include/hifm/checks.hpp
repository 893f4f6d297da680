#pragma once

#include <string>
#include <vector>

namespace hifm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in verification suite. With `perturb`, every measured discrepancy is
/// offset by ten times its tolerance, so every check must fail.
std::vector<CheckResult> run_checks(bool perturb = false);

}  // namespace hifm
