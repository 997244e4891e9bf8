// Copyright 2026 The Spillover Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spillover {

struct OracleCheck {
  std::string name;
  std::size_t instances = 0;
  double worst = 0.0;  // largest observed discrepancy, in the check's units
  double tolerance = 0.0;
  bool passed = true;
};

// Enumeration-based self-checks on random instances with n units
// (2 <= n <= 12): effect decomposition, MC vs enumeration, sensitivity
// identity, exposure probabilities, HT unbiasedness, series mean, search.
std::vector<OracleCheck> run_oracle(std::size_t n, std::uint64_t seed, std::size_t instances = 20);

void print_oracle_table(std::ostream& out, const std::vector<OracleCheck>& checks);

}  // namespace spillover
