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

#include "spillover/studies.hpp"

namespace spillover {

// 17 significant digits, '.' decimal point, independent of the locale.
std::string format_double(double v);

void write_pvalue_csv(std::ostream& out, const std::vector<PvalueRow>& rows);
// Batch format of the test subcommand, with the statistic named per row.
void write_test_csv(std::ostream& out, const std::vector<PvalueRow>& rows, const std::string& statistic);
void write_two_worlds_csv(std::ostream& out, const std::vector<TwoWorldsRow>& rows);
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);

// Long format of simulated data: one row per (replicate, unit).
struct UnitRow {
  std::size_t replicate;
  std::uint64_t seed;
  std::size_t unit;
  int treated;
  double outcome;
};

inline constexpr const char* kSimulateHeader = "replicate,seed,unit,treated,outcome";

void write_simulate_csv(std::ostream& out, const std::vector<UnitRow>& rows);
// Throws ParseError with the line number on malformed input.
std::vector<UnitRow> read_simulate_csv(std::istream& in);

}  // namespace spillover
