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

#include "spillover/table_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "spillover/errors.hpp"

namespace spillover {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (res.ec != std::errc()) throw NumericalError("number formatting failed");
  return std::string(buf, res.ptr);
}

void write_pvalue_csv(std::ostream& out, const std::vector<PvalueRow>& rows) {
  out << "scenario,n,replicate,seed,observed_stat,p_value\n";
  for (const PvalueRow& r : rows) {
    out << r.scenario << ',' << r.n << ',' << r.replicate << ',' << r.seed << ','
        << format_double(r.observed) << ',' << format_double(r.p_value) << '\n';
  }
}

void write_test_csv(std::ostream& out, const std::vector<PvalueRow>& rows, const std::string& statistic) {
  out << "replicate,scenario,n,statistic,observed,p_value,seed\n";
  for (const PvalueRow& r : rows) {
    out << r.replicate << ',' << r.scenario << ',' << r.n << ',' << statistic << ','
        << format_double(r.observed) << ',' << format_double(r.p_value) << ',' << r.seed << '\n';
  }
}

void write_two_worlds_csv(std::ostream& out, const std::vector<TwoWorldsRow>& rows) {
  out << "replicate,seed,avg_outcome,n_superstars,has_treated_superstar\n";
  for (const TwoWorldsRow& r : rows) {
    out << r.replicate << ',' << r.seed << ',' << format_double(r.avg_outcome) << ','
        << r.n_superstars << ',' << (r.has_treated_superstar ? 1 : 0) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << "group,bin,lower,upper,count\n";
  for (const HistogramBin& b : bins) {
    out << b.group << ',' << b.bin << ',' << format_double(b.lower) << ',' << format_double(b.upper)
        << ',' << b.count << '\n';
  }
}

void write_simulate_csv(std::ostream& out, const std::vector<UnitRow>& rows) {
  out << kSimulateHeader << '\n';
  for (const UnitRow& r : rows) {
    out << r.replicate << ',' << r.seed << ',' << r.unit << ',' << r.treated << ','
        << format_double(r.outcome) << '\n';
  }
}

namespace {

template <typename T>
T parse_field(const std::string& s, std::size_t line, const char* name) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, std::string("invalid ") + name + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<UnitRow> read_simulate_csv(std::istream& in) {
  std::vector<UnitRow> rows;
  std::string line;
  std::size_t number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kSimulateHeader) throw ParseError(number, "expected header '" + std::string(kSimulateHeader) + "'");
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 5) throw ParseError(number, "expected 5 fields");
    UnitRow r;
    r.replicate = parse_field<std::size_t>(fields[0], number, "replicate");
    r.seed = parse_field<std::uint64_t>(fields[1], number, "seed");
    r.unit = parse_field<std::size_t>(fields[2], number, "unit");
    r.treated = parse_field<int>(fields[3], number, "treated");
    if (r.treated != 0 && r.treated != 1) throw ParseError(number, "treated must be 0 or 1");
    r.outcome = parse_field<double>(fields[4], number, "outcome");
    rows.push_back(r);
  }
  if (!header) throw ParseError(number, "missing header");
  return rows;
}

}  // namespace spillover
