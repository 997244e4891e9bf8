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

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "spillover/errors.hpp"
#include "spillover/graph.hpp"

namespace spillover {

namespace {

bool parse_index(const std::string& token, std::size_t& out) {
  if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
    return false;
  }
  try {
    out = std::stoull(token);
  } catch (const std::out_of_range&) {
    return false;
  }
  return true;
}

}  // namespace

InterferenceGraph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<std::uint8_t> seen;
  std::vector<Edge> edges;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string a, b, extra;
    fields >> a >> b;
    if (a.empty()) {
      if (!have_header) throw ParseError(line_no, "missing header 'n <count>'");
      continue;
    }
    if (fields >> extra) throw ParseError(line_no, "expected two fields, found more");
    if (!have_header) {
      if (a != "n" || !parse_index(b, n) || n == 0) {
        throw ParseError(line_no, "expected header 'n <count>' with count >= 1");
      }
      have_header = true;
      seen.assign(n * n, 0);
      continue;
    }
    std::size_t i = 0, j = 0;
    if (!parse_index(a, i) || !parse_index(b, j)) {
      throw ParseError(line_no, "malformed edge line '" + line + "'");
    }
    if (i >= n || j >= n) {
      throw ParseError(line_no, "index out of range for n = " + std::to_string(n));
    }
    if (i == j) throw ParseError(line_no, "self-loop at unit " + std::to_string(i));
    if (i > j) {
      throw ParseError(line_no, "asymmetric orientation: edges are listed once with i < j");
    }
    if (seen[i * n + j]) throw ParseError(line_no, "duplicate edge");
    seen[i * n + j] = 1;
    edges.emplace_back(i, j);
  }
  if (!have_header) throw ParseError(line_no + 1, "missing header 'n <count>'");
  return InterferenceGraph::from_edges(n, edges);
}

InterferenceGraph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const InterferenceGraph& graph) {
  out << "n " << graph.size() << '\n';
  for (const auto& [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

void write_edge_list(const std::string& path, const InterferenceGraph& graph) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list '" + path + "'");
  write_edge_list(out, graph);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace spillover
