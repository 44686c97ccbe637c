#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aopt/fp_io.hpp"
#include "aopt/trace.hpp"

namespace aopt {

inline constexpr const char* kTraceHeader =
    "k,f,grad_norm,alpha,delta,W,batch_model,batch_fn,phi,ratio,chi";

/// Writes one row per iteration with full-precision numbers; missing
/// quantities are empty fields.
inline void write_trace_csv(const RunTrace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw format_error(path + ": cannot open for writing");
  out << kTraceHeader << "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : t.records) {
    out << r.k << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.alpha) << ',' << opt(r.delta) << ',' << r.W << ','
        << (r.batch_model ? std::to_string(*r.batch_model) : std::string()) << ','
        << (r.batch_fn ? std::to_string(*r.batch_fn) : std::string()) << ',' << opt(r.phi) << ','
        << opt(r.ratio) << ',' << opt(r.chi) << "\n";
  }
}

/// Parses a TraceFile back into records (the CSV carries per-iteration
/// rows only; run-level fields live in the summary).
inline RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw format_error(path + ": empty file");
  if (line != kTraceHeader) throw format_error(path + ": unexpected header '" + line + "'");

  RunTrace t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 11) cells.emplace_back();
    if (cells.size() != 11)
      throw format_error(path + ": row " + std::to_string(lineno) + " has " +
                         std::to_string(cells.size()) + " cells, expected 11");
    TraceRecord r;
    auto opt_double = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_double(s);
    };
    auto opt_size = [&](const std::string& s) -> std::optional<std::size_t> {
      if (s.empty()) return std::nullopt;
      return static_cast<std::size_t>(std::stoull(s));
    };
    r.k = std::stol(cells[0]);
    r.f = parse_double(cells[1]);
    r.grad_norm = parse_double(cells[2]);
    r.alpha = parse_double(cells[3]);
    r.delta = opt_double(cells[4]);
    r.W = std::stoi(cells[5]);
    r.batch_model = opt_size(cells[6]);
    r.batch_fn = opt_size(cells[7]);
    r.phi = opt_double(cells[8]);
    r.ratio = opt_double(cells[9]);
    r.chi = opt_double(cells[10]);
    t.records.push_back(r);
  }
  if (!t.records.empty()) {
    t.final_f = t.records.back().f;
    t.final_grad_norm = t.records.back().grad_norm;
    t.final_alpha = t.records.back().alpha;
    t.final_delta = t.records.back().delta;
    t.final_chi = t.records.back().chi;
  }
  return t;
}

}  // namespace aopt
