#pragma once

// CSV emission and ingestion. Every written file starts with comment lines
// holding the program version and the resolved configuration; values are
// printed with %.17g so they reparse exactly.

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ffalign/config.hpp"
#include "ffalign/signal.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/version.hpp"

namespace ffalign {

/// Comment block: "# ffalign <version>", "# artifact: <name>", then the
/// serialized config one "# " line at a time.
inline std::string csv_preamble(std::string_view artifact, const RunConfig* cfg) {
  std::ostringstream o;
  o << "# ffalign " << version << "\n";
  o << "# artifact: " << artifact << "\n";
  if (cfg) {
    std::istringstream lines(serialize_config(*cfg));
    for (std::string l; std::getline(lines, l);) o << "# " << l << "\n";
  }
  return o.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void comment(std::string_view block) { out_ << block; }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      out_ << (i ? "," : "") << buf;
    }
    out_ << "\n";
  }

 private:
  std::ostream& out_;
};

inline void write_trace_csv(std::ostream& out, const AlignmentTrace& tr, const RunConfig* cfg = nullptr) {
  CsvWriter w(out);
  w.comment(csv_preamble("trace", cfg));
  w.header({"t_ps", "cos2x", "cos2y", "cos2z"});
  for (std::size_t k = 0; k < tr.size(); ++k) w.row({tr.t_ps[k], tr.cos2x[k], tr.cos2y[k], tr.cos2z[k]});
}

inline void write_signal_csv(std::ostream& out, const SignalTrace& s, const RunConfig* cfg = nullptr) {
  CsvWriter w(out);
  w.comment(csv_preamble("signal", cfg));
  std::vector<std::string> cols{"delay_ps"};
  if (s.has(Axis::x)) cols.push_back("Sx");
  if (s.has(Axis::y)) cols.push_back("Sy");
  w.header(cols);
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::vector<double> row{s.delay_ps[k]};
    if (s.has(Axis::x)) row.push_back(s.sx[k]);
    if (s.has(Axis::y)) row.push_back(s.sy[k]);
    w.row(row);
  }
}

/// Named numeric columns of a CSV with '#' comments and one header line.
struct CsvTable {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;

  bool has(const std::string& name) const { return columns.count(name) != 0; }
  const std::vector<double>& at(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw ConfigError("csv: missing column '" + name + "'");
    return it->second;
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(config_detail::trim(c));
    if (!have_header) {
      for (const auto& c : cells) {
        if (t.columns.count(c)) throw ConfigError("csv line " + std::to_string(line_no) + ": repeated column " + c);
        t.names.push_back(c);
        t.columns[c];
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.names.size()) {
      throw ConfigError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(t.names.size()) +
                        " fields, got " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto v = config_detail::parse_number(cells[i]);
      if (!v) throw ConfigError("csv line " + std::to_string(line_no) + ": '" + cells[i] + "' is not a number");
      t.columns[t.names[i]].push_back(*v);
    }
  }
  if (!have_header) throw ConfigError("csv: no header line");
  return t;
}

/// Signal CSV with delay_ps and at least one of Sx, Sy.
inline SignalTrace read_signal_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (!t.has("delay_ps")) throw ConfigError("signal csv: missing column 'delay_ps'");
  if (!t.has("Sx") && !t.has("Sy")) throw ConfigError("signal csv: needs a 'Sx' or 'Sy' column");
  SignalTrace s;
  s.delay_ps = t.at("delay_ps");
  if (t.has("Sx")) s.sx = t.at("Sx");
  if (t.has("Sy")) s.sy = t.at("Sy");
  for (std::size_t k = 1; k < s.delay_ps.size(); ++k) {
    if (!(s.delay_ps[k] > s.delay_ps[k - 1])) throw ConfigError("signal csv: delay_ps must be strictly ascending");
  }
  return s;
}

inline AlignmentTrace read_trace_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  AlignmentTrace tr;
  tr.t_ps = t.at("t_ps");
  tr.cos2x = t.at("cos2x");
  tr.cos2y = t.at("cos2y");
  tr.cos2z = t.at("cos2z");
  return tr;
}

}  // namespace ffalign
