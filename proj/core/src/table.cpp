#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mev/errors.hpp"
#include "mev/passk.hpp"

namespace mev {

namespace {

constexpr int kCellWidth = 7;  // "pass@10"

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::vector<int> ks_of(const std::map<int, double>& cells) {
  std::vector<int> ks;
  for (const auto& [k, _] : cells) ks.push_back(k);
  return ks;
}

void require_same_shape(const PassKTable& a, const PassKTable& b) {
  if (a.rows.size() != b.rows.size()) throw ShapeMismatch("tables cover different suites");
  for (const auto& [suite, cells] : a.rows) {
    const auto it = b.rows.find(suite);
    if (it == b.rows.end()) throw ShapeMismatch("suite " + std::string(to_string(suite)) + " missing");
    if (ks_of(cells) != ks_of(it->second)) {
      throw ShapeMismatch("k sets differ for " + std::string(to_string(suite)));
    }
  }
}

std::string signed_percent(double v) {
  const std::string body = format_percent(v);
  return body.front() == '-' || body == "0.0" ? body : "+" + body;
}

}  // namespace

std::string format_percent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  std::string out(buf);
  if (out == "-0.0") out = "0.0";
  return out;
}

std::string render_row(const PassKTable& table, std::size_t label_width) {
  std::string line = pad_right(table.model_label, label_width);
  for (const auto& [suite, cells] : table.rows) {
    line += " |";
    for (const auto& [k, v] : cells) line += " " + pad_left(format_percent(v), kCellWidth);
  }
  return line;
}

std::string render_text(std::span<const PassKTable> tables) {
  if (tables.empty()) return {};
  for (const auto& t : tables) require_same_shape(tables.front(), t);

  std::size_t label_width = 5;  // "model"
  for (const auto& t : tables) label_width = std::max(label_width, t.model_label.size());

  std::string suites = pad_right("", label_width);
  std::string ks = pad_right("model", label_width);
  for (const auto& [suite, cells] : tables.front().rows) {
    const std::size_t span = cells.size() * (kCellWidth + 1);
    suites += " | " + pad_right(std::string(to_string(suite)), span - 1);
    ks += " |";
    for (const auto& [k, _] : cells) ks += " " + pad_left("pass@" + std::to_string(k), kCellWidth);
  }
  auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };
  std::ostringstream out;
  out << rstrip(suites) << '\n' << ks << '\n' << std::string(ks.size(), '-') << '\n';
  for (const auto& t : tables) out << render_row(t, label_width) << '\n';
  return out.str();
}

std::string render_text(const PassKTable& table) { return render_text(std::span(&table, 1)); }

std::string render_csv(std::span<const PassKTable> tables) {
  std::string out = "model,suite,k,value\n";
  for (const auto& t : tables) {
    std::string label = t.model_label;
    if (label.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (const char ch : label) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      label = quoted + "\"";
    }
    for (const auto& [suite, cells] : t.rows) {
      for (const auto& [k, v] : cells) {
        out += label + "," + std::string(to_string(suite)) + "," + std::to_string(k) + "," +
               format_percent(v) + "\n";
      }
    }
  }
  return out;
}

std::string TableDelta::summary() const {
  return "max delta: " + signed_percent(max_delta) + " (" + std::string(to_string(max_suite)) +
         ", pass@" + std::to_string(max_k) + ")";
}

TableDelta compare_tables(const PassKTable& a, const PassKTable& b) {
  require_same_shape(a, b);
  TableDelta d;
  d.delta.model_label = a.model_label + " - " + b.model_label;
  bool first = true;
  for (const auto& [suite, cells] : a.rows) {
    const auto& other = b.rows.at(suite);
    for (const auto& [k, v] : cells) {
      const double delta = v - other.at(k);
      d.delta.rows[suite][k] = delta;
      if (first || delta > d.max_delta) {
        d.max_delta = delta;
        d.max_suite = suite;
        d.max_k = k;
        first = false;
      }
    }
  }
  return d;
}

std::string render_delta(const TableDelta& d) {
  return render_text(d.delta) + d.summary() + "\n";
}

}  // namespace mev
