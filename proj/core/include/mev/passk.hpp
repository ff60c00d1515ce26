#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mev/types.hpp"

namespace mev {

struct PassKParams {
  std::vector<int> ks{1, 5, 10};  // strictly increasing, each <= n
  int n = 15;                     // samples per problem

  void validate() const;  // throws ConfigError
  bool operator==(const PassKParams&) const = default;
};

void to_json(json& j, const PassKParams& p);
void from_json(const json& j, PassKParams& p);

enum class Estimator : std::uint8_t {
  Unbiased,    // 1 - C(n-c,k)/C(n,k)
  LiteralTopK, // 1 if any of the first k samples passed
};

std::string_view to_string(Estimator e) noexcept;

// Unbiased estimate, product form. Throws DomainError unless 0<=c<=n, 1<=k<=n.
double pass_at_k(int n, int c, int k);

// 1.0 if any of the first k flags is set. Throws DomainError if k is out of range.
double literal_top_k(const std::vector<bool>& passes, int k);

// k -> mean percentage over records. Throws EmptyRecords, KExceedsN.
std::map<int, double> aggregate(std::span<const EvalRecord> records, const PassKParams& params,
                                Estimator estimator = Estimator::Unbiased);

// Both suites must be present unless allow_missing_suite is set, in which
// case an absent or empty suite is left out of the table.
PassKTable build_table(const std::string& model_label,
                       const std::map<Suite, std::vector<EvalRecord>>& per_suite,
                       const PassKParams& params, Estimator estimator = Estimator::Unbiased,
                       bool allow_missing_suite = false);

// One decimal, never "-0.0".
std::string format_percent(double value);

// Aligned plain text; all tables must share suites and ks.
std::string render_text(std::span<const PassKTable> tables);
std::string render_text(const PassKTable& table);
// The data row alone, as it appears inside render_text.
std::string render_row(const PassKTable& table, std::size_t label_width = 0);
// Header "model,suite,k,value", then one line per (suite, k).
std::string render_csv(std::span<const PassKTable> tables);

struct TableDelta {
  PassKTable delta;  // cellwise a - b
  double max_delta = 0.0;
  Suite max_suite = Suite::VerilogMachine;
  int max_k = 0;

  std::string summary() const;  // "max delta: +23.9 (Verilog-Machine, pass@1)"
};

// Throws ShapeMismatch unless suites and ks match.
TableDelta compare_tables(const PassKTable& a, const PassKTable& b);

std::string render_delta(const TableDelta& d);

}  // namespace mev
