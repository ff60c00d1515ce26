#include "mev/passk.hpp"

#include <algorithm>

#include "mev/errors.hpp"

namespace mev {

void PassKParams::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (ks.empty()) throw ConfigError("ks must be non-empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw ConfigError("every k must be positive");
    if (ks[i] > n) throw ConfigError("k=" + std::to_string(ks[i]) + " exceeds n=" + std::to_string(n));
    if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("ks must be strictly increasing");
  }
}

void to_json(json& j, const PassKParams& p) { j = json{{"ks", p.ks}, {"n", p.n}}; }

void from_json(const json& j, PassKParams& p) {
  PassKParams out;
  if (j.contains("ks")) out.ks = j.at("ks").get<std::vector<int>>();
  if (j.contains("n")) out.n = j.at("n").get<int>();
  out.validate();
  p = std::move(out);
}

std::string_view to_string(Estimator e) noexcept {
  return e == Estimator::Unbiased ? "unbiased" : "literal-topk";
}

double pass_at_k(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
    throw DomainError("pass_at_k requires 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                      ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  }
  // Fewer failures than draws: every k-subset holds a pass.
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

double literal_top_k(const std::vector<bool>& passes, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > passes.size()) {
    throw DomainError("literal_top_k requires 1 <= k <= number of samples");
  }
  return std::any_of(passes.begin(), passes.begin() + k, [](bool p) { return p; }) ? 1.0 : 0.0;
}

std::map<int, double> aggregate(std::span<const EvalRecord> records, const PassKParams& params,
                                Estimator estimator) {
  params.validate();
  if (records.empty()) throw EmptyRecords("no records to aggregate");
  const int max_k = params.ks.back();
  for (const auto& r : records) {
    r.validate();
    if (r.n < max_k) throw KExceedsN(r.problem_id, max_k, r.n);
    if (estimator == Estimator::LiteralTopK && r.sample_passes.empty()) {
      throw DomainError("record " + r.problem_id + " has no per-sample results for literal top-k");
    }
  }
  std::map<int, double> out;
  for (const int k : params.ks) {
    double sum = 0.0;
    for (const auto& r : records) {
      sum += estimator == Estimator::Unbiased ? pass_at_k(r.n, r.c, k) : literal_top_k(r.sample_passes, k);
    }
    out[k] = 100.0 * sum / static_cast<double>(records.size());
  }
  return out;
}

PassKTable build_table(const std::string& model_label,
                       const std::map<Suite, std::vector<EvalRecord>>& per_suite,
                       const PassKParams& params, Estimator estimator, bool allow_missing_suite) {
  PassKTable table;
  table.model_label = model_label;
  for (const Suite s : kAllSuites) {
    const auto it = per_suite.find(s);
    const bool absent = it == per_suite.end() || it->second.empty();
    if (absent) {
      if (allow_missing_suite) continue;
      if (it == per_suite.end()) throw PreconditionError("suite " + std::string(to_string(s)) + " missing");
    }
    table.rows[s] = aggregate(it->second, params, estimator);
  }
  if (table.rows.empty()) throw EmptyRecords("no suite has records");
  return table;
}

}  // namespace mev
