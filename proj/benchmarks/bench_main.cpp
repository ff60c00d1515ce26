#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "mev/dataset.hpp"
#include "mev/passk.hpp"
#include "mev/router.hpp"

namespace {

void BM_PassAtK(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    double sum = 0;
    for (int c = 0; c <= n; ++c) sum += mev::pass_at_k(n, c, n / 2 + 1);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * (n + 1));
}
BENCHMARK(BM_PassAtK)->Arg(15)->Arg(100)->Arg(1000);

mev::Corpus synthetic_corpus(std::size_t count, std::size_t distinct) {
  mev::Corpus corpus;
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = i % distinct;
    corpus.entries.push_back(mev::make_entry("f" + std::to_string(i) + ".v",
                                             "module m" + std::to_string(k) + "(input a, output y);\n"
                                             "  assign y = ~a;\nendmodule\n"));
  }
  return corpus;
}

void BM_Dedup(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto corpus = synthetic_corpus(n, n / 4 + 1);
  for (auto _ : state) benchmark::DoNotOptimize(mev::dedup(corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Dedup)->Arg(1000)->Arg(20000);

void BM_ClassifyHeuristic(benchmark::State& state) {
  const std::vector<std::string> descriptions = {
      "wire two inputs to an AND gate",
      "4-to-1 multiplexer with enable and an 8-bit ripple carry adder",
      "Moore finite state machine detecting the sequence 101 on a serial input",
      "pipelined ALU with an FSM controller, register file and a UART front end",
      "a module that does nothing interesting at all but has a rather long description",
  };
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mev::classify_heuristic(descriptions[i++ % descriptions.size()]));
}
BENCHMARK(BM_ClassifyHeuristic);

}  // namespace

BENCHMARK_MAIN();
