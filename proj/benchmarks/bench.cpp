#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "strandstate/envelope.hpp"
#include "strandstate/format.hpp"
#include "strandstate/skeleton.hpp"
#include "strandstate/verify.hpp"

using namespace sst;

namespace {

void BM_Unify(benchmark::State& st) {
  std::mt19937_64 rng(1);
  Term x = Term::var("x", Sort::Top), k = Term::var("k", Sort::S);
  std::vector<Term> ll{x, oracle::d(0), oracle::s(0)}, rl{k, oracle::d(0), oracle::d(1), oracle::s(0)};
  std::vector<std::pair<Term, Term>> pairs;
  for (int i = 0; i < 256; ++i)
    pairs.emplace_back(oracle::random_term(rng, st.range(0), ll), oracle::random_term(rng, st.range(0), rl));
  std::size_t i = 0;
  for (auto _ : st) {
    auto& [l, r] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(unify(l, r));
  }
}
BENCHMARK(BM_Unify)->Arg(2)->Arg(4)->Arg(6);

void BM_Derivable(benchmark::State& st) {
  // Nested encryptions whose keys are released one layer at a time.
  std::vector<Term> avail;
  Term secret = oracle::d(0);
  Term msg = secret;
  for (int i = 0; i < st.range(0); ++i) {
    msg = Term::enc(Term::pair(msg, oracle::e(i)), oracle::s(i));
    avail.push_back(Term::enc(oracle::s(i), oracle::s(i + 1)));
  }
  avail.push_back(msg);
  avail.push_back(oracle::s(static_cast<int>(st.range(0))));
  TermSet forbidden{secret};
  for (int i = 0; i <= st.range(0); ++i) forbidden.insert(oracle::s(i));
  for (auto _ : st) benchmark::DoNotOptimize(derivable(avail, forbidden, secret));
}
BENCHMARK(BM_Derivable)->Arg(2)->Arg(8)->Arg(32);

void BM_CheckCompatibility(benchmark::State& st) {
  Protocol p = compat_test_protocol();
  std::mt19937_64 rng(1);
  std::vector<Term> alpha{oracle::d(0), oracle::d(1)};
  std::vector<Bundle> bs;
  for (int i = 0; i < 128; ++i) bs.push_back(random_compat_bundle(rng, st.range(0), alpha));
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(check_compatibility(bs[i++ % bs.size()], p));
}
BENCHMARK(BM_CheckCompatibility)->Arg(3)->Arg(6);

void BM_SearchToy(benchmark::State& st) {
  auto p = std::make_shared<Protocol>(parse_protocol(oracle::slurp(oracle::data_path("toy.proto"))));
  Skeleton sk = parse_skeleton(oracle::slurp(oracle::data_path("toy-goal.skel")), p);
  for (auto _ : st) benchmark::DoNotOptimize(search(sk, SearchBounds{}));
}
BENCHMARK(BM_SearchToy)->Unit(benchmark::kMillisecond);

void BM_SearchEnvelope(benchmark::State& st) {
  Skeleton sk = envelope_goal_skeleton();
  for (auto _ : st) benchmark::DoNotOptimize(search(sk, SearchBounds{}));
}
BENCHMARK(BM_SearchEnvelope)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
