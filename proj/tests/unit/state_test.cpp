#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strandstate/state.hpp"

using namespace sst;
using namespace oracle;

namespace {

MachineState ex(const Term& t, const MachineState& m) { return m.extended(t); }
const MachineState bt = MachineState::boot();

// The lemma read directly: if p(k) has t, then p(i) is a subterm of p(k) or
// some transition in [i, k) extends by t. Uses only has and subterm.
bool lemma_holds(const Path& p, std::size_t i, std::size_t k, const Term& t) {
  if (!has(p[k], t)) return true;
  if (subterm(p[i].term(), p[k].term())) return true;
  for (std::size_t j = i; j < k; ++j)
    if (p[j + 1].term() == Term::extend(t, p[j].term())) return true;
  return false;
}

}  // namespace

TEST(Step, Examples) {
  MachineState m1 = ex(d(0), bt);
  EXPECT_TRUE(step(bt, bt));
  EXPECT_TRUE(step(bt, m1));
  EXPECT_TRUE(step(m1, m1));
  EXPECT_TRUE(step(m1, bt));
  EXPECT_TRUE(step(m1, ex(d(1), m1)));
  EXPECT_FALSE(step(m1, ex(d(1), bt)));
  EXPECT_FALSE(step(ex(d(1), m1), m1));
}

TEST(Pcr, Examples) {
  EXPECT_EQ(pcr(bt), pcr_boot_value());
  EXPECT_EQ(pcr_boot_value(), s(0));
  EXPECT_EQ(pcr(ex(d(0), bt)), Term::hash(Term::pair(d(0), s(0))));
  EXPECT_EQ(pcr(ex(d(1), ex(d(0), bt))), Term::hash(Term::pair(d(1), Term::hash(Term::pair(d(0), s(0))))));
}

TEST(Pcr, InjectiveAndInvertibleOnSmallStates) {
  auto states = states_up_to_depth(3, {d(0), d(1), e(0)});
  EXPECT_EQ(states.size(), 1u + 3 + 9 + 27);
  std::map<Term, MachineState> seen;
  for (const auto& m : states) {
    Term v = pcr(m);
    auto [it, fresh] = seen.emplace(v, m);
    ASSERT_TRUE(fresh) << m.term().str() << " and " << it->second.term().str();
    auto back = pcr_inverse(v);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, m);
  }
  EXPECT_FALSE(pcr_inverse(d(0)));
  EXPECT_FALSE(pcr_inverse(Term::hash(d(0))));
}

TEST(Has, Examples) {
  MachineState m = ex(d(1), ex(d(0), bt));
  EXPECT_TRUE(has(m, d(0)));
  EXPECT_TRUE(has(m, d(1)));
  EXPECT_FALSE(has(m, d(2)));
  EXPECT_FALSE(has(bt, d(0)));
  EXPECT_FALSE(has(ex(Term::pair(d(0), d(1)), bt), d(0)));
}

TEST(MachineState, RejectsNonStates) {
  EXPECT_THROW(MachineState(d(0)), SortError);
  EXPECT_THROW(MachineState(Term::var("m", Sort::M)), SortError);
  EXPECT_EQ(ex(d(0), ex(d(1), bt)).depth(), 2u);
}

TEST(Path, Validation) {
  EXPECT_THROW(Path({}), std::invalid_argument);
  EXPECT_THROW(Path({ex(d(0), bt)}), std::invalid_argument);
  EXPECT_THROW(Path({bt, ex(d(0), ex(d(1), bt))}), std::invalid_argument);
  EXPECT_NO_THROW(Path({bt, ex(d(0), bt), ex(d(0), bt), bt}));
}

TEST(PrefixBootExtend, Examples) {
  MachineState m1 = ex(d(0), bt);
  Path p({bt, m1, m1, ex(d(1), m1)});
  auto v = check_prefix_boot_extend(p, 0, 3, d(0));
  EXPECT_EQ(v.kind, PrefixBootExtendVerdict::Kind::ExtendAt);
  EXPECT_EQ(v.index, 0u);
  Path q({bt, ex(d(0), bt), ex(d(1), ex(d(0), bt))});
  EXPECT_EQ(check_prefix_boot_extend(q, 1, 2, d(0)).kind, PrefixBootExtendVerdict::Kind::SubtermHolds);
  auto w = check_prefix_boot_extend(Path({bt, ex(d(0), bt)}), 0, 1, d(0));
  EXPECT_EQ(w.kind, PrefixBootExtendVerdict::Kind::ExtendAt);
  EXPECT_EQ(w.index, 0u);
  EXPECT_EQ(check_prefix_boot_extend(p, 1, 3, d(0)).kind, PrefixBootExtendVerdict::Kind::SubtermHolds);
  auto r = check_prefix_boot_extend(Path({bt, ex(d(1), bt), bt, ex(d(0), bt)}), 1, 3, d(0));
  EXPECT_EQ(r.kind, PrefixBootExtendVerdict::Kind::ExtendAt);
  EXPECT_EQ(r.index, 2u);
  EXPECT_EQ(check_prefix_boot_extend(p, 2, 2, d(0)).kind, PrefixBootExtendVerdict::Kind::SubtermHolds);
  EXPECT_THROW(check_prefix_boot_extend(p, 3, 2, d(0)), std::out_of_range);
  EXPECT_THROW(check_prefix_boot_extend(p, 0, 4, d(0)), std::out_of_range);
}

TEST(PrefixBootExtend, ReflexiveInstances) {
  for (const auto& m : states_up_to_depth(2, {d(0), d(1)})) {
    std::vector<MachineState> chain{bt};
    // Rebuild m from boot so the path is valid.
    std::vector<Term> args;
    for (Term cur = m.term(); cur.kind() == Kind::Extend; cur = cur.arg(1)) args.insert(args.begin(), cur.arg(0));
    for (const auto& t : args) chain.push_back(chain.back().extended(t));
    Path p(chain);
    std::size_t k = p.size() - 1;
    for (const auto& t : args) EXPECT_NE(check_prefix_boot_extend(p, k, k, t).kind, PrefixBootExtendVerdict::Kind::Violation);
  }
}

TEST(PathEnumerator, CountMatchesSuccessorRecursion) {
  for (std::size_t len = 1; len <= 5; ++len)
    for (std::size_t atoms = 1; atoms <= 3; ++atoms) {
      std::vector<Term> alpha;
      for (std::size_t i = 0; i < atoms; ++i) alpha.push_back(e(static_cast<int>(i)));
      PathEnumerator en(len, alpha);
      std::size_t n = 0;
      std::set<std::vector<MachineState>> distinct;
      while (auto p = en.next()) {
        ++n;
        distinct.insert(p->states());
        ASSERT_LE(p->size(), len);
      }
      EXPECT_EQ(n, count_paths(len, alpha)) << len << "/" << atoms;
      EXPECT_EQ(distinct.size(), n);
    }
}

TEST(PathEnumerator, FirstPathsInOrder) {
  PathEnumerator en(2, {e(0)});
  std::vector<std::vector<MachineState>> got;
  while (auto p = en.next()) got.push_back(p->states());
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], std::vector<MachineState>{bt});
  EXPECT_EQ(got[1], (std::vector<MachineState>{bt, bt}));
  EXPECT_EQ(got[2], (std::vector<MachineState>{bt, ex(e(0), bt)}));
}

TEST(PrefixBootExtend, AgreesWithBruteForceOnAllShortPaths) {
  std::vector<Term> alpha{e(0), e(1), e(2)};
  PathEnumerator en(5, alpha);
  std::size_t instances = 0;
  while (auto p = en.next())
    for (std::size_t k = 0; k < p->size(); ++k)
      for (std::size_t i = 0; i <= k; ++i)
        for (const auto& t : alpha) {
          if (!has((*p)[k], t)) continue;
          auto v = check_prefix_boot_extend(*p, i, k, t);
          ++instances;
          ASSERT_NE(v.kind, PrefixBootExtendVerdict::Kind::Violation);
          ASSERT_TRUE(lemma_holds(*p, i, k, t));
          if (v.kind == PrefixBootExtendVerdict::Kind::SubtermHolds) {
            ASSERT_TRUE(subterm((*p)[i].term(), (*p)[k].term()));
          }
          if (v.kind == PrefixBootExtendVerdict::Kind::ExtendAt) {
            ASSERT_GE(v.index, i);
            ASSERT_LT(v.index, k);
            ASSERT_EQ((*p)[v.index + 1].term(), Term::extend(t, (*p)[v.index].term()));
          }
        }
  EXPECT_GT(instances, 1000u);
}

TEST(PrefixBootExtend, SummaryHasNoViolations) {
  auto s = run_prefix_boot_extend_oracle(4, {e(0), e(1)});
  EXPECT_EQ(s.paths, count_paths(4, {e(0), e(1)}));
  EXPECT_EQ(s.violations, 0u);
  EXPECT_EQ(s.instances, s.subterm_holds + s.extend_at);
}
