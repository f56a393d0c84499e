#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strandstate/envelope.hpp"
#include "strandstate/format.hpp"
#include "strandstate/logic.hpp"
#include "strandstate/verify.hpp"

using namespace sst;
using namespace oracle;

namespace {

std::shared_ptr<Protocol> load_protocol(const std::string& file) {
  return std::make_shared<Protocol>(parse_protocol(slurp(data_path(file))));
}

Assignment strands_at(std::map<std::string, std::size_t> z) {
  Assignment a;
  a.strands = std::move(z);
  return a;
}

std::size_t count_kind(const Formula& f, FormulaKind k, const std::string& role = "") {
  std::size_t n = f.kind == k && (role.empty() || f.role == role);
  for (const auto& p : f.parts) n += count_kind(p, k, role);
  return n;
}

std::size_t count_role(const Skeleton& sk, const std::string& role) {
  return std::count_if(sk.strands.begin(), sk.strands.end(), [&](const SkStrand& s) { return s.role == role; });
}

const Term K = Term::atom(Sort::S, "k");

}  // namespace

TEST(Satisfies, SendsPrecAndUnbound) {
  Protocol p;
  Bundle b{{{Event::send(d(0))}, {Event::recv(d(0))}}, {{{0, 0}, {1, 0}}}, {}};
  Assignment a = strands_at({{"z", 0}, {"w", 1}});
  EXPECT_TRUE(satisfies(b, p, a, Formula::sends({"z", 0}, d(0))));
  EXPECT_FALSE(satisfies(b, p, a, Formula::sends({"w", 0}, d(0))));
  EXPECT_TRUE(satisfies(b, p, a, Formula::prec({"z", 0}, {"w", 0})));
  EXPECT_FALSE(satisfies(b, p, a, Formula::prec({"z", 0}, {"z", 0})));
  EXPECT_FALSE(satisfies(b, p, a, Formula::falsum()));
  EXPECT_TRUE(satisfies(b, p, a, Formula::conj({})));
  EXPECT_THROW(satisfies(b, p, a, Formula::sends({"q", 0}, d(0))), UnboundVariable);
  EXPECT_THROW(satisfies(b, p, a, Formula::non(Term::var("x", Sort::D))), UnboundVariable);
}

TEST(Satisfies, ExistsAndEqual) {
  Protocol p;
  Bundle b{{{Event::send(d(0))}, {Event::send(d(1))}}, {}, {}};
  Term x = Term::var("x", Sort::D);
  Formula f = Formula::exists({{"z", std::nullopt}}, Formula::sends({"z", 0}, x));
  Assignment a;
  a.msg.bind(x, d(1));
  EXPECT_TRUE(satisfies(b, p, a, f));
  a.msg = {};
  a.msg.bind(x, d(2));
  EXPECT_FALSE(satisfies(b, p, a, f));
  EXPECT_TRUE(satisfies(b, p, {}, Formula::equal(d(0), d(0))));
  EXPECT_FALSE(satisfies(b, p, {}, Formula::equal(d(0), d(1))));
}

TEST(Satisfies, HtinNeedsRoleAndHeight) {
  auto toy = load_protocol("toy.proto");
  Term s1 = Term::atom(Sort::S, "s1");
  Subst sigma;
  sigma.bind(Term::var("n", Sort::D), d(0));
  Bundle b{{{Event::send(Term::enc(d(0), s1)), Event::recv(d(0))}}, {}, {{"init", sigma}}};
  Assignment a = strands_at({{"z", 0}});
  EXPECT_TRUE(satisfies(b, *toy, a, Formula::htin("z", 2, "init", {{"n", d(0)}})));
  EXPECT_TRUE(satisfies(b, *toy, a, Formula::htin("z", 1, "init", {{"n", d(0)}})));
  EXPECT_FALSE(satisfies(b, *toy, a, Formula::htin("z", 3, "init", {{"n", d(0)}})));
  EXPECT_FALSE(satisfies(b, *toy, a, Formula::htin("z", 1, "init", {{"n", d(1)}})));
  EXPECT_FALSE(satisfies(b, *toy, a, Formula::htin("z", 1, "resp", {{"n", d(0)}})));
}

TEST(Satisfies, UniqAndNonAgreeWithStrandPredicates) {
  std::mt19937_64 rng(31);
  Protocol p;
  std::size_t checked = 0;
  for (int i = 0; i < 300; ++i) {
    Bundle b = random_bundle(rng, 8, 3);
    // Make atoms recur across strands so origination is not always unique.
    for (auto& tr : b.space)
      for (auto& ev : tr)
        if (ev.is_send() && rng() % 2) ev.msg = Term::pair(d(static_cast<int>(rng() % 3)), ev.msg);
    for (const auto& n : b.nodes())
      for (int k = 0; k < 3; ++k) {
        Assignment a = strands_at({{"z", n.strand}});
        Formula f = Formula::uniq(d(k), {"z", n.index});
        ASSERT_EQ(satisfies(b, p, a, f), uniquely_originates(b.space, d(k), n));
        ++checked;
      }
    for (int k = 0; k < 3; ++k) ASSERT_EQ(satisfies(b, p, {}, Formula::non(d(k))), non_originating(b.space, d(k)));
  }
  EXPECT_GT(checked, 500u);
}

TEST(SkeletonToFormula, EmptyAndSingleStrand) {
  auto toy = load_protocol("toy.proto");
  Skeleton empty(toy);
  auto f0 = skeleton_to_formula(empty);
  EXPECT_EQ(f0.formula.kind, FormulaKind::And);
  EXPECT_TRUE(f0.formula.parts.empty());
  EXPECT_TRUE(f0.strand_vars.empty());

  Skeleton one(toy);
  one.add_strand("init", 1);
  auto f1 = skeleton_to_formula(one);
  EXPECT_EQ(count_kind(f1.formula, FormulaKind::Htin), 1u);
  EXPECT_EQ(count_kind(f1.formula, FormulaKind::Prec) + count_kind(f1.formula, FormulaKind::Non) +
                count_kind(f1.formula, FormulaKind::Uniq),
            0u);
  ASSERT_EQ(f1.strand_vars.size(), 1u);
}

TEST(SkeletonToFormula, EnvelopeGoal) {
  Skeleton goal = envelope_goal_skeleton(false);
  Formula f = skeleton_to_formula(goal).formula;
  EXPECT_EQ(count_kind(f, FormulaKind::Htin, "alice"), 1u);
  std::set<std::string> non, uniq;
  for (const auto& part : f.parts) {
    if (part.kind == FormulaKind::Non && part.lhs.is_var()) non.insert(part.lhs.name());
    if (part.kind == FormulaKind::Uniq && part.lhs.is_var()) uniq.insert(part.lhs.name());
  }
  EXPECT_TRUE(non.contains("aik"));
  EXPECT_TRUE(uniq.contains("n"));
  EXPECT_TRUE(uniq.contains("v"));
}

TEST(Sentence, NoReceptionIsTautology) {
  auto toy = load_protocol("toy.proto");
  Skeleton sk = parse_skeleton(slurp(data_path("toy-send.skel")), toy);
  auto r = search(sk, {});
  auto s = shape_analysis_sentence(sk, r);
  ASSERT_EQ(s.disjuncts.size(), 1u);
  EXPECT_FALSE(s.unsound);
  EXPECT_EQ(count_kind(s.disjuncts[0], FormulaKind::Htin), count_kind(s.hypothesis, FormulaKind::Htin));
}

TEST(Sentence, DeadIsEmptyDisjunction) {
  auto toy = load_protocol("toy.proto");
  Skeleton sk = parse_skeleton("(defskeleton toy (vars (n data)) (defstrand resp 1 (n n)) (non-orig s1 n))", toy);
  auto r = search(sk, {});
  ASSERT_TRUE(r.dead);
  auto s = shape_analysis_sentence(sk, r);
  EXPECT_TRUE(s.disjuncts.empty());
  EXPECT_EQ(s.as_formula().kind, FormulaKind::Implies);
}

TEST(Sentence, IncompleteIsRefusedUnlessAllowed) {
  Skeleton goal = envelope_goal_skeleton(true);
  SearchBounds tiny;
  tiny.max_strands = 2;
  auto r = search(goal, tiny);
  ASSERT_TRUE(r.incomplete);
  EXPECT_THROW(shape_analysis_sentence(goal, r), IncompleteAnalysis);
  EXPECT_TRUE(shape_analysis_sentence(goal, r, true).unsound);
}

TEST(Sentence, EnvelopeDisjunctsCarryThreeExtends) {
  Skeleton goal = envelope_goal_skeleton(true);
  auto r = search(goal, {});
  auto s = shape_analysis_sentence(goal, r);
  ASSERT_FALSE(s.disjuncts.empty());
  for (const auto& d : s.disjuncts) EXPECT_GE(count_kind(d, FormulaKind::Htin, "extend"), 3u);
}

TEST(Bridge, SplitShapesGetBothOrderingsAndDie) {
  Skeleton goal = envelope_goal_skeleton(true);
  auto r = search(goal, {});
  ASSERT_FALSE(r.shapes.empty());
  for (const auto& sh : r.shapes) {
    BridgeResult br = bridge_refine(sh);
    ASSERT_TRUE(br.applicable) << br.diagnostic;
    ASSERT_TRUE(br.split);
    ASSERT_EQ(br.enriched.size(), 2u);
    EXPECT_EQ(br.labels.size(), br.enriched.size());
    for (const auto& e : br.enriched) {
      EXPECT_EQ(count_role(e, "extend"), count_role(sh, "extend") + 1);
      auto er = search(e, {});
      EXPECT_FALSE(er.incomplete);
      EXPECT_TRUE(er.dead);
    }
  }
}

TEST(Bridge, NoSplitPatternIsNotApplicable) {
  auto toy = load_protocol("toy.proto");
  auto r = search(parse_skeleton(slurp(data_path("toy-goal.skel")), toy), {});
  BridgeResult br = bridge_refine(r.shapes.at(0));
  EXPECT_FALSE(br.applicable);
  EXPECT_TRUE(br.enriched.empty());
  EXPECT_FALSE(br.diagnostic.empty());
}

// Chained extends where the later one already consumes the earlier one's
// result: in that ordering the subterm disjunct holds and only an edge is
// added; the reverse ordering needs a reboot in between.
TEST(Bridge, ChainedExtendsOnlyGainOrder) {
  auto p = std::make_shared<Protocol>(envelope_protocol(false));
  Skeleton sk(p);
  MachineState bt, m1 = bt.extended(e(0));
  sk.add_strand("extend", 3, {{"k", K}, {"p", pcr(bt)}, {"t", e(0)}});
  sk.add_strand("extend", 3, {{"k", K}, {"p", pcr(m1)}, {"t", e(1)}});
  sk.non.insert(K);
  BridgeResult br = bridge_refine(sk);
  ASSERT_TRUE(br.applicable);
  ASSERT_EQ(br.labels, (std::vector<std::string>{"edge", "boot"}));
  EXPECT_EQ(br.enriched[0].strands.size(), sk.strands.size());
  EXPECT_TRUE(br.enriched[0].order.contains({{0, 2}, {1, 1}}));
  EXPECT_EQ(count_role(br.enriched[1], "boot"), 1u);
}

TEST(Verify, TinyBoundsNeverVerified) {
  VerifyOptions o;
  o.deepen = false;
  o.bounds.max_strands = 4;
  auto r = verify_goal(envelope_goal_skeleton(true), o);
  EXPECT_NE(r.verdict, Verdict::Verified);
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
}

TEST(Verify, EnvelopeGoalVerifiedWithCleanEvidence) {
  auto r = verify_goal(envelope_goal_skeleton(true));
  ASSERT_EQ(r.verdict, Verdict::Verified) << r.reason;
  EXPECT_EQ(r.incomplete_steps, 0u);
  for (const auto& s : r.steps) {
    EXPECT_FALSE(s.result.incomplete);
    ASSERT_TRUE(s.sentence);
    EXPECT_FALSE(s.sentence->unsound);
  }
  EXPECT_FALSE(r.counterexample);
  for (const auto& [ms, v] : r.passes) EXPECT_EQ(v, Verdict::Inconclusive) << ms;
}
