#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strandstate/envelope.hpp"
#include "strandstate/format.hpp"
#include "strandstate/logic.hpp"
#include "strandstate/sexp.hpp"
#include "strandstate/verify.hpp"

using namespace sst;
using namespace oracle;

namespace {

ParseError::Category error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.category();
  }
  ADD_FAILURE() << "no parse error";
  return ParseError::Category::Semantic;
}

SourcePos pos_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.pos();
  }
  ADD_FAILURE() << "no parse error";
  return {};
}

}  // namespace

TEST(SExpr, ReadAndPrint) {
  auto es = read_sexprs("; comment\n(a (b 12) \"s\")\n(c)");
  ASSERT_EQ(es.size(), 2u);
  EXPECT_EQ(es[0].head(), "a");
  EXPECT_EQ(es[0].items[1].items[1].number(), 12);
  EXPECT_EQ(es[1].pos.line, 3);
  EXPECT_EQ(to_string(es[0]), "(a (b 12) \"s\")");
  EXPECT_EQ(error_of([] { read_sexprs("(a (b)"); }), ParseError::Category::Syntax);
  EXPECT_EQ(error_of([] { read_sexprs("a)"); }), ParseError::Category::Syntax);
}

TEST(SExpr, PrettyRoundTrips) {
  SExpr big = list({sym("defthing"), sym("name")});
  for (int i = 0; i < 20; ++i) big.items.push_back(list({sym("item"), num(i), list({sym("x"), sym("y")})}));
  std::string text = pretty(big, 40);
  EXPECT_NE(text.find('\n'), std::string::npos);
  auto back = read_sexprs(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(to_string(back[0]), to_string(big));
  EXPECT_EQ(pretty(list({sym("a"), sym("b")})), "(a b)");
}

TEST(ParseProtocol, ShippedEnvelopeFilesMatchBuiltins) {
  EXPECT_EQ(parse_protocol(slurp(data_path("envelope.proto"))), envelope_protocol(true));
  EXPECT_EQ(parse_protocol(slurp(data_path("envelope-weak.proto"))), envelope_protocol(false));
}

TEST(ParseProtocol, SortErrorAtKeyPosition) {
  const char* text = "(defprotocol bad\n  (defrole r (vars (x data) (y data))\n    (trace (recv (enc x y)))))";
  EXPECT_EQ(error_of([&] { parse_protocol(text); }), ParseError::Category::Sort);
  SourcePos p = pos_of([&] { parse_protocol(text); });
  EXPECT_EQ(p.line, 3);
  EXPECT_EQ(p.column, 25);
}

TEST(ParseProtocol, DistinctErrorCategories) {
  EXPECT_EQ(error_of([] {
              parse_protocol("(defprotocol p (defrole r (vars (x data)) (trace (send x)))"
                             " (defrole r (vars (x data)) (trace (recv x))))");
            }),
            ParseError::Category::DuplicateRole);
  EXPECT_EQ(error_of([] { parse_protocol("(defprotocol p (defrole r (vars (x data)) (trace (send z))))"); }),
            ParseError::Category::UnboundVariable);
  EXPECT_EQ(error_of([] { parse_protocol("(defprotocol p (defrole r (vars (x data)) (trace (send x))"); }),
            ParseError::Category::Syntax);
  EXPECT_EQ(error_of([] { parse_protocol("(defprotocol p (defrole sep (vars (x data)) (trace (send x))))"); }),
            ParseError::Category::DuplicateRole);
  EXPECT_EQ(error_of([] {
              parse_protocol("(defprotocol p (defrole r (vars (x data)) (trace (recv x) (send x)) (annotate 0)))");
            }),
            ParseError::Category::Semantic);
}

TEST(ParseProtocol, RoundTrip) {
  for (const char* f : {"toy.proto", "envelope.proto", "envelope-weak.proto"}) {
    Protocol p = parse_protocol(slurp(data_path(f)));
    std::string text = print_protocol(p);
    EXPECT_EQ(parse_protocol(text), p) << f;
    EXPECT_EQ(print_protocol(parse_protocol(text)), text) << f;
  }
}

TEST(ParseTerm, Keywords) {
  Protocol p = envelope_protocol(false);
  Scope scope = protocol_scope(p);
  scope["x"] = Term::var("x", Sort::Top);
  scope["k"] = Term::var("k", Sort::A);
  EXPECT_EQ(parse_term("(enc x k)", scope), Term::enc(scope["x"], scope["k"]));
  EXPECT_EQ(parse_term("(invk k)", scope), Term::inv(scope["k"]));
  EXPECT_EQ(parse_term("(pair x x x)", scope), Term::pair(scope["x"], Term::pair(scope["x"], scope["x"])));
  EXPECT_EQ(parse_term("(x x)", scope), Term::pair(scope["x"], scope["x"]));
  EXPECT_EQ(parse_term("(extend x boot)", scope), Term::extend(scope["x"], Term::boot()));
  EXPECT_THROW(parse_term("(invk x)", scope), ParseError);
  EXPECT_THROW(parse_term("(extend boot x)", scope), ParseError);
  EXPECT_EQ(error_of([&] { parse_term("nowhere", scope); }), ParseError::Category::UnboundVariable);
  for (const auto& t : {Term::enc(scope["x"], Term::inv(scope["k"])), Term::hash(Term::pair(envelope_tag(1), scope["x"]))})
    EXPECT_EQ(parse_term(to_string(term_sexpr(t)), scope), t);
}

TEST(ParseSkeleton, RoundTripAndArgumentSorts) {
  auto p = std::make_shared<Protocol>(envelope_protocol(true));
  for (const char* f : {"envelope-goal.skel"}) {
    Skeleton sk = parse_skeleton(slurp(data_path(f)), p);
    std::string text = print_skeleton(sk);
    EXPECT_EQ(print_skeleton(parse_skeleton(text, p)), text);
    EXPECT_EQ(referenced_protocol(text), "envelope");
  }
  auto toy = std::make_shared<Protocol>(parse_protocol(slurp(data_path("toy.proto"))));
  EXPECT_EQ(error_of([&] { parse_skeleton("(defskeleton toy (vars (k skey)) (defstrand init 1 (n k)))", toy); }),
            ParseError::Category::Sort);
  EXPECT_EQ(error_of([&] { parse_skeleton("(defskeleton toy (defstrand nobody 1))", toy); }),
            ParseError::Category::Semantic);
}

TEST(ParseSkeleton, ShapesRoundTrip) {
  auto p = std::make_shared<Protocol>(envelope_protocol(true));
  auto r = search(parse_skeleton(slurp(data_path("envelope-goal.skel")), p), {});
  for (const auto& sh : r.shapes) {
    std::string text = print_skeleton(sh);
    Skeleton back = parse_skeleton(text, p);
    EXPECT_EQ(print_skeleton(back), text);
    EXPECT_EQ(canonical_form(back), canonical_form(sh));
  }
}

TEST(ParseBundle, WitnessBundleRoundTrip) {
  auto p = std::make_shared<Protocol>(envelope_protocol(true));
  auto r = search(envelope_goal_skeleton(true), {});
  ASSERT_FALSE(r.shapes.empty());
  Bundle b = to_bundle(r.shapes[0]).bundle;
  std::string text = print_bundle(b, *p);
  Bundle back = parse_bundle(text, *p);
  EXPECT_EQ(back.space, b.space);
  EXPECT_EQ(back.comm, b.comm);
  EXPECT_TRUE(check_bundle(back, *p).empty());
  EXPECT_EQ(print_bundle(back, *p), text);
  std::string dot = bundle_dot(back, *p);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("style=dashed"), std::string::npos);
  EXPECT_NE(dot.find("lightyellow"), std::string::npos);
}

TEST(ParseFormula, RoundTripAndSatisfaction) {
  Protocol toy = parse_protocol(slurp(data_path("toy.proto")));
  Formula f = parse_formula(slurp(data_path("toy-goal.formula")), toy);
  std::string text = print_formula(f, toy);
  EXPECT_EQ(parse_formula(text, toy), f);
  EXPECT_EQ(print_formula(parse_formula(text, toy), toy), text);
  Formula g = parse_formula(
      "(defformula toy (vars (z strand) (n data))"
      " (forall ((z strand) (n data)) (implies (htin z 2 init (n n)) (exists ((w strand)) (htin w 1 resp (n n))))))",
      toy);
  EXPECT_EQ(g.kind, FormulaKind::Implies);
  EXPECT_EQ(parse_formula(print_formula(g, toy), toy), g);
  EXPECT_EQ(error_of([&] { parse_formula("(defformula toy (sends (q 0) s1))", toy); }),
            ParseError::Category::UnboundVariable);
}

TEST(Reformat, IsIdempotent) {
  Protocol toy = parse_protocol(slurp(data_path("toy.proto")));
  for (const char* f : {"toy.proto", "toy-goal.skel", "toy-goal.formula"}) {
    std::string once = reformat(slurp(data_path(f)), &toy);
    EXPECT_EQ(reformat(once, &toy), once) << f;
  }
}
