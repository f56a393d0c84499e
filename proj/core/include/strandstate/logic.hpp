// Goal formulas over bundles: atoms, satisfaction, the encoding of skeletons
// as formulas, and shape analysis sentences.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strandstate/skeleton.hpp"

namespace sst {

enum class FormulaKind { Equal, Htin, Prec, Non, Uniq, Sends, And, Exists, Implies, False };

/// Node (z, i): strand variable z, position i.
struct NodeRef {
  std::string strand;
  std::size_t index = 0;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

/// A bound variable; no sort means a strand variable.
struct QVar {
  std::string name;
  std::optional<Sort> sort;
  friend bool operator==(const QVar&, const QVar&) = default;
};

struct Formula {
  FormulaKind kind = FormulaKind::And;
  // Equal: lhs = rhs.  Non, Uniq, Sends: lhs.
  Term lhs, rhs;
  // Htin: strand has height >= height and runs role with args.
  std::string strand;
  std::size_t height = 0;
  std::string role;
  std::map<std::string, Term> args;
  // Prec: n0 before n1.  Uniq, Sends: n0.
  NodeRef n0, n1;
  // Exists: vars over parts[0].
  std::vector<QVar> vars;
  // And: conjuncts.  Implies: parts[0] is the hypothesis, the rest disjuncts.
  std::vector<Formula> parts;

  static Formula equal(Term a, Term b);
  static Formula htin(std::string z, std::size_t h, std::string role, std::map<std::string, Term> args);
  static Formula prec(NodeRef a, NodeRef b);
  static Formula non(Term t);
  static Formula uniq(Term t, NodeRef n);
  static Formula sends(NodeRef n, Term t);
  static Formula conj(std::vector<Formula> parts);
  static Formula exists(std::vector<QVar> vars, Formula body);
  static Formula implies(Formula hyp, std::vector<Formula> disjuncts);
  static Formula falsum();

  friend bool operator==(const Formula&, const Formula&) = default;
};

/// Free variables, strand variables without a sort.
std::vector<QVar> free_vars(const Formula& f);

struct Assignment {
  Subst msg;
  std::map<std::string, std::size_t> strands;
};

class UnboundVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Satisfaction in a bundle. Quantifiers range over the bundle's strands and
/// over messages; existential message witnesses are searched among the
/// bundle's subterms plus one fresh atom per sort. Throws UnboundVariable
/// when a free variable is missing from `alpha`.
bool satisfies(const Bundle& b, const Protocol& p, const Assignment& alpha, const Formula& f);

/// Every extension of `alpha` to `vars` under which the conjunction holds.
std::vector<Assignment> solutions(const Bundle& b, const Protocol& p, const Assignment& alpha,
                                  const std::vector<QVar>& vars, const Formula& body, std::size_t limit = SIZE_MAX);

struct SkeletonFormula {
  Formula formula;
  /// Strand variable per skeleton strand.
  std::vector<std::string> strand_vars;
};

/// Conjunction of Htin per strand (arguments restricted to parameters of the
/// prefix), Prec per order edge, Non and Uniq per declaration and Equal per
/// instantiated input variable. Strand i is named prefix+i unless
/// `fixed_names` supplies a name.
SkeletonFormula skeleton_to_formula(const Skeleton& sk, const std::string& prefix = "z",
                                    const std::vector<std::string>& fixed_names = {});

/// The assignment under which to_bundle(sk) realizes skeleton_to_formula(sk).
Assignment canonical_assignment(const Skeleton& sk, const WitnessBundle& w, const SkeletonFormula& f);

struct ShapeAnalysisSentence {
  std::vector<QVar> universals;
  Formula hypothesis;
  /// Each disjunct is Exists(ȳ, Ψ) or a bare Ψ when ȳ is empty.
  std::vector<Formula> disjuncts;
  /// Set when produced from an incomplete analysis.
  bool unsound = false;

  Formula as_formula() const;
};

class IncompleteAnalysis : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ∀x̄ (Φ0 ⊃ ⋁ ∃ȳ Ψ). Refuses incomplete results unless allow_incomplete.
ShapeAnalysisSentence shape_analysis_sentence(const Skeleton& input, const AnalysisResult& result,
                                              bool allow_incomplete = false);

/// Every assignment of the universals satisfying the hypothesis extends to
/// some disjunct.
bool sentence_holds(const Bundle& b, const Protocol& p, const ShapeAnalysisSentence& s);

}  // namespace sst
