// Skeletons and enrich-by-need search: realization, refinement, shapes,
// witness bundles, and the bounded bundle enumerator used as an oracle.
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strandstate/strands.hpp"

namespace sst {

struct SkStrand {
  std::string role;
  std::size_t height = 0;
  /// Every role parameter, mapped to a term over skeleton variables.
  std::map<std::string, Term> args;
  Trace trace;
};

/// Instantiates a role term with a simultaneous parameter substitution.
Term instantiate(const Term& t, const std::map<std::string, Term>& args);

class Skeleton {
 public:
  Skeleton() = default;
  explicit Skeleton(std::shared_ptr<const Protocol> protocol) : protocol_(std::move(protocol)) {}

  const Protocol& protocol() const { return *protocol_; }
  const std::shared_ptr<const Protocol>& protocol_ptr() const { return protocol_; }

  std::vector<SkStrand> strands;
  /// Generating edges; succession is implicit.
  std::set<std::pair<Node, Node>> order;
  TermSet non;
  std::map<Term, Node> uniq;
  /// Declared input variables and their current instances.
  std::vector<Term> inputs;
  Subst input_binding;
  /// Leading strands that come from the input; pruning never removes them.
  std::size_t fixed = 0;

  /// Adds a strand of `role` at `height`; parameters absent from `args` get
  /// fresh variables.
  std::size_t add_strand(const std::string& role, std::size_t height, std::map<std::string, Term> args = {});
  /// Extends strand s to `height`, instantiating the new events.
  void raise(std::size_t s, std::size_t height);
  /// Applies a substitution over skeleton variables everywhere; false when
  /// two uniquely originating atoms collapse onto different nodes.
  bool apply(const Subst& sigma);

  const Event& event(Node n) const { return strands.at(n.strand).trace.at(n.index); }
  bool has_node(Node n) const { return n.strand < strands.size() && n.index < strands[n.strand].trace.size(); }
  StrandSpace space() const;
  Precedence precedence() const;
  std::vector<Node> nodes() const;
  /// Strands of non-listener roles.
  std::size_t regular_count() const;
  std::map<std::string, Sort> variables() const;
  Term fresh_var(const std::string& base, Sort sort);

 private:
  std::shared_ptr<const Protocol> protocol_;
  std::size_t fresh_ = 0;
};

/// Adds role-level origination facts, checks non/uniq, adds the orderings
/// implied by unique origination, and rejects cyclic orderings.
std::optional<Skeleton> normalize(Skeleton sk);

/// Removes strands that map onto another strand of the same role while
/// preserving every ordering and origination fact, then renormalizes.
Skeleton prune(Skeleton sk);

/// Strand map and variable substitution carrying `from` into `to`: roles and
/// trace prefixes, orderings, origination facts and input bindings are
/// preserved, and the fixed leading strands map to themselves.
struct Homomorphism {
  std::vector<std::size_t> strand_map;
  Subst subst;
};
std::optional<Homomorphism> homomorphism(const Skeleton& from, const Skeleton& to);

/// Keeps the shapes no other shape maps into, first of each equivalent group.
std::vector<Skeleton> minimal_shapes(const std::vector<Skeleton>& shapes);

/// Reception nodes whose message is not derivable from transmissions that
/// precede them, in strand-major order.
std::vector<Node> unrealized_nodes(const Skeleton& sk);

struct SearchBounds {
  std::size_t max_strands = 16;
  std::size_t max_height = 6;
  std::size_t max_depth = 24;
  /// Refinement tree size cap; hitting it marks the result incomplete.
  std::size_t max_tree = 200000;
};

struct RefineResult {
  std::vector<Skeleton> children;
  /// Branch kind per child: contraction, displacement, raise, augmentation, leak.
  std::vector<std::string> kinds;
  /// Some branch was dropped because of the bounds.
  bool bounded = false;
};

RefineResult refine(const Skeleton& sk, Node n, const SearchBounds& bounds);

struct TreeEntry {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
  std::size_t strands = 0;
  std::string outcome;  // shape, duplicate, dead, refined, bound
  /// Branch kind that produced this node; empty for the root.
  std::string via;
  std::optional<Node> target;
  std::size_t children = 0;
};

struct TreeStats {
  std::size_t explored = 0;
  std::size_t shapes = 0;
  std::size_t dead_leaves = 0;
  std::size_t duplicates = 0;
  std::size_t bounded = 0;
  std::size_t max_depth = 0;
};

struct AnalysisResult {
  Skeleton input;
  std::vector<Skeleton> shapes;
  bool dead = false;
  bool incomplete = false;
  TreeStats stats;
  std::vector<TreeEntry> tree;
};

AnalysisResult search(const Skeleton& sk, const SearchBounds& bounds);

/// Serialization used for deduplication up to variable and strand renaming.
std::string canonical_form(const Skeleton& sk);

struct WitnessBundle {
  Bundle bundle;
  /// Skeleton variable name -> ground value.
  Subst grounding;
};

/// Grounds the skeleton with fresh constants and grafts adversary strands
/// realizing every reception. Regular strands keep their indices. Throws
/// std::runtime_error when a reception cannot be realized.
WitnessBundle to_bundle(const Skeleton& sk);

struct EnumerationBounds {
  std::size_t max_strands = 2;
  std::size_t max_height = 2;
};

/// Bundles with 1..max_strands regular strands of height at most max_height
/// whose parameters range over `alphabet`. Strand multisets are taken in a
/// fixed order; for every interleaving, each reception is fed either directly
/// by an earlier regular transmission of the same message or by the
/// adversary, who may create any atom. Repeats are suppressed by structure.
void enumerate_bundles(const Protocol& p, const EnumerationBounds& bounds, const std::vector<Term>& alphabet,
                       const std::function<void(const Bundle&)>& visit);

}  // namespace sst
