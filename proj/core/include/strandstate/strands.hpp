// Strand spaces: events, traces, roles and protocols, origination, bundles
// and their causal order, adversary roles, and Dolev-Yao derivability.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strandstate/term.hpp"

namespace sst {

enum class Dir { Send, Recv };

struct Event {
  Dir dir;
  Term msg;

  static Event send(Term t) { return {Dir::Send, std::move(t)}; }
  static Event recv(Term t) { return {Dir::Recv, std::move(t)}; }
  bool is_send() const { return dir == Dir::Send; }
  friend bool operator==(const Event&, const Event&) = default;
  std::string str() const;
};

using Trace = std::vector<Event>;

struct Node {
  std::size_t strand = 0;
  std::size_t index = 0;
  friend auto operator<=>(const Node&, const Node&) = default;
  std::string str() const;
};

/// State transition attached to a transmission event. `pre` is the encoded
/// state received before the transition (none: any state), `post` the
/// encoded state transmitted.
struct RoleAnnotation {
  std::size_t event = 0;
  std::optional<std::size_t> pre_event;
  std::optional<Term> pre;
  Term post;
};

enum class RoleKind { Regular, Listener, Adversary };

struct Role {
  std::string name;
  std::vector<Term> params;
  Trace trace;
  RoleKind kind = RoleKind::Regular;
  std::vector<Term> non_orig;
  std::vector<Term> uniq_orig;
  std::vector<RoleAnnotation> annotations;
  /// Parameters whose instances must be tag constants (the tag role).
  std::set<std::string> tag_params;

  const RoleAnnotation* annotation_at(std::size_t event) const;
};

/// Prefix of a substitution instance of the role; returns the substitution.
std::optional<Subst> role_instance(const Role& role, const Trace& trace);

class Protocol {
 public:
  Protocol() = default;
  Protocol(std::string name, std::vector<Role> roles);

  const std::string& name() const { return name_; }
  const std::vector<Role>& roles() const { return roles_; }
  const Role* find(const std::string& name) const;
  /// Adds the adversary roles unless already present.
  void add_adversary_roles();

  friend bool operator==(const Protocol&, const Protocol&);

 private:
  std::string name_;
  std::vector<Role> roles_;
};

std::vector<Role> adversary_roles();

using StrandSpace = std::vector<Trace>;

/// Least index i where c(i) is a transmission carrying t and no earlier
/// event carries t.
std::optional<std::size_t> originates(const Trace& c, const Term& t);
bool non_originating(const StrandSpace& space, const Term& t);
/// Throws std::out_of_range when n is not a node of the space.
bool uniquely_originates(const StrandSpace& space, const Term& t, Node n);

struct RoleAssignment {
  std::string role;
  Subst subst;
};

struct Bundle {
  StrandSpace space;
  std::set<std::pair<Node, Node>> comm;
  std::vector<RoleAssignment> roles;

  const Event& event(Node n) const { return space.at(n.strand).at(n.index); }
  bool has_node(Node n) const { return n.strand < space.size() && n.index < space[n.strand].size(); }
  std::vector<Node> nodes() const;
};

struct Violation {
  enum class Kind {
    NodeOutOfRange,
    BadDirection,
    MessageMismatch,
    MissingTransmitter,
    MultipleTransmitters,
    Cycle,
    UnknownRole,
    NotRoleInstance,
  };
  Kind kind;
  Node node;
  std::optional<Node> other;
  std::string detail;
  std::string str() const;
};

std::string_view violation_name(Violation::Kind k);

/// Empty iff the bundle is well formed and every strand is an instance of
/// its assigned role in `protocol`.
std::vector<Violation> check_bundle(const Bundle& b, const Protocol& protocol);

/// Transitive closure of communication plus strand succession.
class Precedence {
 public:
  Precedence(const StrandSpace& space, const std::set<std::pair<Node, Node>>& edges);

  bool before(Node a, Node b) const;
  bool acyclic() const { return acyclic_; }
  std::size_t node_count() const { return ids_.size(); }

 private:
  std::size_t id(Node n) const;
  std::map<Node, std::size_t> ids_;
  std::vector<std::vector<bool>> reach_;
  bool acyclic_ = true;
};

/// n0 ≺ n1 in the bundle. Throws std::out_of_range for unknown nodes.
bool precedes(const Bundle& b, Node n0, Node n1);

/// Atoms, tags, and variables of atom sort or mesg are creatable unless
/// forbidden; compound terms never are.
bool creatable(const Term& t, const TermSet& forbidden);

/// Dolev-Yao deduction over a fixed knowledge set: decomposition to a
/// fixpoint, then memoized composition.
class Deducer {
 public:
  Deducer(const std::vector<Term>& available, TermSet forbidden);

  bool derivable(const Term& t);
  /// Every term obtainable by decomposition, including the inputs.
  const TermSet& analyzed() const { return known_; }
  const TermSet& forbidden() const { return forbidden_; }

 private:
  bool synth(const Term& t);

  TermSet known_;
  TermSet forbidden_;
  std::map<Term, bool> memo_;
};

bool derivable(const std::vector<Term>& available, const TermSet& forbidden, const Term& target);

/// Incrementally builds a bundle, grafting adversary strands that derive
/// each reception from earlier transmissions.
class BundleBuilder {
 public:
  BundleBuilder(const Protocol& protocol, TermSet forbidden);

  std::size_t add_strand(const std::string& role, const Subst& subst, Trace trace);
  /// Makes the transmission at `n` available to the adversary.
  void publish(Node n);
  /// Connects reception `n` to a transmitter of its message, deriving it if
  /// necessary; false when the message cannot be derived.
  bool deliver(Node n);
  /// Direct edge from a transmission to a reception of the same message.
  void link(Node from, Node to);
  /// Forces a ≺ b for transmission a and reception b by routing b's message
  /// through a pair/sep detour that also consumes a's message.
  bool deliver_after(Node b, const std::vector<Node>& after);

  const Bundle& bundle() const { return bundle_; }
  Bundle take() { return std::move(bundle_); }

 private:
  std::optional<Node> produce(const Term& t);
  void analyze();
  std::size_t add_adversary(const std::string& role, const Subst& subst);
  void connect(Node from, Node to);

  const Protocol& protocol_;
  TermSet forbidden_;
  Bundle bundle_;
  std::map<Term, Node> pool_;
  std::set<Term> analyzed_;
};

/// Derivation witness: a bundle in which creator strands transmit
/// `available`, adversary strands derive `target`, and a final listener
/// receives it. Returns none when not derivable.
std::optional<Bundle> derivation_witness(const std::vector<Term>& available, const TermSet& forbidden,
                                         const Term& target, Protocol& protocol_out);

}  // namespace sst
