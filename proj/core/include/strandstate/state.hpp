// TPM state theory: machine states built from boot and extend, the
// transition relation, finite path prefixes, and the Prefix Boot Extend
// property as a checkable verdict.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "strandstate/term.hpp"

namespace sst {

/// A term of sort M: boot, or extend(t, m).
class MachineState {
 public:
  MachineState() : value_(Term::boot()) {}
  explicit MachineState(Term value);

  static MachineState boot() { return MachineState(); }
  MachineState extended(const Term& t) const { return MachineState(Term::extend(t, value_)); }

  const Term& term() const { return value_; }
  bool is_boot() const { return value_.kind() == Kind::Boot; }
  /// Number of extend constructors.
  std::size_t depth() const;

  friend bool operator==(const MachineState&, const MachineState&) = default;
  friend auto operator<=>(const MachineState& a, const MachineState& b) { return a.value_ <=> b.value_; }

 private:
  Term value_;
};

/// m0 ⇝ m1: boot, extend, or the state-preserving quote/decrypt step.
bool step(const MachineState& m0, const MachineState& m1);

/// The constant s0, the PCR value after boot.
Term pcr_boot_value();
/// pcr(bt) = s0, pcr(ex(t, m)) = #(t, pcr(m)).
Term pcr(const MachineState& m);
/// Inverse of pcr on its range; none when the term is not a pcr image.
std::optional<MachineState> pcr_inverse(const Term& value);

/// True iff some ex(t, ·) occurs inside m.
bool has(const MachineState& m, const Term& t);

class Path {
 public:
  /// Validates the path: starts at boot and every step is a transition.
  explicit Path(std::vector<MachineState> states);

  std::size_t size() const { return states_.size(); }
  const MachineState& operator[](std::size_t i) const { return states_.at(i); }
  const std::vector<MachineState>& states() const { return states_; }

 private:
  std::vector<MachineState> states_;
};

struct PrefixBootExtendVerdict {
  enum class Kind { SubtermHolds, ExtendAt, Violation };
  Kind kind;
  std::size_t index = 0;  // j for ExtendAt
};

/// Decides which disjunct of Prefix Boot Extend holds for p, i, k, t.
/// Throws std::out_of_range unless i <= k < p.size().
PrefixBootExtendVerdict check_prefix_boot_extend(const Path& p, std::size_t i, std::size_t k, const Term& t);

/// Deterministic depth-first generator of every path of length <= max_len
/// whose extend arguments come from `alphabet`. Successors of a state are
/// tried as boot, then extends in alphabet order, then the self loop, with
/// duplicates dropped.
class PathEnumerator {
 public:
  PathEnumerator(std::size_t max_len, std::vector<Term> alphabet);

  std::optional<Path> next();

 private:
  std::vector<MachineState> successors(const MachineState& m) const;

  std::size_t max_len_;
  std::vector<Term> alphabet_;
  std::vector<MachineState> current_;
  std::vector<std::vector<MachineState>> pending_;
  bool started_ = false;
};

/// All machine states with at most `max_depth` extends over the alphabet.
std::vector<MachineState> states_up_to_depth(std::size_t max_depth, const std::vector<Term>& alphabet);

struct LemmaOneSummary {
  std::size_t paths = 0;
  std::size_t instances = 0;
  std::size_t subterm_holds = 0;
  std::size_t extend_at = 0;
  std::size_t violations = 0;
};

/// Runs check_prefix_boot_extend over every (path, i, k, t) with t ranging
/// over the alphabet and the path length bounded by max_len.
LemmaOneSummary run_prefix_boot_extend_oracle(std::size_t max_len, const std::vector<Term>& alphabet);

}  // namespace sst
