// The Envelope protocol: TPM state-bearing roles, Alice, the state encoding,
// node annotations, and bundle/state compatibility.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "strandstate/state.hpp"
#include "strandstate/strands.hpp"

namespace sst {

/// tg0, the tag on every state-bearing message.
Term state_tag();
/// g1 .. g9 (g0 is reserved and never emitted).
Term envelope_tag(int i);

/// Built-in Envelope protocol including adversary roles. With replay
/// protection the extend role runs the sid/tpmk session exchange and Alice
/// binds her extend request to the session id.
Protocol envelope_protocol(bool replay_protection = true);

/// enc((tg0, pcr(m)), #k)
Term encode_state(const MachineState& m, const Term& k);
std::optional<MachineState> decode_state(const Term& t, const Term& k);

struct DecodedState {
  MachineState state;
  Term key;
};
/// Decodes enc((tg0, v), #k) for any k.
std::optional<DecodedState> decode_state_any(const Term& t);

/// pre none means any state may precede the transition.
struct NodeAnnotation {
  std::optional<Term> pre;
  Term post;
};

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Annotated nodes of the bundle, instantiated through each strand's role.
/// Throws AnnotationError when a strand is also an instance of another
/// regular role that annotates the same events differently.
std::map<Node, NodeAnnotation> annotate(const Bundle& b, const Protocol& p);

/// The set {(m0, m1) | pre = g(m0), post = g(m1)} ∩ ⇝ contains (m0, m1).
bool annotation_admits(const NodeAnnotation& a, const MachineState& m0, const MachineState& m1);

struct CompatibilityWitness {
  std::size_t length = 0;
  std::map<Node, std::size_t> placement;
  std::vector<MachineState> path;
};

struct CompatibilityResult {
  std::optional<CompatibilityWitness> witness;
  std::string reason;
  explicit operator bool() const { return witness.has_value(); }
};

CompatibilityResult check_compatibility(const Bundle& b, const Protocol& p);

/// Replays a witness against the definition; independent of the search.
bool verify_witness(const Bundle& b, const std::map<Node, NodeAnnotation>& anno, const CompatibilityWitness& w,
                    std::string* why = nullptr);

/// Exhaustive oracle: every bijection onto 0..ℓ-1 and every path of length
/// ℓ+1 whose extend arguments occur in the annotations.
bool compatibility_oracle(const Bundle& b, const Protocol& p);

/// Small TPM-only protocol used to generate annotated bundles: boot, extend,
/// pass (state-preserving), sync (waits for a second state, keeps the
/// first), and forge (transmits a state encoding outside the pcr range).
Protocol compat_test_protocol();

/// Every bundle over compat_test_protocol with 1..max_annotated strands whose
/// extend values come from `alphabet`, in a deterministic order.
void enumerate_compat_bundles(std::size_t max_annotated, const std::vector<Term>& alphabet,
                              const std::function<void(const Bundle&)>& visit);
Bundle random_compat_bundle(std::mt19937_64& rng, std::size_t max_annotated, const std::vector<Term>& alphabet);

}  // namespace sst
