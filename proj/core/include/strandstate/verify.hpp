// Inferred-extend refinement for state splits, and the goal verification loop
// that alternates protocol search with it.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strandstate/envelope.hpp"
#include "strandstate/logic.hpp"

namespace sst {

/// A state-extending node pair of one strand: it reads state m and writes
/// ex(t, m) under TPM key `key`.
struct ExtendSite {
  std::size_t strand = 0;
  std::size_t pre = 0;
  std::size_t post = 0;
  MachineState m;
  Term t;
  Term key;
};

std::vector<ExtendSite> extend_sites(const Skeleton& sk);

struct BridgeResult {
  /// False when no two extend sites are unordered: the shape is a fixpoint.
  bool applicable = false;
  /// Sites (z0, z1) of the split that was resolved.
  std::optional<std::pair<ExtendSite, ExtendSite>> split;
  /// One skeleton per admissible ordering and inferred value; empty with
  /// `applicable` means every ordering is contradictory.
  std::vector<Skeleton> enriched;
  /// Per enriched skeleton: "edge", "boot" or "extend <t>".
  std::vector<std::string> labels;
  std::string diagnostic;
};

/// Resolves the first unordered pair of extend sites. For each orientation
/// z0 before z1: when ex(t0, m0) is a subterm of m1 only the edge is added;
/// otherwise m1 was rebuilt after z0, so with m1 = ex(t, m') a new extend
/// strand taking m' to m1 sits between them (a boot strand when m1 = bt).
BridgeResult bridge_refine(const Skeleton& shape);

struct Linearization {
  Skeleton skeleton;
  WitnessBundle witness;
  CompatibilityWitness compat;
};

/// Tries every total order of the annotated nodes consistent with the
/// skeleton (at most `limit`), grounding each and checking compatibility.
std::optional<Linearization> find_compatible_linearization(const Skeleton& shape, std::size_t limit = 20000);

/// The initial skeleton of Goal 1: Alice finished, her secret v and the
/// refusal certificate for her nonce both reached the adversary.
Skeleton envelope_goal_skeleton(bool replay_protection = true);

enum class Verdict { Verified, Falsified, Inconclusive };
std::string verdict_name(Verdict v);

struct VerifyOptions {
  SearchBounds bounds;
  bool bridge = true;
  std::size_t max_rounds = 4;
  /// Runs the loop at strand bounds first_strands, first_strands + step, ...
  /// up to bounds.max_strands and stops at the first definite verdict.
  bool deepen = true;
  std::size_t first_strands = 8;
  std::size_t step = 4;
};

struct EvidenceStep {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  /// Shape of the parent this step refines, and the refinement label.
  std::optional<std::size_t> parent_shape;
  std::string label;
  std::size_t round = 0;
  Skeleton skeleton;
  AnalysisResult result;
  std::optional<ShapeAnalysisSentence> sentence;
  /// Per shape: "bridged", "eliminated", "fixpoint", "counterexample" or "round-limit".
  std::vector<std::string> shape_outcomes;
  std::vector<BridgeResult> bridges;
};

struct VerifyResult {
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  std::vector<EvidenceStep> steps;
  std::optional<Linearization> counterexample;
  /// Incomplete flags seen anywhere in the chain.
  std::size_t incomplete_steps = 0;
  /// Strand bound of the reported chain, and the verdicts of earlier passes.
  std::size_t max_strands = 0;
  std::vector<std::pair<std::size_t, Verdict>> passes;
};

VerifyResult verify_goal(const Skeleton& goal, const VerifyOptions& opts = {});

}  // namespace sst
