#include "strandstate/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace sst {

MachineState::MachineState(Term value) : value_(std::move(value)) {
  if (!value_.valid() || value_.sort() != Sort::M) throw SortError("machine state must have sort state");
  for (Term cur = value_; cur.kind() != Kind::Boot; cur = cur.arg(1))
    if (cur.kind() != Kind::Extend) throw SortError("machine state must be built from boot and extend");
}

std::size_t MachineState::depth() const {
  std::size_t d = 0;
  for (Term cur = value_; cur.kind() == Kind::Extend; cur = cur.arg(1)) ++d;
  return d;
}

bool step(const MachineState& m0, const MachineState& m1) {
  if (m1.is_boot()) return true;
  if (m0 == m1) return true;
  return m1.term().kind() == Kind::Extend && m1.term().arg(1) == m0.term();
}

Term pcr_boot_value() {
  static const Term s0 = Term::atom(Sort::S, "s0");
  return s0;
}

Term pcr(const MachineState& m) {
  std::vector<Term> args;
  for (Term cur = m.term(); cur.kind() == Kind::Extend; cur = cur.arg(1)) args.push_back(cur.arg(0));
  Term acc = pcr_boot_value();
  for (auto it = args.rbegin(); it != args.rend(); ++it) acc = Term::hash(Term::pair(*it, acc));
  return acc;
}

std::optional<MachineState> pcr_inverse(const Term& value) {
  std::vector<Term> args;
  Term cur = value;
  while (cur != pcr_boot_value()) {
    if (cur.kind() != Kind::Hash || cur.arg(0).kind() != Kind::Pair) return std::nullopt;
    args.push_back(cur.arg(0).arg(0));
    cur = cur.arg(0).arg(1);
  }
  MachineState m;
  for (auto it = args.rbegin(); it != args.rend(); ++it) m = m.extended(*it);
  return m;
}

bool has(const MachineState& m, const Term& t) {
  for (Term cur = m.term(); cur.kind() == Kind::Extend; cur = cur.arg(1))
    if (cur.arg(0) == t) return true;
  return false;
}

Path::Path(std::vector<MachineState> states) : states_(std::move(states)) {
  if (states_.empty()) throw std::invalid_argument("path must be nonempty");
  if (!states_[0].is_boot()) throw std::invalid_argument("path must start at boot");
  for (std::size_t i = 0; i + 1 < states_.size(); ++i)
    if (!step(states_[i], states_[i + 1])) throw std::invalid_argument("path contains a non-transition");
}

PrefixBootExtendVerdict check_prefix_boot_extend(const Path& p, std::size_t i, std::size_t k, const Term& t) {
  if (!(i <= k && k < p.size())) throw std::out_of_range("prefix boot extend: need i <= k < length");
  using K = PrefixBootExtendVerdict::Kind;
  // Boot is a subterm of every state, so the subterm disjunct is often
  // trivially true; the extend witness is the informative one.
  for (std::size_t j = i; j < k; ++j)
    if (p[j + 1] == p[j].extended(t)) return {K::ExtendAt, j};
  if (subterm(p[i].term(), p[k].term())) return {K::SubtermHolds, 0};
  return {K::Violation, 0};
}

PathEnumerator::PathEnumerator(std::size_t max_len, std::vector<Term> alphabet)
    : max_len_(max_len), alphabet_(std::move(alphabet)) {}

std::vector<MachineState> PathEnumerator::successors(const MachineState& m) const {
  std::vector<MachineState> out;
  auto push = [&](const MachineState& s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  push(MachineState::boot());
  for (const auto& t : alphabet_) push(m.extended(t));
  push(m);
  return out;
}

std::optional<Path> PathEnumerator::next() {
  if (max_len_ == 0) return std::nullopt;
  if (!started_) {
    started_ = true;
    current_ = {MachineState::boot()};
    pending_.push_back(current_.size() < max_len_ ? successors(current_.back()) : std::vector<MachineState>{});
    return Path(current_);
  }
  while (!pending_.empty()) {
    auto& options = pending_.back();
    if (options.empty()) {
      pending_.pop_back();
      current_.pop_back();
      continue;
    }
    MachineState s = options.front();
    options.erase(options.begin());
    current_.push_back(s);
    pending_.push_back(current_.size() < max_len_ ? successors(s) : std::vector<MachineState>{});
    return Path(current_);
  }
  return std::nullopt;
}

std::vector<MachineState> states_up_to_depth(std::size_t max_depth, const std::vector<Term>& alphabet) {
  std::vector<MachineState> out{MachineState::boot()};
  std::size_t layer_begin = 0;
  for (std::size_t d = 0; d < max_depth; ++d) {
    std::size_t layer_end = out.size();
    for (std::size_t i = layer_begin; i < layer_end; ++i)
      for (const auto& t : alphabet) out.push_back(out[i].extended(t));
    layer_begin = layer_end;
  }
  return out;
}

LemmaOneSummary run_prefix_boot_extend_oracle(std::size_t max_len, const std::vector<Term>& alphabet) {
  LemmaOneSummary sum;
  PathEnumerator paths(max_len, alphabet);
  using K = PrefixBootExtendVerdict::Kind;
  while (auto p = paths.next()) {
    ++sum.paths;
    for (std::size_t k = 0; k < p->size(); ++k)
      for (const auto& t : alphabet) {
        if (!has((*p)[k], t)) continue;
        for (std::size_t i = 0; i <= k; ++i) {
          ++sum.instances;
          switch (check_prefix_boot_extend(*p, i, k, t).kind) {
            case K::SubtermHolds: ++sum.subterm_holds; break;
            case K::ExtendAt: ++sum.extend_at; break;
            case K::Violation: ++sum.violations; break;
          }
        }
      }
  }
  return sum;
}

}  // namespace sst
