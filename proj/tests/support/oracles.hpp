// Brute-force reference implementations and term generators shared by the
// unit and acceptance tests. Nothing here calls the code under test except
// the Term constructors.
#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strandstate/skeleton.hpp"
#include "strandstate/state.hpp"
#include "strandstate/strands.hpp"
#include "strandstate/term.hpp"

namespace oracle {

using sst::Sort;
using sst::Term;

inline std::string data_path(const std::string& name) { return std::string(STRANDSTATE_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Term d(int i) { return Term::atom(Sort::D, "d" + std::to_string(i)); }
inline Term e(int i) { return Term::atom(Sort::E, "e" + std::to_string(i)); }
inline Term a(int i) { return Term::atom(Sort::A, "a" + std::to_string(i)); }
inline Term b(int i) { return Term::atom(Sort::A, "a" + std::to_string(i), true); }
inline Term s(int i) { return Term::atom(Sort::S, "s" + std::to_string(i)); }
inline Term tg(int i) { return Term::tag("tg" + std::to_string(i)); }

inline bool is_key(const Term& t) { return t.sort() == Sort::A || t.sort() == Sort::S; }

/// Every term of nesting depth <= depth built from `leaves` with pair, hash,
/// and enc under the key-sorted leaves.
inline std::vector<Term> all_terms(std::size_t depth, const std::vector<Term>& leaves) {
  std::vector<Term> keys;
  for (const auto& t : leaves)
    if (is_key(t)) keys.push_back(t);
  std::set<Term> seen(leaves.begin(), leaves.end());
  std::vector<Term> out(leaves.begin(), leaves.end());
  std::vector<Term> frontier = out;
  for (std::size_t level = 1; level <= depth; ++level) {
    std::vector<Term> made;
    auto add = [&](const Term& t) {
      if (seen.insert(t).second) made.push_back(t);
    };
    for (const auto& x : out) {
      add(Term::hash(x));
      for (const auto& k : keys) add(Term::enc(x, k));
      for (const auto& y : out) add(Term::pair(x, y));
    }
    out.insert(out.end(), made.begin(), made.end());
  }
  return out;
}

/// Random sort-correct message of depth <= depth; inverse keys and tags
/// appear so canonical forms get exercised.
inline Term random_term(std::mt19937_64& rng, std::size_t depth, const std::vector<Term>& leaves) {
  std::uniform_int_distribution<int> pick(0, 5);
  int c = depth == 0 ? 0 : pick(rng);
  auto leaf = [&] { return leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)]; };
  auto key = [&]() -> Term {
    for (int tries = 0; tries < 64; ++tries) {
      Term k = leaf();
      if (is_key(k)) return std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? Term::inv(k) : k;
    }
    return s(0);
  };
  switch (c) {
    case 0:
    case 1: return leaf();
    case 2: return Term::pair(random_term(rng, depth - 1, leaves), random_term(rng, depth - 1, leaves));
    case 3: return Term::enc(random_term(rng, depth - 1, leaves), key());
    case 4: return Term::hash(random_term(rng, depth - 1, leaves));
    default: return Term::pair(random_term(rng, depth - 1, leaves), leaf());
  }
}

/// Every position of t, keys and hash bodies included.
inline void positions(const Term& t, std::vector<Term>& out) {
  out.push_back(t);
  if (t.kind() == sst::Kind::Atom || t.kind() == sst::Kind::Var || t.kind() == sst::Kind::Tag ||
      t.kind() == sst::Kind::Boot)
    return;
  for (std::size_t i = 0; i < t.arity(); ++i) positions(t.arg(i), out);
}

/// Carried positions by the four clauses, written directly.
inline bool carried_oracle(const Term& t0, const Term& t1) {
  if (t0 == t1) return true;
  if (t1.kind() == sst::Kind::Pair) return carried_oracle(t0, t1.arg(0)) || carried_oracle(t0, t1.arg(1));
  if (t1.kind() == sst::Kind::Enc) return carried_oracle(t0, t1.arg(0));
  return false;
}

/// Replaces variables by name; no canonicalization beyond the constructors.
inline Term ground(const Term& t, const std::map<std::string, Term>& values) {
  switch (t.kind()) {
    case sst::Kind::Var: {
      auto it = values.find(t.name());
      return it == values.end() ? t : it->second;
    }
    case sst::Kind::Pair: return Term::pair(ground(t.arg(0), values), ground(t.arg(1), values));
    case sst::Kind::Enc: return Term::enc(ground(t.arg(0), values), ground(t.arg(1), values));
    case sst::Kind::Hash: return Term::hash(ground(t.arg(0), values));
    case sst::Kind::Inv: return Term::inv(ground(t.arg(0), values));
    case sst::Kind::Extend: return Term::extend(ground(t.arg(0), values), ground(t.arg(1), values));
    default: return t;
  }
}

/// Every assignment of `vars` into `pool` respecting sorts; stops when visit
/// returns true.
inline bool any_assignment(const std::vector<Term>& vars, const std::vector<Term>& pool,
                           const std::function<bool(const std::map<std::string, Term>&)>& visit) {
  std::map<std::string, Term> cur;
  std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
    if (i == vars.size()) return visit(cur);
    for (const auto& v : pool) {
      if (!sst::sort_leq(v.sort(), vars[i].sort())) continue;
      cur[vars[i].name()] = v;
      if (go(i + 1)) return true;
    }
    return false;
  };
  return go(0);
}

/// Reachability over communication plus succession by depth-first search.
inline bool reaches(const sst::Bundle& b, sst::Node from, sst::Node to) {
  std::set<sst::Node> seen;
  std::vector<sst::Node> stack;
  auto push_succ = [&](sst::Node n) {
    if (n.index + 1 < b.space[n.strand].size()) stack.push_back({n.strand, n.index + 1});
    for (const auto& [x, y] : b.comm)
      if (x == n) stack.push_back(y);
  };
  push_succ(from);
  while (!stack.empty()) {
    sst::Node n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n == to) return true;
    push_succ(n);
  }
  return false;
}

/// Random well-formed bundle: nodes are laid down in a global order, each
/// reception copying an earlier transmission.
inline sst::Bundle random_bundle(std::mt19937_64& rng, std::size_t max_nodes, std::size_t max_strands) {
  sst::Bundle b;
  std::size_t strands = std::uniform_int_distribution<std::size_t>(1, max_strands)(rng);
  b.space.resize(strands);
  std::size_t nodes = std::uniform_int_distribution<std::size_t>(1, max_nodes)(rng);
  std::vector<sst::Node> sends;
  for (std::size_t i = 0; i < nodes; ++i) {
    std::size_t st = std::uniform_int_distribution<std::size_t>(0, strands - 1)(rng);
    sst::Node n{st, b.space[st].size()};
    bool recv = !sends.empty() && std::uniform_int_distribution<int>(0, 1)(rng);
    if (recv) {
      sst::Node from = sends[std::uniform_int_distribution<std::size_t>(0, sends.size() - 1)(rng)];
      if (from.strand == st) {
        b.space[st].push_back(sst::Event::send(d(static_cast<int>(i))));
        sends.push_back(n);
        continue;
      }
      b.space[st].push_back(sst::Event::recv(b.event(from).msg));
      b.comm.emplace(from, n);
    } else {
      b.space[st].push_back(sst::Event::send(d(static_cast<int>(i))));
      sends.push_back(n);
    }
  }
  sst::StrandSpace kept;
  std::vector<std::size_t> remap(strands, 0);
  for (std::size_t st = 0; st < strands; ++st) {
    remap[st] = kept.size();
    if (!b.space[st].empty()) kept.push_back(b.space[st]);
  }
  std::set<std::pair<sst::Node, sst::Node>> comm;
  for (const auto& [x, y] : b.comm) comm.emplace(sst::Node{remap[x.strand], x.index}, sst::Node{remap[y.strand], y.index});
  b.space = std::move(kept);
  b.comm = std::move(comm);
  return b;
}

/// Successor-recursion count of paths of length <= max_len: boot, each
/// extend, and the self loop, with duplicate successors merged.
inline std::size_t count_paths(std::size_t max_len, const std::vector<Term>& alphabet) {
  std::function<std::size_t(const Term&, std::size_t)> from = [&](const Term& m, std::size_t len) -> std::size_t {
    std::size_t total = 1;
    if (len == max_len) return total;
    std::set<Term> next{Term::boot(), m};
    for (const auto& t : alphabet) next.insert(Term::extend(t, m));
    for (const auto& n : next) total += from(n, len + 1);
    return total;
  };
  return from(Term::boot(), 1);
}

}  // namespace oracle
