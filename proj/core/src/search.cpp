// Enrich-by-need refinement in the style of authentication tests: pick the
// critical subterm of an unrealized reception, compute its escape set, and
// branch over the regular behavior that could have released it.
#include <algorithm>
#include <functional>
#include <unordered_set>

#include "strandstate/skeleton.hpp"

namespace sst {

namespace {

struct Position {
  Term term;
  std::vector<Term> enclosing;  // encryptions around the position, outermost first
};

void carried_positions(const Term& t, std::vector<Term>& encl, std::vector<Position>& out) {
  out.push_back({t, encl});
  if (t.kind() == Kind::Pair) {
    carried_positions(t.arg(0), encl, out);
    carried_positions(t.arg(1), encl, out);
  } else if (t.kind() == Kind::Enc) {
    encl.push_back(t);
    carried_positions(t.arg(0), encl, out);
    encl.pop_back();
  }
}

std::vector<Position> carried_positions(const Term& t) {
  std::vector<Term> encl;
  std::vector<Position> out;
  carried_positions(t, encl, out);
  return out;
}

bool in_escape(const Term& e, const std::vector<Term>& escape, const Subst& s) {
  Term se = s.apply(e);
  return std::any_of(escape.begin(), escape.end(), [&](const Term& x) { return s.apply(x) == se; });
}

// Substitutions extending `s` under which every carried occurrence of c in t
// lies inside a member of the escape set.
void protect(const Term& t, const Term& c, const std::vector<Term>& escape, const Subst& s, std::vector<Subst>& out) {
  Term st = s.apply(t);
  Term sc = s.apply(c);
  if (!carried_by(sc, st)) {
    out.push_back(s);
    return;
  }
  if (st == sc) return;
  if (t.kind() == Kind::Pair) {
    std::vector<Subst> left;
    protect(t.arg(0), c, escape, s, left);
    for (const auto& l : left) protect(t.arg(1), c, escape, l, out);
    return;
  }
  if (t.kind() == Kind::Enc) {
    for (const auto& e : escape)
      if (auto u = unify(t, e, s)) out.push_back(*u.subst);
    protect(t.arg(0), c, escape, s, out);
  }
}

std::vector<Subst> protect_all(const std::vector<Term>& msgs, const Term& c, const std::vector<Term>& escape,
                               const Subst& s) {
  std::vector<Subst> cur{s};
  for (const auto& m : msgs) {
    std::vector<Subst> next;
    for (const auto& x : cur) protect(m, c, escape, x, next);
    cur = std::move(next);
    if (cur.empty()) break;
  }
  std::vector<Subst> out;
  for (auto& x : cur)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(std::move(x));
  return out;
}

bool hopeless(const Term& t, const TermSet& non) {
  if (non.contains(t)) return true;
  if (t.kind() == Kind::Hash) return hopeless(t.arg(0), non);
  return false;
}

class Refiner {
 public:
  Refiner(const Skeleton& sk, Node n, const SearchBounds& bounds)
      : sk_(sk), n_(n), bounds_(bounds), prec_(sk.precedence()), baseline_(canonical_form(sk)) {
    forbidden_ = sk.non;
    for (const auto& [u, nd] : sk.uniq) forbidden_.insert(u);
    for (const Node& m : sk.nodes())
      if (sk.event(m).is_send() && prec_.before(m, n)) prior_.push_back(sk.event(m).msg);
    deducer_.emplace(prior_, forbidden_);
  }

  RefineResult run() {
    std::vector<Term> tests;
    auto c = critical(sk_.event(n_).msg);
    while (c) {
      tests.push_back(*c);
      const Term& t = *c;
      if (t.kind() == Kind::Hash || (t.kind() == Kind::Enc && deducer_->derivable(t.arg(1)))) c = critical(t.arg(0));
      else c = std::nullopt;
    }
    for (const auto& t : tests) explain(t);
    return std::move(result_);
  }

 private:
  const Skeleton& sk_;
  Node n_;
  const SearchBounds& bounds_;
  Precedence prec_;
  std::string baseline_;
  TermSet forbidden_;
  std::vector<Term> prior_;
  std::optional<Deducer> deducer_;
  RefineResult result_;
  std::set<std::string> seen_;
  // Set while probing branches that exceed the bounds: a consistent child
  // marks the result bounded instead of being kept.
  bool dry_ = false;
  const char* kind_ = "";

  std::optional<Term> critical(const Term& t) {
    if (deducer_->derivable(t)) return std::nullopt;
    if (t.kind() == Kind::Pair) {
      if (!deducer_->derivable(t.arg(0))) return critical(t.arg(0));
      return critical(t.arg(1));
    }
    return t;
  }

  std::vector<Term> escape_set(const Term& c) {
    std::vector<Term> out;
    for (const auto& e : deducer_->analyzed())
      if (e.kind() == Kind::Enc && !deducer_->derivable(Term::inv(e.arg(1))) && carried_by(c, e)) out.push_back(e);
    return out;
  }

  void emit(Skeleton child, const Subst& sigma, std::optional<std::pair<Node, Node>> edge) {
    const char* kind = kind_;
    if (!child.apply(sigma)) return;
    if (edge) child.order.insert(*edge);
    auto norm = normalize(std::move(child));
    if (!norm) return;
    *norm = prune(std::move(*norm));
    std::string key = canonical_form(*norm);
    if (key == baseline_) return;
    if (dry_) {
      result_.bounded = true;
      return;
    }
    if (!seen_.insert(key).second) return;
    result_.children.push_back(std::move(*norm));
    result_.kinds.push_back(kind);
  }

  // Transmission event j on strand s of `sk` releases c outside the escape
  // set, with every earlier event keeping c protected.
  void transforming(const Skeleton& sk, std::size_t s, std::size_t j, const Term& c, const std::vector<Term>& escape) {
    const Trace& trace = sk.strands[s].trace;
    std::vector<Term> earlier;
    for (std::size_t i = 0; i < j; ++i) earlier.push_back(trace[i].msg);
    for (const auto& pos : carried_positions(trace[j].msg)) {
      auto u = unify(c, pos.term);
      if (!u) continue;
      const Subst& sigma = *u.subst;
      if (std::any_of(pos.enclosing.begin(), pos.enclosing.end(),
                      [&](const Term& e) { return in_escape(e, escape, sigma); }))
        continue;
      for (const auto& s2 : protect_all(earlier, c, escape, sigma)) emit(sk, s2, std::make_pair(Node{s, j}, n_));
    }
  }

  void explain(const Term& c) {
    const auto escape = escape_set(c);

    // Contraction: c collapses onto something the adversary already has.
    kind_ = "contraction";
    for (const auto& y : deducer_->analyzed()) {
      if (y == c) continue;
      if (auto u = unify(c, y)) emit(sk_, *u.subst, std::nullopt);
    }

    // Displacement: an existing transmission not yet ordered before n.
    kind_ = "displacement";
    for (const Node& m : sk_.nodes()) {
      if (!sk_.event(m).is_send() || m.strand == n_.strand || prec_.before(m, n_) || prec_.before(n_, m)) continue;
      transforming(sk_, m.strand, m.index, c, escape);
    }

    // Raising the height of an existing strand.
    kind_ = "raise";
    for (std::size_t s = 0; s < sk_.strands.size(); ++s) {
      if (s == n_.strand) continue;
      const Role& r = *sk_.protocol().find(sk_.strands[s].role);
      if (r.kind != RoleKind::Regular) continue;
      for (std::size_t j = sk_.strands[s].height; j < r.trace.size(); ++j) {
        if (!r.trace[j].is_send()) continue;
        Skeleton raised = sk_;
        raised.raise(s, j + 1);
        dry_ = j + 1 > bounds_.max_height;
        transforming(raised, s, j, c, escape);
        dry_ = false;
      }
    }

    // Augmentation: a new instance of a regular role.
    kind_ = "augmentation";
    for (const auto& r : sk_.protocol().roles()) {
      if (r.kind != RoleKind::Regular) continue;
      for (std::size_t j = 0; j < r.trace.size(); ++j) {
        if (!r.trace[j].is_send()) continue;
        Skeleton grown = sk_;
        std::size_t s = grown.add_strand(r.name, j + 1);
        dry_ = j + 1 > bounds_.max_height || sk_.regular_count() + 1 > bounds_.max_strands;
        transforming(grown, s, j, c, escape);
        dry_ = false;
      }
    }

    // Key leaks: the adversary learns a decryption key of an escape member,
    // or the key of c itself.
    std::vector<Term> leaks;
    for (const auto& e : escape) leaks.push_back(Term::inv(e.arg(1)));
    if (c.kind() == Kind::Enc && !deducer_->derivable(c.arg(1))) leaks.push_back(c.arg(1));
    kind_ = "leak";
    const Role* listener = nullptr;
    for (const auto& r : sk_.protocol().roles())
      if (r.kind == RoleKind::Listener) listener = &r;
    if (!listener || listener->trace.size() != 2) return;
    for (const auto& k : leaks) {
      if (hopeless(k, sk_.non)) continue;
      std::optional<std::size_t> existing;
      for (std::size_t s = 0; s < sk_.strands.size(); ++s)
        if (sk_.strands[s].role == listener->name && sk_.strands[s].height == 2 && sk_.strands[s].trace[0].msg == k)
          existing = s;
      if (existing) {
        if (!prec_.before(Node{*existing, 1}, n_)) emit(sk_, {}, std::make_pair(Node{*existing, 1}, n_));
        continue;
      }
      Skeleton grown = sk_;
      std::size_t s = grown.add_strand(listener->name, 2, {{listener->params[0].name(), k}});
      emit(grown, {}, std::make_pair(Node{s, 1}, n_));
    }
  }
};

}  // namespace

RefineResult refine(const Skeleton& sk, Node n, const SearchBounds& bounds) { return Refiner(sk, n, bounds).run(); }

namespace {

// Where a shape merely renamed an input variable, give it its name back.
Skeleton restore_input_names(Skeleton sk, const std::map<std::string, Sort>& input_sorts) {
  auto used = sk.variables();
  Subst rename;
  std::set<std::string> targets;
  for (const auto& [name, value] : sk.input_binding.bindings()) {
    auto in = input_sorts.find(name);
    if (!value.is_var() || value.name() == name || used.contains(name) || in == input_sorts.end() ||
        in->second != value.sort() || !targets.insert(value.name()).second)
      continue;
    rename.set(value.name(), Term::var(name, in->second));
  }
  sk.apply(rename);
  return sk;
}

}  // namespace

AnalysisResult search(const Skeleton& sk, const SearchBounds& bounds) {
  AnalysisResult res;
  res.input = sk;
  std::set<std::string> visited;
  std::set<std::string> shape_keys;
  bool stopped = false;

  std::function<void(const Skeleton&, std::optional<std::size_t>, std::size_t, const std::string&)> explore =
      [&](const Skeleton& cur, std::optional<std::size_t> parent, std::size_t depth, const std::string& via) {
        if (stopped) return;
        TreeEntry entry;
        entry.id = res.tree.size();
        entry.parent = parent;
        entry.depth = depth;
        entry.via = via;
        entry.strands = cur.strands.size();
        res.stats.explored++;
        res.stats.max_depth = std::max(res.stats.max_depth, depth);
        if (res.stats.explored > bounds.max_tree) {
          stopped = true;
          res.incomplete = true;
          entry.outcome = "bound";
          res.tree.push_back(entry);
          return;
        }
        std::string key = canonical_form(cur);
        if (!visited.insert(key).second) {
          entry.outcome = "duplicate";
          res.stats.duplicates++;
          res.tree.push_back(entry);
          return;
        }
        auto pending = unrealized_nodes(cur);
        if (pending.empty()) {
          if (shape_keys.insert(key).second) {
            res.shapes.push_back(cur);
            res.stats.shapes++;
            entry.outcome = "shape";
          } else {
            entry.outcome = "duplicate";
            res.stats.duplicates++;
          }
          res.tree.push_back(entry);
          return;
        }
        if (depth >= bounds.max_depth) {
          entry.target = pending.front();
          entry.outcome = "bound";
          res.stats.bounded++;
          res.incomplete = true;
          res.tree.push_back(entry);
          return;
        }
        // Any unrealized node may be tested; take the one with the fewest
        // children, preferring refinements the bounds did not cut.
        RefineResult r;
        bool have = false;
        for (const Node& n : pending) {
          RefineResult cand = refine(cur, n, bounds);
          auto rank = [](const RefineResult& x) { return std::make_pair(x.children.size(), x.bounded); };
          if (!have || rank(cand) < rank(r)) {
            r = std::move(cand);
            entry.target = n;
            have = true;
          }
          if (r.children.empty() && !r.bounded) break;
        }
        if (r.bounded) {
          res.incomplete = true;
          res.stats.bounded++;
        }
        entry.children = r.children.size();
        entry.outcome = r.children.empty() ? (r.bounded ? "bound" : "dead") : "refined";
        if (r.children.empty() && !r.bounded) res.stats.dead_leaves++;
        std::size_t id = entry.id;
        res.tree.push_back(entry);
        for (std::size_t i = 0; i < r.children.size(); ++i) explore(r.children[i], id, depth + 1, r.kinds[i]);
      };

  const auto input_sorts = sk.variables();
  Skeleton start = sk;
  start.fixed = start.strands.size();
  for (const auto& [name, sort] : start.variables())
    if (!start.input_binding.lookup(name)) start.input_binding.set(name, Term::var(name, sort));
  if (auto norm = normalize(std::move(start))) {
    explore(*norm, std::nullopt, 0, "");
  } else {
    TreeEntry entry;
    entry.outcome = "dead";
    res.tree.push_back(entry);
    res.stats.dead_leaves++;
  }
  res.shapes = minimal_shapes(res.shapes);
  for (auto& shape : res.shapes) shape = restore_input_names(std::move(shape), input_sorts);
  res.stats.shapes = res.shapes.size();
  res.dead = res.shapes.empty() && !res.incomplete;
  return res;
}

}  // namespace sst
