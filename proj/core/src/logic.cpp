#include "strandstate/logic.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace sst {

Formula Formula::equal(Term a, Term b) {
  Formula f;
  f.kind = FormulaKind::Equal;
  f.lhs = std::move(a);
  f.rhs = std::move(b);
  return f;
}

Formula Formula::htin(std::string z, std::size_t h, std::string role, std::map<std::string, Term> args) {
  Formula f;
  f.kind = FormulaKind::Htin;
  f.strand = std::move(z);
  f.height = h;
  f.role = std::move(role);
  f.args = std::move(args);
  return f;
}

Formula Formula::prec(NodeRef a, NodeRef b) {
  Formula f;
  f.kind = FormulaKind::Prec;
  f.n0 = std::move(a);
  f.n1 = std::move(b);
  return f;
}

Formula Formula::non(Term t) {
  Formula f;
  f.kind = FormulaKind::Non;
  f.lhs = std::move(t);
  return f;
}

Formula Formula::uniq(Term t, NodeRef n) {
  Formula f;
  f.kind = FormulaKind::Uniq;
  f.lhs = std::move(t);
  f.n0 = std::move(n);
  return f;
}

Formula Formula::sends(NodeRef n, Term t) {
  Formula f;
  f.kind = FormulaKind::Sends;
  f.lhs = std::move(t);
  f.n0 = std::move(n);
  return f;
}

Formula Formula::conj(std::vector<Formula> parts) {
  Formula f;
  f.kind = FormulaKind::And;
  f.parts = std::move(parts);
  return f;
}

Formula Formula::exists(std::vector<QVar> vars, Formula body) {
  Formula f;
  f.kind = FormulaKind::Exists;
  f.vars = std::move(vars);
  f.parts.push_back(std::move(body));
  return f;
}

Formula Formula::implies(Formula hyp, std::vector<Formula> disjuncts) {
  Formula f;
  f.kind = FormulaKind::Implies;
  f.parts.push_back(std::move(hyp));
  for (auto& d : disjuncts) f.parts.push_back(std::move(d));
  return f;
}

Formula Formula::falsum() {
  Formula f;
  f.kind = FormulaKind::False;
  return f;
}

namespace {

void add_term_vars(const Term& t, std::vector<QVar>& out, std::set<std::string>& seen,
                   const std::set<std::string>& bound) {
  if (!t.valid()) return;
  std::map<std::string, Sort> vs;
  collect_vars(t, vs);
  for (const auto& [name, sort] : vs)
    if (!bound.contains(name) && seen.insert(name).second) out.push_back({name, sort});
}

void add_strand_var(const std::string& z, std::vector<QVar>& out, std::set<std::string>& seen,
                    const std::set<std::string>& bound) {
  if (!bound.contains(z) && seen.insert("#" + z).second) out.push_back({z, std::nullopt});
}

void free_vars_into(const Formula& f, std::vector<QVar>& out, std::set<std::string>& seen,
                    std::set<std::string> bound) {
  switch (f.kind) {
    case FormulaKind::Equal:
      add_term_vars(f.lhs, out, seen, bound);
      add_term_vars(f.rhs, out, seen, bound);
      break;
    case FormulaKind::Htin:
      add_strand_var(f.strand, out, seen, bound);
      for (const auto& [name, t] : f.args) add_term_vars(t, out, seen, bound);
      break;
    case FormulaKind::Prec:
      add_strand_var(f.n0.strand, out, seen, bound);
      add_strand_var(f.n1.strand, out, seen, bound);
      break;
    case FormulaKind::Non:
      add_term_vars(f.lhs, out, seen, bound);
      break;
    case FormulaKind::Uniq:
    case FormulaKind::Sends:
      add_term_vars(f.lhs, out, seen, bound);
      add_strand_var(f.n0.strand, out, seen, bound);
      break;
    case FormulaKind::And:
      for (const auto& p : f.parts) free_vars_into(p, out, seen, bound);
      break;
    case FormulaKind::Exists:
      for (const auto& v : f.vars) bound.insert(v.name);
      free_vars_into(f.parts[0], out, seen, bound);
      break;
    case FormulaKind::Implies: {
      // The hypothesis' variables are closed universally by the implication.
      std::vector<QVar> hyp;
      std::set<std::string> hseen;
      free_vars_into(f.parts[0], hyp, hseen, bound);
      for (const auto& v : hyp) bound.insert(v.name);
      for (std::size_t i = 1; i < f.parts.size(); ++i) free_vars_into(f.parts[i], out, seen, bound);
      break;
    }
    case FormulaKind::False:
      break;
  }
}

bool is_bound(const Assignment& a, const QVar& v) {
  return v.sort ? a.msg.lookup(v.name).has_value() : a.strands.contains(v.name);
}

void collect_subterms(const Term& t, TermSet& out) {
  if (!out.insert(t).second) return;
  for (std::size_t i = 0; i < t.arity(); ++i) collect_subterms(t.arg(i), out);
}

void flatten(const Formula& f, std::vector<const Formula*>& out) {
  if (f.kind == FormulaKind::And) {
    for (const auto& p : f.parts) flatten(p, out);
  } else {
    out.push_back(&f);
  }
}

class Solver {
 public:
  Solver(const Bundle& b, const Protocol& p) : b_(b), p_(p), prec_(b.space, b.comm) {
    for (const auto& c : b.space)
      for (const auto& e : c) collect_subterms(e.msg, subterms_);
  }

  bool holds(const Assignment& a, const Formula& f) {
    switch (f.kind) {
      case FormulaKind::Equal:
        return ground(a, f.lhs) == ground(a, f.rhs);
      case FormulaKind::Htin: {
        std::size_t s = strand(a, f.strand);
        Subst scratch = a.msg;
        return htin_match(f, s, scratch);
      }
      case FormulaKind::Prec:
        return prec_.before(node(a, f.n0), node(a, f.n1));
      case FormulaKind::Non:
        return non_originating(b_.space, ground(a, f.lhs));
      case FormulaKind::Uniq:
        return uniquely_originates(b_.space, ground(a, f.lhs), node(a, f.n0));
      case FormulaKind::Sends: {
        Node n = node(a, f.n0);
        if (!b_.has_node(n)) return false;
        const Event& e = b_.event(n);
        return e.is_send() && e.msg == ground(a, f.lhs);
      }
      case FormulaKind::And:
        return std::all_of(f.parts.begin(), f.parts.end(), [&](const Formula& p) { return holds(a, p); });
      case FormulaKind::Exists:
        return !solve(a, f.vars, f.parts[0], 1).empty();
      case FormulaKind::Implies: {
        std::vector<QVar> hv;
        std::set<std::string> seen;
        free_vars_into(f.parts[0], hv, seen, {});
        std::vector<QVar> open;
        for (const auto& v : hv)
          if (!is_bound(a, v)) open.push_back(v);
        for (const auto& ext : solve(a, open, f.parts[0], SIZE_MAX)) {
          bool some = false;
          for (std::size_t i = 1; i < f.parts.size() && !some; ++i) some = holds(ext, f.parts[i]);
          if (!some) return false;
        }
        return true;
      }
      case FormulaKind::False:
        return false;
    }
    return false;
  }

  std::vector<Assignment> solve(const Assignment& a, const std::vector<QVar>& vars, const Formula& body,
                                std::size_t limit) {
    // Quantified variables shadow outer bindings.
    Assignment start = a;
    Subst msg;
    for (const auto& [name, value] : a.msg.bindings())
      if (std::none_of(vars.begin(), vars.end(), [&](const QVar& v) { return v.sort && v.name == name; }))
        msg.set(name, value);
    start.msg = msg;
    for (const auto& v : vars)
      if (!v.sort) start.strands.erase(v.name);
    std::vector<const Formula*> atoms;
    flatten(body, atoms);
    std::vector<Assignment> out;
    search(start, atoms, vars, limit, out);
    return out;
  }

 private:
  const Bundle& b_;
  const Protocol& p_;
  Precedence prec_;
  TermSet subterms_;

  Term ground(const Assignment& a, const Term& t) const {
    Term g = a.msg.apply(t);
    if (!g.is_ground()) throw UnboundVariable("unbound variable in " + t.str());
    return g;
  }

  std::size_t strand(const Assignment& a, const std::string& z) const {
    auto it = a.strands.find(z);
    if (it == a.strands.end()) throw UnboundVariable("unbound strand variable " + z);
    return it->second;
  }

  Node node(const Assignment& a, const NodeRef& r) const { return Node{strand(a, r.strand), r.index}; }

  // The bundle strand runs a prefix of the role instance, at least f.height
  // long. Binds free message variables of the pattern into `sigma`.
  bool htin_match(const Formula& f, std::size_t s, Subst& sigma) const {
    if (s >= b_.space.size() || b_.roles[s].role != f.role) return false;
    const Role* r = p_.find(f.role);
    if (!r) return false;
    const Trace& trace = b_.space[s];
    if (trace.size() < f.height || trace.size() > r->trace.size()) return false;
    std::map<std::string, Term> args = f.args;
    for (const auto& param : r->params)
      if (!args.contains(param.name())) args.emplace(param.name(), Term::var("%" + param.name(), param.sort()));
    Subst cur = sigma;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (trace[i].dir != r->trace[i].dir) return false;
      auto m = match(instantiate(r->trace[i].msg, args), trace[i].msg, cur);
      if (!m) return false;
      cur = std::move(*m.subst);
    }
    Subst kept;
    for (const auto& [name, value] : cur.bindings())
      if (name.empty() || name[0] != '%') kept.set(name, value);
    sigma = std::move(kept);
    return true;
  }

  bool ready(const Assignment& a, const Formula& f) const {
    std::vector<QVar> fv;
    std::set<std::string> seen;
    free_vars_into(f, fv, seen, {});
    return std::all_of(fv.begin(), fv.end(), [&](const QVar& v) { return is_bound(a, v); });
  }

  std::vector<Term> domain(Sort sort) const {
    std::vector<Term> out;
    for (const auto& t : subterms_)
      if (sort_leq(t.sort(), sort)) out.push_back(t);
    if (is_atom_sort(sort)) out.push_back(Term::atom(sort, "%fresh-" + std::string(sort_name(sort))));
    return out;
  }

  void search(const Assignment& a, std::vector<const Formula*> atoms, const std::vector<QVar>& vars,
              std::size_t limit, std::vector<Assignment>& out) {
    if (out.size() >= limit) return;
    // Closed atoms first: cheap pruning.
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!ready(a, *atoms[i])) continue;
      if (!holds(a, *atoms[i])) return;
      atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(i));
      --i;
    }
    if (atoms.empty()) {
      out.push_back(a);
      return;
    }
    // Htin atoms generate strand and message bindings.
    for (const Formula* f : atoms) {
      if (f->kind != FormulaKind::Htin) continue;
      std::vector<std::size_t> candidates;
      if (auto it = a.strands.find(f->strand); it != a.strands.end()) candidates.push_back(it->second);
      else
        for (std::size_t s = 0; s < b_.space.size(); ++s) candidates.push_back(s);
      for (std::size_t s : candidates) {
        Subst sigma = a.msg;
        if (!htin_match(*f, s, sigma)) continue;
        Assignment next = a;
        next.strands[f->strand] = s;
        next.msg = sigma;
        std::vector<const Formula*> rest;
        for (const Formula* g : atoms)
          if (g != f) rest.push_back(g);
        search(next, rest, vars, limit, out);
      }
      return;
    }
    // Equal and Sends bind by matching against a known value.
    for (const Formula* f : atoms) {
      std::optional<Subst> sigma;
      if (f->kind == FormulaKind::Equal) {
        Term l = a.msg.apply(f->lhs), r = a.msg.apply(f->rhs);
        if (r.is_ground()) {
          auto m = match(l, r, a.msg);
          if (!m) return;
          sigma = *m.subst;
        } else if (l.is_ground()) {
          auto m = match(r, l, a.msg);
          if (!m) return;
          sigma = *m.subst;
        }
      } else if (f->kind == FormulaKind::Sends && a.strands.contains(f->n0.strand)) {
        Node n = node(a, f->n0);
        if (!b_.has_node(n) || !b_.event(n).is_send()) return;
        auto m = match(a.msg.apply(f->lhs), b_.event(n).msg, a.msg);
        if (!m) return;
        sigma = *m.subst;
      }
      if (!sigma) continue;
      Assignment next = a;
      next.msg = *sigma;
      search(next, atoms, vars, limit, out);
      return;
    }
    // Otherwise enumerate one remaining variable.
    std::vector<QVar> fv;
    std::set<std::string> seen;
    for (const Formula* f : atoms) free_vars_into(*f, fv, seen, {});
    for (const auto& v : fv) {
      if (is_bound(a, v)) continue;
      if (!v.sort) {
        for (std::size_t s = 0; s < b_.space.size(); ++s) {
          Assignment next = a;
          next.strands[v.name] = s;
          search(next, atoms, vars, limit, out);
        }
      } else {
        for (const auto& t : domain(*v.sort)) {
          Assignment next = a;
          next.msg.bind(Term::var(v.name, *v.sort), t);
          search(next, atoms, vars, limit, out);
        }
      }
      return;
    }
    // Only nested quantified formulas remain and they were not ready: they
    // mention variables that nothing above could bind.
    throw UnboundVariable("formula has variables with no binding occurrence");
  }
};

std::vector<std::string> params_in_prefix(const Role& r, std::size_t height) {
  std::map<std::string, Sort> vs;
  for (std::size_t i = 0; i < height && i < r.trace.size(); ++i) collect_vars(r.trace[i].msg, vs);
  std::vector<std::string> out;
  for (const auto& p : r.params)
    if (vs.contains(p.name())) out.push_back(p.name());
  return out;
}

}  // namespace

std::vector<QVar> free_vars(const Formula& f) {
  std::vector<QVar> out;
  std::set<std::string> seen;
  free_vars_into(f, out, seen, {});
  return out;
}

bool satisfies(const Bundle& b, const Protocol& p, const Assignment& alpha, const Formula& f) {
  for (const auto& v : free_vars(f))
    if (!is_bound(alpha, v)) throw UnboundVariable("unbound variable " + v.name);
  return Solver(b, p).holds(alpha, f);
}

std::vector<Assignment> solutions(const Bundle& b, const Protocol& p, const Assignment& alpha,
                                  const std::vector<QVar>& vars, const Formula& body, std::size_t limit) {
  return Solver(b, p).solve(alpha, vars, body, limit);
}

SkeletonFormula skeleton_to_formula(const Skeleton& sk, const std::string& prefix,
                                    const std::vector<std::string>& fixed_names) {
  SkeletonFormula out;
  for (std::size_t i = 0; i < sk.strands.size(); ++i)
    out.strand_vars.push_back(i < fixed_names.size() ? fixed_names[i] : prefix + std::to_string(i));
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < sk.strands.size(); ++i) {
    const SkStrand& st = sk.strands[i];
    const Role* r = sk.protocol().find(st.role);
    std::map<std::string, Term> args;
    for (const auto& name : params_in_prefix(*r, st.height)) args.emplace(name, st.args.at(name));
    parts.push_back(Formula::htin(out.strand_vars[i], st.height, st.role, std::move(args)));
  }
  auto ref = [&](Node n) { return NodeRef{out.strand_vars[n.strand], n.index}; };
  for (const auto& [x, y] : sk.order) parts.push_back(Formula::prec(ref(x), ref(y)));
  for (const auto& t : sk.non) parts.push_back(Formula::non(t));
  for (const auto& [u, n] : sk.uniq) parts.push_back(Formula::uniq(u, ref(n)));
  for (const auto& [name, value] : sk.input_binding.bindings())
    if (!(value.is_var() && value.name() == name)) parts.push_back(Formula::equal(Term::var(name, value.sort()), value));
  out.formula = Formula::conj(std::move(parts));
  return out;
}

Assignment canonical_assignment(const Skeleton& sk, const WitnessBundle& w, const SkeletonFormula& f) {
  Assignment a;
  for (std::size_t i = 0; i < f.strand_vars.size(); ++i) a.strands[f.strand_vars[i]] = i;
  for (const auto& [name, value] : w.grounding.bindings()) a.msg.set(name, value);
  for (const auto& [name, value] : sk.input_binding.bindings())
    if (!a.msg.lookup(name)) a.msg.set(name, w.grounding.apply(value));
  return a;
}

Formula ShapeAnalysisSentence::as_formula() const { return Formula::implies(hypothesis, disjuncts); }

ShapeAnalysisSentence shape_analysis_sentence(const Skeleton& input, const AnalysisResult& result,
                                              bool allow_incomplete) {
  if (result.incomplete && !allow_incomplete)
    throw IncompleteAnalysis("analysis hit its bounds; no sentence is emitted for an incomplete result");
  ShapeAnalysisSentence s;
  s.unsound = result.incomplete;
  auto phi0 = skeleton_to_formula(input, "z");
  s.hypothesis = phi0.formula;
  s.universals = free_vars(s.hypothesis);
  std::set<std::string> universal_names;
  for (const auto& v : s.universals) universal_names.insert(v.name);

  for (const auto& shape : result.shapes) {
    // A shape variable that reuses the name of an input variable bound to
    // something else is a different entity; rename it apart.
    Skeleton sk = shape;
    Subst rename;
    for (const auto& [name, sort] : sk.variables()) {
      if (!universal_names.contains(name)) continue;
      auto b = sk.input_binding.lookup(name);
      if (b && b->is_var() && b->name() == name) continue;
      rename.set(name, Term::var(name + "'", sort));
    }
    sk.apply(rename);
    std::vector<std::string> fixed(phi0.strand_vars.begin(),
                                   phi0.strand_vars.begin() + static_cast<std::ptrdiff_t>(std::min(sk.fixed, phi0.strand_vars.size())));
    Formula psi = skeleton_to_formula(sk, "y", fixed).formula;
    std::vector<QVar> ys;
    for (const auto& v : free_vars(psi))
      if (!(v.sort ? universal_names.contains(v.name) : std::find(fixed.begin(), fixed.end(), v.name) != fixed.end()))
        ys.push_back(v);
    s.disjuncts.push_back(ys.empty() ? psi : Formula::exists(std::move(ys), std::move(psi)));
  }
  return s;
}

bool sentence_holds(const Bundle& b, const Protocol& p, const ShapeAnalysisSentence& s) {
  return satisfies(b, p, {}, s.as_formula());
}

}  // namespace sst
