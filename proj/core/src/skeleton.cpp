#include "strandstate/skeleton.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace sst {

Term instantiate(const Term& t, const std::map<std::string, Term>& args) {
  Subst s;
  for (const auto& [name, value] : args) s.set(name, value);
  return s.apply(t);
}

namespace {

const Role& role_of(const Skeleton& sk, const std::string& name) {
  const Role* r = sk.protocol().find(name);
  if (!r) throw std::invalid_argument("unknown role " + name);
  return *r;
}

std::string strip_suffix(const std::string& name) {
  auto dash = name.rfind('-');
  if (dash == std::string::npos || dash + 1 == name.size()) return name;
  for (std::size_t i = dash + 1; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  return name.substr(0, dash);
}

}  // namespace

Term Skeleton::fresh_var(const std::string& base, Sort sort) {
  auto vars = variables();
  std::string stem = strip_suffix(base);
  for (;;) {
    std::string name = stem + "-" + std::to_string(++fresh_);
    if (!vars.contains(name)) return Term::var(name, sort);
  }
}

std::size_t Skeleton::add_strand(const std::string& role, std::size_t height, std::map<std::string, Term> args) {
  const Role& r = role_of(*this, role);
  if (height == 0 || height > r.trace.size()) throw std::invalid_argument("bad height for role " + role);
  for (const auto& p : r.params)
    if (!args.contains(p.name())) args.emplace(p.name(), fresh_var(p.name(), p.sort()));
  SkStrand s;
  s.role = role;
  s.height = height;
  for (std::size_t i = 0; i < height; ++i) s.trace.push_back({r.trace[i].dir, instantiate(r.trace[i].msg, args)});
  s.args = std::move(args);
  strands.push_back(std::move(s));
  return strands.size() - 1;
}

void Skeleton::raise(std::size_t s, std::size_t height) {
  SkStrand& st = strands.at(s);
  const Role& r = role_of(*this, st.role);
  if (height > r.trace.size()) throw std::invalid_argument("bad height for role " + st.role);
  for (std::size_t i = st.height; i < height; ++i)
    st.trace.push_back({r.trace[i].dir, instantiate(r.trace[i].msg, st.args)});
  st.height = std::max(st.height, height);
}

bool Skeleton::apply(const Subst& sigma) {
  if (sigma.empty()) return true;
  for (auto& s : strands) {
    for (auto& [name, value] : s.args) value = sigma.apply(value);
    for (auto& e : s.trace) e.msg = sigma.apply(e.msg);
  }
  TermSet nn;
  for (const auto& t : non) nn.insert(sigma.apply(t));
  non = std::move(nn);
  std::map<Term, Node> nu;
  bool ok = true;
  for (const auto& [t, n] : uniq) {
    auto [it, fresh] = nu.emplace(sigma.apply(t), n);
    if (!fresh && it->second != n) ok = false;
  }
  uniq = std::move(nu);
  Subst ib;
  for (const auto& [name, value] : input_binding.bindings()) ib.set(name, sigma.apply(value));
  input_binding = std::move(ib);
  return ok;
}

StrandSpace Skeleton::space() const {
  StrandSpace out;
  for (const auto& s : strands) out.push_back(s.trace);
  return out;
}

Precedence Skeleton::precedence() const { return Precedence(space(), order); }

std::vector<Node> Skeleton::nodes() const {
  std::vector<Node> out;
  for (std::size_t s = 0; s < strands.size(); ++s)
    for (std::size_t i = 0; i < strands[s].trace.size(); ++i) out.push_back({s, i});
  return out;
}

std::size_t Skeleton::regular_count() const {
  std::size_t n = 0;
  for (const auto& s : strands)
    if (role_of(*this, s.role).kind != RoleKind::Listener) ++n;
  return n;
}

std::map<std::string, Sort> Skeleton::variables() const {
  std::map<std::string, Sort> out;
  for (const auto& s : strands)
    for (const auto& [name, value] : s.args) collect_vars(value, out);
  for (const auto& t : non) collect_vars(t, out);
  for (const auto& [t, n] : uniq) collect_vars(t, out);
  for (const auto& [name, value] : input_binding.bindings()) collect_vars(value, out);
  for (const auto& t : inputs) collect_vars(t, out);
  return out;
}

namespace {

// Role parameters that occur in the first h events.
std::set<std::string> params_in_prefix(const Role& r, std::size_t h) {
  std::map<std::string, Sort> vars;
  for (std::size_t i = 0; i < h && i < r.trace.size(); ++i) collect_vars(r.trace[i].msg, vars);
  std::set<std::string> out;
  for (const auto& [name, sort] : vars) out.insert(name);
  return out;
}

bool covered(const Term& t, const std::set<std::string>& present) {
  std::map<std::string, Sort> vars;
  collect_vars(t, vars);
  return std::all_of(vars.begin(), vars.end(), [&](const auto& v) { return present.contains(v.first); });
}

}  // namespace

std::optional<Skeleton> normalize(Skeleton sk) {
  for (std::size_t s = 0; s < sk.strands.size(); ++s) {
    const SkStrand& st = sk.strands[s];
    const Role& r = role_of(sk, st.role);
    auto present = params_in_prefix(r, st.height);
    for (const auto& t : r.non_orig)
      if (covered(t, present)) sk.non.insert(instantiate(t, st.args));
    for (const auto& t : r.uniq_orig) {
      if (!covered(t, present)) continue;
      Term u = instantiate(t, st.args);
      auto o = originates(st.trace, u);
      if (!o) return std::nullopt;
      auto [it, fresh] = sk.uniq.emplace(u, Node{s, *o});
      if (!fresh && it->second != Node{s, *o}) return std::nullopt;
    }
  }
  const StrandSpace space = sk.space();
  for (const auto& t : sk.non) {
    if (sk.uniq.contains(t)) return std::nullopt;
    if (!non_originating(space, t)) return std::nullopt;
  }
  for (const auto& [u, n0] : sk.uniq) {
    if (!sk.has_node(n0)) return std::nullopt;
    for (std::size_t s = 0; s < space.size(); ++s) {
      auto o = originates(space[s], u);
      if (s == n0.strand) {
        if (!o || *o != n0.index) return std::nullopt;
      } else if (o) {
        return std::nullopt;
      }
    }
    for (std::size_t s = 0; s < space.size(); ++s) {
      if (s == n0.strand) continue;
      for (std::size_t i = 0; i < space[s].size(); ++i)
        if (!space[s][i].is_send() && carried_by(u, space[s][i].msg)) sk.order.insert({n0, Node{s, i}});
    }
  }
  for (auto it = sk.order.begin(); it != sk.order.end();) {
    if (!sk.has_node(it->first) || !sk.has_node(it->second)) return std::nullopt;
    // Same-strand edges are implied by succession or contradict it.
    if (it->first.strand == it->second.strand) {
      if (it->first.index >= it->second.index) return std::nullopt;
      it = sk.order.erase(it);
    } else {
      ++it;
    }
  }
  if (!sk.precedence().acyclic()) return std::nullopt;
  return sk;
}

namespace {

TermSet forbidden_of(const Skeleton& sk) {
  TermSet f = sk.non;
  for (const auto& [u, n] : sk.uniq) f.insert(u);
  return f;
}

std::vector<Term> prior_transmissions(const Skeleton& sk, const Precedence& prec, Node n) {
  std::vector<Term> out;
  for (std::size_t s = 0; s < sk.strands.size(); ++s)
    for (std::size_t i = 0; i < sk.strands[s].trace.size(); ++i) {
      Node m{s, i};
      if (sk.strands[s].trace[i].is_send() && prec.before(m, n)) out.push_back(sk.strands[s].trace[i].msg);
    }
  return out;
}

}  // namespace

std::vector<Node> unrealized_nodes(const Skeleton& sk) {
  std::vector<Node> out;
  const Precedence prec = sk.precedence();
  const TermSet forbidden = forbidden_of(sk);
  for (const Node& n : sk.nodes()) {
    const Event& e = sk.event(n);
    if (e.is_send()) continue;
    if (!Deducer(prior_transmissions(sk, prec, n), forbidden).derivable(e.msg)) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string sort_shape(const Term& t) {
  std::map<std::string, Sort> vars;
  collect_vars(t, vars);
  Subst s;
  for (const auto& [name, sort] : vars) s.set(name, Term::var("_" + std::string(sort_name(sort)), sort));
  return s.apply(t).str();
}

void rename_in_order(const Term& t, Subst& ren, std::size_t& counter) {
  if (t.is_ground()) return;
  if (t.is_var()) {
    if (!ren.lookup(t.name())) ren.set(t.name(), Term::var("?" + std::to_string(counter++), t.sort()));
    return;
  }
  for (std::size_t i = 0; i < t.arity(); ++i) rename_in_order(t.arg(i), ren, counter);
}

}  // namespace

std::string canonical_form(const Skeleton& sk) {
  const std::size_t n = sk.strands.size();
  std::vector<std::string> keys(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::string k = sk.strands[s].role + "/" + std::to_string(sk.strands[s].height);
    for (const auto& e : sk.strands[s].trace) k += (e.is_send() ? " +" : " -") + sort_shape(e.msg);
    keys[s] = std::move(k);
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[perm[i]] = i;

  Subst ren;
  std::size_t counter = 0;
  for (std::size_t i : perm) {
    for (const auto& e : sk.strands[i].trace) rename_in_order(e.msg, ren, counter);
    for (const auto& [name, value] : sk.strands[i].args) rename_in_order(value, ren, counter);
  }
  for (const auto& [name, value] : sk.input_binding.bindings()) rename_in_order(value, ren, counter);
  for (const auto& t : sk.non) rename_in_order(t, ren, counter);
  for (const auto& [t, nd] : sk.uniq) rename_in_order(t, ren, counter);

  std::ostringstream os;
  for (std::size_t i : perm) {
    const SkStrand& st = sk.strands[i];
    os << '(' << st.role << ' ' << st.height;
    for (const auto& [name, value] : st.args) os << " (" << name << ' ' << ren.apply(value).str() << ')';
    os << ')';
  }
  const Precedence prec = sk.precedence();
  std::set<std::pair<Node, Node>> edges;
  for (const Node& a : sk.nodes())
    for (const Node& b : sk.nodes())
      if (a.strand != b.strand && prec.before(a, b))
        edges.insert({Node{pos[a.strand], a.index}, Node{pos[b.strand], b.index}});
  os << " order";
  for (const auto& [a, b] : edges) os << ' ' << a.str() << b.str();
  std::set<std::string> non;
  for (const auto& t : sk.non) non.insert(ren.apply(t).str());
  os << " non";
  for (const auto& t : non) os << ' ' << t;
  std::set<std::string> uniq;
  for (const auto& [t, nd] : sk.uniq) uniq.insert(ren.apply(t).str() + Node{pos[nd.strand], nd.index}.str());
  os << " uniq";
  for (const auto& t : uniq) os << ' ' << t;
  os << " in";
  for (const auto& [name, value] : sk.input_binding.bindings()) os << ' ' << name << '=' << ren.apply(value).str();
  return os.str();
}

// ---------------------------------------------------------------------------

WitnessBundle to_bundle(const Skeleton& sk) {
  WitnessBundle out;
  for (const auto& [name, sort] : sk.variables()) {
    Sort s = is_atom_sort(sort) ? sort : Sort::D;
    if (sort == Sort::M) throw std::runtime_error("state-sorted variable " + name + " cannot be grounded");
    out.grounding.set(name, Term::atom(s, "$" + name));
  }
  const Subst& g = out.grounding;
  TermSet forbidden;
  for (const auto& t : sk.non) forbidden.insert(g.apply(t));
  for (const auto& [u, n] : sk.uniq) forbidden.insert(g.apply(u));

  BundleBuilder builder(sk.protocol(), forbidden);
  for (const auto& st : sk.strands) {
    Trace trace;
    for (const auto& e : st.trace) trace.push_back({e.dir, g.apply(e.msg)});
    const Role* r = sk.protocol().find(st.role);
    auto sigma = role_instance(*r, trace);
    if (!sigma) throw std::runtime_error("ground strand is not an instance of " + st.role);
    builder.add_strand(st.role, *sigma, std::move(trace));
  }

  // Each ordering edge becomes a transmission-to-reception requirement.
  std::map<Node, std::vector<Node>> after;
  for (const auto& [a, b] : sk.order) {
    std::optional<Node> sender, receiver;
    const Trace& ta = sk.strands[a.strand].trace;
    for (std::size_t i = a.index; i < ta.size() && !sender; ++i)
      if (ta[i].is_send()) sender = Node{a.strand, i};
    const Trace& tb = sk.strands[b.strand].trace;
    for (std::size_t i = b.index + 1; i-- > 0 && !receiver;)
      if (!tb[i].is_send()) receiver = Node{b.strand, i};
    if (!sender || !receiver)
      throw std::runtime_error("ordering " + a.str() + " < " + b.str() + " cannot be realized by communication");
    after[*receiver].push_back(*sender);
  }

  const Precedence prec = sk.precedence();
  std::vector<Node> pending = sk.nodes();
  while (!pending.empty()) {
    auto next = std::find_if(pending.begin(), pending.end(), [&](const Node& n) {
      return std::none_of(pending.begin(), pending.end(), [&](const Node& m) { return m != n && prec.before(m, n); });
    });
    if (next == pending.end()) throw std::runtime_error("skeleton ordering is cyclic");
    Node n = *next;
    pending.erase(next);
    if (sk.event(n).is_send()) {
      builder.publish(n);
    } else if (!builder.deliver_after(n, after[n])) {
      throw std::runtime_error("reception " + n.str() + " of " + g.apply(sk.event(n).msg).str() +
                               " cannot be derived");
    }
  }
  out.bundle = builder.take();
  return out;
}

namespace {

std::map<std::string, Sort> vars_of_strand(const SkStrand& s) {
  std::map<std::string, Sort> out;
  for (const auto& e : s.trace) collect_vars(e.msg, out);
  for (const auto& [name, value] : s.args) collect_vars(value, out);
  return out;
}

// Skeleton without strand s, whose nodes map onto s' by `sigma`; none when
// some fact of sk has no image.
std::optional<Skeleton> collapse_onto(const Skeleton& sk, std::size_t s, std::size_t target) {
  const SkStrand& a = sk.strands[s];
  const SkStrand& b = sk.strands[target];
  if (a.role != b.role || a.height > b.height) return std::nullopt;

  std::set<std::string> local;
  for (const auto& [name, sort] : vars_of_strand(a)) local.insert(name);
  for (std::size_t i = 0; i < sk.strands.size(); ++i) {
    if (i == s) continue;
    for (const auto& [name, sort] : vars_of_strand(sk.strands[i])) local.erase(name);
  }
  {
    std::map<std::string, Sort> iv;
    for (const auto& [name, value] : sk.input_binding.bindings()) collect_vars(value, iv);
    for (const auto& [name, sort] : iv) local.erase(name);
  }

  Subst sigma;
  for (std::size_t i = 0; i < a.height; ++i) {
    auto m = match(a.trace[i].msg, b.trace[i].msg, sigma);
    if (!m) return std::nullopt;
    sigma = std::move(*m.subst);
  }
  for (const auto& [name, value] : sigma.bindings())
    if (!local.contains(name) && !(value.is_var() && value.name() == name)) return std::nullopt;

  auto has_local = [&](const Term& t) {
    std::map<std::string, Sort> vs;
    collect_vars(t, vs);
    return std::any_of(vs.begin(), vs.end(), [&](const auto& v) { return local.contains(v.first); });
  };
  auto reindex = [&](Node n) {
    if (n.strand == s) n.strand = target;
    if (n.strand > s) --n.strand;
    return n;
  };

  Skeleton out = sk;
  out.strands.erase(out.strands.begin() + static_cast<std::ptrdiff_t>(s));
  out.order.clear();
  std::vector<std::pair<Node, Node>> moved;
  for (const auto& [x, y] : sk.order) {
    if (x.strand == s || y.strand == s) moved.push_back({reindex(x), reindex(y)});
    else out.order.insert({reindex(x), reindex(y)});
  }
  out.non.clear();
  for (const auto& t : sk.non)
    if (!has_local(t)) out.non.insert(t);
  out.uniq.clear();
  for (const auto& [u, n] : sk.uniq)
    if (!has_local(u) && n.strand != s) out.uniq.emplace(u, reindex(n));

  const Precedence prec = out.precedence();
  for (const auto& [x, y] : moved) {
    bool ok = x.strand == y.strand ? x.index < y.index : prec.before(x, y);
    if (!ok) return std::nullopt;
  }
  for (const auto& t : sk.non)
    if (!out.non.contains(sigma.apply(t))) return std::nullopt;
  for (const auto& [u, n] : sk.uniq) {
    auto it = out.uniq.find(sigma.apply(u));
    if (it == out.uniq.end() || it->second != reindex(n)) return std::nullopt;
  }
  return out;
}

}  // namespace

Skeleton prune(Skeleton sk) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = sk.strands.size(); s-- > 0 && !changed;) {
      if (s < sk.fixed) break;
      for (std::size_t t = 0; t < sk.strands.size() && !changed; ++t) {
        if (t == s) continue;
        auto c = collapse_onto(sk, s, t);
        if (!c) continue;
        auto norm = normalize(std::move(*c));
        if (!norm) continue;
        sk = std::move(*norm);
        changed = true;
      }
    }
  }
  return sk;
}

namespace {

struct HomSearch {
  const Skeleton& a;
  const Skeleton& b;
  std::vector<std::size_t> map;
  Precedence prec;

  bool extend(std::size_t i, const Subst& sigma, Homomorphism& out) {
    if (i == a.strands.size()) return finish(sigma, out);
    const SkStrand& sa = a.strands[i];
    for (std::size_t j = 0; j < b.strands.size(); ++j) {
      if (i < a.fixed && j != i) continue;
      const SkStrand& sb = b.strands[j];
      if (sa.role != sb.role || sa.height > sb.height) continue;
      std::optional<Subst> cur = sigma;
      for (std::size_t k = 0; k < sa.height && cur; ++k) {
        auto m = match(sa.trace[k].msg, sb.trace[k].msg, *cur);
        cur = m ? std::optional<Subst>(std::move(*m.subst)) : std::nullopt;
      }
      if (!cur) continue;
      map[i] = j;
      if (extend(i + 1, *cur, out)) return true;
    }
    return false;
  }

  bool finish(const Subst& sigma, Homomorphism& out) {
    auto image = [&](Node n) { return Node{map[n.strand], n.index}; };
    for (const auto& [x, y] : a.order) {
      Node ix = image(x), iy = image(y);
      if (ix.strand == iy.strand ? ix.index >= iy.index : !prec.before(ix, iy)) return false;
    }
    for (const auto& t : a.non)
      if (!b.non.contains(sigma.apply(t))) return false;
    for (const auto& [u, n] : a.uniq) {
      auto it = b.uniq.find(sigma.apply(u));
      if (it == b.uniq.end() || it->second != image(n)) return false;
    }
    for (const auto& [name, value] : a.input_binding.bindings()) {
      auto target = b.input_binding.lookup(name);
      if (!target || sigma.apply(value) != *target) return false;
    }
    out.strand_map = map;
    out.subst = sigma;
    return true;
  }
};

}  // namespace

std::optional<Homomorphism> homomorphism(const Skeleton& from, const Skeleton& to) {
  if (from.fixed != to.fixed) return std::nullopt;
  // Keep the two variable namespaces apart so target variables stay rigid.
  Subst rename;
  for (const auto& [name, sort] : from.variables()) rename.set(name, Term::var("%" + name, sort));
  Skeleton a = from;
  a.apply(rename);
  Subst ib;
  for (const auto& [name, value] : from.input_binding.bindings()) ib.set(name, rename.apply(value));
  a.input_binding = ib;

  HomSearch h{a, to, std::vector<std::size_t>(a.strands.size()), to.precedence()};
  Homomorphism out;
  if (!h.extend(0, {}, out)) return std::nullopt;
  Subst back;
  for (const auto& [name, value] : out.subst.bindings()) back.set(name.substr(1), value);
  out.subst = back;
  return out;
}

std::vector<Skeleton> minimal_shapes(const std::vector<Skeleton>& shapes) {
  std::vector<Skeleton> out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < shapes.size() && !dominated; ++j) {
      if (i == j || !homomorphism(shapes[j], shapes[i])) continue;
      // Equivalent pairs keep the earlier one.
      dominated = j < i || !homomorphism(shapes[i], shapes[j]);
    }
    if (!dominated) out.push_back(shapes[i]);
  }
  return out;
}

}  // namespace sst
