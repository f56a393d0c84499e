#include "strandstate/strands.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sst {

std::string Event::str() const { return (dir == Dir::Send ? "+" : "-") + msg.str(); }

std::string Node::str() const {
  return "(" + std::to_string(strand) + " " + std::to_string(index) + ")";
}

const RoleAnnotation* Role::annotation_at(std::size_t event) const {
  for (const auto& a : annotations)
    if (a.event == event) return &a;
  return nullptr;
}

namespace {

constexpr char kPatternPrefix = '?';

Term rename_pattern(const Term& t) {
  std::map<std::string, Sort> vars;
  collect_vars(t, vars);
  Subst s;
  for (const auto& [name, sort] : vars) s.bind(Term::var(name, sort), Term::var(kPatternPrefix + name, sort));
  return s.apply(t);
}

}  // namespace

std::optional<Subst> role_instance(const Role& role, const Trace& trace) {
  if (trace.size() > role.trace.size()) return std::nullopt;
  Subst s;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].dir != role.trace[i].dir) return std::nullopt;
    auto r = match(rename_pattern(role.trace[i].msg), trace[i].msg, s);
    if (!r) return std::nullopt;
    s = std::move(*r.subst);
  }
  Subst out;
  for (const auto& [name, value] : s.bindings()) {
    std::string plain = name.substr(1);
    if (role.tag_params.contains(plain) && value.kind() != Kind::Tag) return std::nullopt;
    out.set(plain, value);
  }
  return out;
}

Protocol::Protocol(std::string name, std::vector<Role> roles) : name_(std::move(name)), roles_(std::move(roles)) {
  std::set<std::string> seen;
  for (const auto& r : roles_) {
    if (!seen.insert(r.name).second) throw std::invalid_argument("duplicate role " + r.name);
    std::map<std::string, Sort> vars;
    for (const auto& e : r.trace) collect_vars(e.msg, vars);
    for (const auto& [name, sort] : vars) {
      bool found = std::any_of(r.params.begin(), r.params.end(), [&](const Term& p) { return p.name() == name; });
      if (!found) throw std::invalid_argument("role " + r.name + ": variable " + name + " is not a parameter");
    }
    for (const auto& a : r.annotations)
      if (a.event >= r.trace.size() || !r.trace[a.event].is_send())
        throw std::invalid_argument("role " + r.name + ": annotations belong on transmissions");
  }
}

const Role* Protocol::find(const std::string& name) const {
  for (const auto& r : roles_)
    if (r.name == name) return &r;
  return nullptr;
}

void Protocol::add_adversary_roles() {
  for (auto& r : adversary_roles())
    if (!find(r.name)) roles_.push_back(std::move(r));
}

bool operator==(const Protocol& a, const Protocol& b) {
  if (a.name_ != b.name_ || a.roles_.size() != b.roles_.size()) return false;
  for (std::size_t i = 0; i < a.roles_.size(); ++i) {
    const Role& x = a.roles_[i];
    const Role& y = b.roles_[i];
    if (x.name != y.name || x.params != y.params || x.trace != y.trace || x.kind != y.kind ||
        x.non_orig != y.non_orig || x.uniq_orig != y.uniq_orig || x.tag_params != y.tag_params ||
        x.annotations.size() != y.annotations.size())
      return false;
    for (std::size_t j = 0; j < x.annotations.size(); ++j) {
      const auto& p = x.annotations[j];
      const auto& q = y.annotations[j];
      if (p.event != q.event || p.pre_event != q.pre_event || p.pre != q.pre || p.post != q.post) return false;
    }
  }
  return true;
}

std::vector<Role> adversary_roles() {
  std::vector<Role> out;
  auto role = [&](std::string name, std::vector<Term> params, Trace trace) {
    Role r;
    r.name = std::move(name);
    r.params = std::move(params);
    r.trace = std::move(trace);
    r.kind = RoleKind::Adversary;
    out.push_back(std::move(r));
  };
  const Term t = Term::var("t", Sort::Top);
  const Term t0 = Term::var("t0", Sort::Top);
  const Term t1 = Term::var("t1", Sort::Top);
  for (Sort s : {Sort::A, Sort::S, Sort::D, Sort::E}) {
    Term a = Term::var("t", s);
    role("create-" + std::string(sort_name(s)), {a}, {Event::send(a)});
  }
  role("tag", {t}, {Event::send(t)});
  out.back().tag_params.insert("t");
  role("pair", {t0, t1}, {Event::recv(t0), Event::recv(t1), Event::send(Term::pair(t0, t1))});
  role("sep", {t0, t1}, {Event::recv(Term::pair(t0, t1)), Event::send(t0), Event::send(t1)});
  for (Sort s : {Sort::A, Sort::S}) {
    Term k = Term::var("k", s);
    std::string suffix = "-" + std::string(sort_name(s));
    role("enc" + suffix, {t, k}, {Event::recv(t), Event::recv(k), Event::send(Term::enc(t, k))});
    role("dec" + suffix, {t, k},
         {Event::recv(Term::enc(t, k)), Event::recv(Term::inv(k)), Event::send(t)});
  }
  role("hash", {t}, {Event::recv(t), Event::send(Term::hash(t))});
  return out;
}

std::optional<std::size_t> originates(const Trace& c, const Term& t) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (carried_by(t, c[i].msg)) {
      if (c[i].is_send()) return i;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool non_originating(const StrandSpace& space, const Term& t) {
  return std::none_of(space.begin(), space.end(), [&](const Trace& c) { return originates(c, t).has_value(); });
}

bool uniquely_originates(const StrandSpace& space, const Term& t, Node n) {
  if (n.strand >= space.size() || n.index >= space[n.strand].size())
    throw std::out_of_range("uniquely_originates: node " + n.str() + " out of range");
  std::optional<Node> where;
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (auto i = originates(space[s], t)) {
      if (where) return false;
      where = Node{s, *i};
    }
  }
  return where && *where == n;
}

std::vector<Node> Bundle::nodes() const {
  std::vector<Node> out;
  for (std::size_t s = 0; s < space.size(); ++s)
    for (std::size_t i = 0; i < space[s].size(); ++i) out.push_back({s, i});
  return out;
}

std::string_view violation_name(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::NodeOutOfRange: return "NodeOutOfRange";
    case Violation::Kind::BadDirection: return "BadDirection";
    case Violation::Kind::MessageMismatch: return "MessageMismatch";
    case Violation::Kind::MissingTransmitter: return "MissingTransmitter";
    case Violation::Kind::MultipleTransmitters: return "MultipleTransmitters";
    case Violation::Kind::Cycle: return "Cycle";
    case Violation::Kind::UnknownRole: return "UnknownRole";
    case Violation::Kind::NotRoleInstance: return "NotRoleInstance";
  }
  return "?";
}

std::string Violation::str() const {
  std::string out = std::string(violation_name(kind)) + " at " + node.str();
  if (other) out += " / " + other->str();
  if (!detail.empty()) out += ": " + detail;
  return out;
}

Precedence::Precedence(const StrandSpace& space, const std::set<std::pair<Node, Node>>& edges) {
  std::vector<Node> all;
  for (std::size_t s = 0; s < space.size(); ++s)
    for (std::size_t i = 0; i < space[s].size(); ++i) {
      ids_.emplace(Node{s, i}, all.size());
      all.push_back({s, i});
    }
  const std::size_t n = all.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t k = 0; k < n; ++k) {
    Node nd = all[k];
    if (nd.index + 1 < space[nd.strand].size()) adj[k].push_back(ids_.at({nd.strand, nd.index + 1}));
  }
  for (const auto& [a, b] : edges) {
    auto ia = ids_.find(a);
    auto ib = ids_.find(b);
    if (ia != ids_.end() && ib != ids_.end()) adj[ia->second].push_back(ib->second);
  }
  reach_.assign(n, std::vector<bool>(n, false));
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<std::size_t> stack(adj[src].begin(), adj[src].end());
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      if (reach_[src][v]) continue;
      reach_[src][v] = true;
      for (std::size_t w : adj[v])
        if (!reach_[src][w]) stack.push_back(w);
    }
    if (reach_[src][src]) acyclic_ = false;
  }
}

std::size_t Precedence::id(Node n) const {
  auto it = ids_.find(n);
  if (it == ids_.end()) throw std::out_of_range("node " + n.str() + " out of range");
  return it->second;
}

bool Precedence::before(Node a, Node b) const { return reach_[id(a)][id(b)]; }

bool precedes(const Bundle& b, Node n0, Node n1) {
  if (!b.has_node(n0)) throw std::out_of_range("node " + n0.str() + " out of range");
  if (!b.has_node(n1)) throw std::out_of_range("node " + n1.str() + " out of range");
  return Precedence(b.space, b.comm).before(n0, n1);
}

std::vector<Violation> check_bundle(const Bundle& b, const Protocol& protocol) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  std::map<Node, std::size_t> inbound;
  for (const auto& [from, to] : b.comm) {
    if (!b.has_node(from) || !b.has_node(to)) {
      out.push_back({K::NodeOutOfRange, b.has_node(from) ? to : from, std::nullopt, "communication edge"});
      continue;
    }
    if (!b.event(from).is_send() || b.event(to).is_send()) {
      out.push_back({K::BadDirection, from, to, "edge must join a transmission to a reception"});
      continue;
    }
    if (b.event(from).msg != b.event(to).msg) {
      out.push_back({K::MessageMismatch, from, to, b.event(from).msg.str() + " vs " + b.event(to).msg.str()});
      continue;
    }
    ++inbound[to];
  }
  for (const Node& n : b.nodes()) {
    if (b.event(n).is_send()) continue;
    auto c = inbound[n];
    if (c == 0) out.push_back({K::MissingTransmitter, n, std::nullopt, b.event(n).msg.str()});
    if (c > 1) out.push_back({K::MultipleTransmitters, n, std::nullopt, std::to_string(c) + " inbound edges"});
  }
  Precedence prec(b.space, b.comm);
  if (!prec.acyclic()) {
    for (const Node& n : b.nodes())
      if (prec.before(n, n)) {
        out.push_back({K::Cycle, n, std::nullopt, "node precedes itself"});
        break;
      }
  }
  for (std::size_t s = 0; s < b.space.size(); ++s) {
    if (s >= b.roles.size()) {
      out.push_back({K::UnknownRole, {s, 0}, std::nullopt, "strand has no role assignment"});
      continue;
    }
    const Role* r = protocol.find(b.roles[s].role);
    if (!r) {
      out.push_back({K::UnknownRole, {s, 0}, std::nullopt, b.roles[s].role});
      continue;
    }
    auto inst = role_instance(*r, b.space[s]);
    bool ok = inst.has_value();
    if (ok && !b.roles[s].subst.empty()) {
      for (std::size_t i = 0; i < b.space[s].size() && ok; ++i)
        ok = b.roles[s].subst.apply(r->trace[i].msg) == b.space[s][i].msg;
    }
    if (!ok) out.push_back({K::NotRoleInstance, {s, 0}, std::nullopt, "not an instance of " + r->name});
  }
  return out;
}

bool creatable(const Term& t, const TermSet& forbidden) {
  if (forbidden.contains(t)) return false;
  switch (t.kind()) {
    case Kind::Atom:
    case Kind::Tag: return true;
    case Kind::Var: return t.sort() != Sort::M;
    case Kind::Inv: return true;
    default: return false;
  }
}

Deducer::Deducer(const std::vector<Term>& available, TermSet forbidden) : forbidden_(std::move(forbidden)) {
  known_.insert(available.begin(), available.end());
  bool changed = true;
  while (changed) {
    changed = false;
    memo_.clear();
    std::vector<Term> snapshot(known_.begin(), known_.end());
    for (const Term& t : snapshot) {
      if (t.kind() == Kind::Pair) {
        changed |= known_.insert(t.arg(0)).second;
        changed |= known_.insert(t.arg(1)).second;
      } else if (t.kind() == Kind::Enc && !known_.contains(t.arg(0))) {
        if (synth(Term::inv(t.arg(1)))) changed |= known_.insert(t.arg(0)).second;
      }
    }
  }
  memo_.clear();
}

bool Deducer::synth(const Term& t) {
  if (known_.contains(t)) return true;
  if (auto it = memo_.find(t); it != memo_.end()) return it->second;
  bool r = false;
  switch (t.kind()) {
    case Kind::Pair: r = synth(t.arg(0)) && synth(t.arg(1)); break;
    case Kind::Enc: r = synth(t.arg(0)) && synth(t.arg(1)); break;
    case Kind::Hash: r = synth(t.arg(0)); break;
    case Kind::Boot:
    case Kind::Extend: r = false; break;
    default: r = creatable(t, forbidden_); break;
  }
  memo_.emplace(t, r);
  return r;
}

bool Deducer::derivable(const Term& t) { return synth(t); }

bool derivable(const std::vector<Term>& available, const TermSet& forbidden, const Term& target) {
  return Deducer(available, forbidden).derivable(target);
}

// ---------------------------------------------------------------------------

BundleBuilder::BundleBuilder(const Protocol& protocol, TermSet forbidden)
    : protocol_(protocol), forbidden_(std::move(forbidden)) {}

std::size_t BundleBuilder::add_strand(const std::string& role, const Subst& subst, Trace trace) {
  bundle_.space.push_back(std::move(trace));
  bundle_.roles.push_back({role, subst});
  return bundle_.space.size() - 1;
}

void BundleBuilder::publish(Node n) { pool_.emplace(bundle_.event(n).msg, n); }

void BundleBuilder::connect(Node from, Node to) { bundle_.comm.insert({from, to}); }

std::size_t BundleBuilder::add_adversary(const std::string& role, const Subst& subst) {
  const Role* r = protocol_.find(role);
  if (!r) throw std::logic_error("protocol lacks adversary role " + role);
  Trace trace;
  for (const auto& e : r->trace) trace.push_back({e.dir, subst.apply(e.msg)});
  return add_strand(role, subst, std::move(trace));
}

std::optional<Node> BundleBuilder::produce(const Term& t) {
  if (auto it = pool_.find(t); it != pool_.end()) return it->second;
  auto bind1 = [](const std::string& name, Sort sort, const Term& v) {
    Subst s;
    s.bind(Term::var(name, sort), v);
    return s;
  };
  std::size_t s = 0;
  switch (t.kind()) {
    case Kind::Tag: {
      if (forbidden_.contains(t)) return std::nullopt;
      s = add_adversary("tag", bind1("t", Sort::Top, t));
      break;
    }
    case Kind::Atom:
    case Kind::Inv: {
      if (forbidden_.contains(t)) return std::nullopt;
      s = add_adversary("create-" + std::string(sort_name(t.sort())), bind1("t", t.sort(), t));
      break;
    }
    case Kind::Var: {
      if (forbidden_.contains(t) || !is_atom_sort(t.sort())) return std::nullopt;
      s = add_adversary("create-" + std::string(sort_name(t.sort())), bind1("t", t.sort(), t));
      break;
    }
    case Kind::Pair: {
      auto l = produce(t.arg(0));
      if (!l) return std::nullopt;
      auto r = produce(t.arg(1));
      if (!r) return std::nullopt;
      Subst sub = bind1("t0", Sort::Top, t.arg(0));
      sub.bind(Term::var("t1", Sort::Top), t.arg(1));
      s = add_adversary("pair", sub);
      connect(*l, {s, 0});
      connect(*r, {s, 1});
      break;
    }
    case Kind::Enc: {
      auto body = produce(t.arg(0));
      if (!body) return std::nullopt;
      auto key = produce(t.arg(1));
      if (!key) return std::nullopt;
      Subst sub = bind1("t", Sort::Top, t.arg(0));
      sub.bind(Term::var("k", t.arg(1).sort()), t.arg(1));
      s = add_adversary("enc-" + std::string(sort_name(t.arg(1).sort())), sub);
      connect(*body, {s, 0});
      connect(*key, {s, 1});
      break;
    }
    case Kind::Hash: {
      auto body = produce(t.arg(0));
      if (!body) return std::nullopt;
      s = add_adversary("hash", bind1("t", Sort::Top, t.arg(0)));
      connect(*body, {s, 0});
      break;
    }
    default: return std::nullopt;
  }
  Node out{s, bundle_.space[s].size() - 1};
  publish(out);
  return out;
}

void BundleBuilder::analyze() {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::pair<Term, Node>> snapshot(pool_.begin(), pool_.end());
    for (const auto& [t, n] : snapshot) {
      if (analyzed_.contains(t)) continue;
      if (t.kind() == Kind::Pair) {
        analyzed_.insert(t);
        Subst sub;
        sub.bind(Term::var("t0", Sort::Top), t.arg(0));
        sub.bind(Term::var("t1", Sort::Top), t.arg(1));
        std::size_t s = add_adversary("sep", sub);
        connect(n, {s, 0});
        publish({s, 1});
        publish({s, 2});
        changed = true;
      } else if (t.kind() == Kind::Enc) {
        if (pool_.contains(t.arg(0))) {
          analyzed_.insert(t);
          continue;
        }
        Term key = Term::inv(t.arg(1));
        std::vector<Term> avail;
        for (const auto& [u, m] : pool_) avail.push_back(u);
        if (!Deducer(avail, forbidden_).derivable(key)) continue;
        auto kn = produce(key);
        if (!kn) continue;
        analyzed_.insert(t);
        Subst sub;
        sub.bind(Term::var("t", Sort::Top), t.arg(0));
        sub.bind(Term::var("k", t.arg(1).sort()), t.arg(1));
        std::size_t s = add_adversary("dec-" + std::string(sort_name(t.arg(1).sort())), sub);
        connect(n, {s, 0});
        connect(*kn, {s, 1});
        publish({s, 2});
        changed = true;
      }
    }
  }
}

void BundleBuilder::link(Node from, Node to) {
  if (bundle_.event(from).msg != bundle_.event(to).msg) throw std::invalid_argument("link between different messages");
  connect(from, to);
}

bool BundleBuilder::deliver(Node n) { return deliver_after(n, {}); }

bool BundleBuilder::deliver_after(Node b, const std::vector<Node>& after) {
  analyze();
  const Term y = bundle_.event(b).msg;
  std::vector<Term> avail;
  for (const auto& [u, m] : pool_) avail.push_back(u);
  if (!Deducer(avail, forbidden_).derivable(y)) return false;
  auto src = produce(y);
  if (!src) return false;
  Node p = *src;
  for (const Node& a : after) {
    if (a.strand == b.strand && a.index < b.index) continue;
    if (Precedence(bundle_.space, bundle_.comm).before(a, p) || a == p) continue;
    const Term x = bundle_.event(a).msg;
    Subst sub;
    sub.bind(Term::var("t0", Sort::Top), x);
    sub.bind(Term::var("t1", Sort::Top), y);
    std::size_t ps = add_adversary("pair", sub);
    connect(a, {ps, 0});
    connect(p, {ps, 1});
    std::size_t ss = add_adversary("sep", sub);
    connect({ps, 2}, {ss, 0});
    p = {ss, 2};
  }
  connect(p, b);
  return true;
}

std::optional<Bundle> derivation_witness(const std::vector<Term>& available, const TermSet& forbidden,
                                         const Term& target, Protocol& protocol_out) {
  Role source;
  source.name = "source";
  source.params = {Term::var("x", Sort::Top)};
  source.trace = {Event::send(source.params[0])};
  Role sink;
  sink.name = "sink";
  sink.params = {Term::var("x", Sort::Top)};
  sink.trace = {Event::recv(sink.params[0])};
  protocol_out = Protocol("witness", {source, sink});
  protocol_out.add_adversary_roles();
  BundleBuilder builder(protocol_out, forbidden);
  for (const Term& t : available) {
    Subst s;
    s.bind(source.params[0], t);
    std::size_t id = builder.add_strand("source", s, {Event::send(t)});
    builder.publish({id, 0});
  }
  Subst s;
  s.bind(sink.params[0], target);
  std::size_t id = builder.add_strand("sink", s, {Event::recv(target)});
  if (!builder.deliver({id, 0})) return std::nullopt;
  return builder.take();
}

}  // namespace sst
