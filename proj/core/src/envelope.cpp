#include "strandstate/envelope.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace sst {

namespace {

Term V(const std::string& name, Sort s) { return Term::var(name, s); }

Term st(const Term& value, const Term& k) { return Term::enc(Term::pair(state_tag(), value), Term::hash(k)); }

Role make_role(std::string name, std::vector<Term> params, Trace trace) {
  Role r;
  r.name = std::move(name);
  r.params = std::move(params);
  r.trace = std::move(trace);
  return r;
}

void annotate_role(Role& r, std::size_t event, std::optional<std::size_t> pre_event) {
  RoleAnnotation a;
  a.event = event;
  a.pre_event = pre_event;
  if (pre_event) a.pre = r.trace[*pre_event].msg;
  a.post = r.trace[event].msg;
  r.annotations.push_back(a);
}

}  // namespace

Term state_tag() { return Term::tag("tg0"); }

Term envelope_tag(int i) {
  if (i < 1 || i > 9) throw std::out_of_range("envelope tags are g1..g9");
  return Term::tag("g" + std::to_string(i));
}

Protocol envelope_protocol(bool replay_protection) {
  const Term s0 = pcr_boot_value();
  auto g = envelope_tag;
  std::vector<Role> roles;

  {
    Term k = V("k", Sort::S);
    Role r = make_role("boot", {k}, {Event::recv(g(3)), Event::send(st(s0, k))});
    r.non_orig = {k};
    annotate_role(r, 1, std::nullopt);
    roles.push_back(std::move(r));
  }
  {
    Term k = V("k", Sort::S), esk = V("esk", Sort::S), p = V("p", Sort::Top), t = V("t", Sort::Top);
    Role r;
    if (replay_protection) {
      Term sid = V("sid", Sort::D), tpmk = V("tpmk", Sort::A);
      r = make_role("extend", {sid, tpmk, esk, k, p, t},
                    {Event::recv(Term::tuple({g(4), tpmk, Term::enc(esk, tpmk)})), Event::send(Term::pair(g(4), sid)),
                     Event::recv(Term::enc(Term::tuple({g(5), t, sid}), esk)), Event::recv(st(p, k)),
                     Event::send(st(Term::hash(Term::pair(t, p)), k))});
      r.uniq_orig = {sid};
      annotate_role(r, 4, 3);
    } else {
      r = make_role("extend", {esk, k, p, t},
                    {Event::recv(Term::enc(Term::pair(g(5), t), esk)), Event::recv(st(p, k)),
                     Event::send(st(Term::hash(Term::pair(t, p)), k))});
      annotate_role(r, 2, 1);
    }
    r.non_orig = {k};
    roles.push_back(std::move(r));
  }
  {
    Term k = V("k", Sort::S), aik = V("aik", Sort::A), p = V("p", Sort::Top), n = V("n", Sort::Top);
    Role r = make_role("quote", {k, aik, p, n},
                       {Event::recv(Term::pair(g(6), n)), Event::recv(st(p, k)), Event::send(st(p, k)),
                        Event::send(Term::enc(Term::tuple({g(6), p, n}), aik))});
    r.non_orig = {k, aik};
    annotate_role(r, 2, 1);
    roles.push_back(std::move(r));
  }
  {
    Term m = V("m", Sort::Top), kp = V("kp", Sort::A), aik = V("aik", Sort::A), k = V("k", Sort::S),
         p = V("p", Sort::Top);
    Role r = make_role("decrypt", {m, kp, aik, k, p},
                       {Event::recv(Term::pair(g(7), Term::enc(m, kp))),
                        Event::recv(Term::enc(Term::tuple({g(8), kp, p}), aik)), Event::recv(st(p, k)),
                        Event::send(st(p, k)), Event::send(m)});
    r.non_orig = {k, aik};
    annotate_role(r, 3, 2);
    roles.push_back(std::move(r));
  }
  {
    Term kp = V("kp", Sort::A), aik = V("aik", Sort::A), t = V("t", Sort::Top);
    Role r = make_role("createkey", {kp, aik, t},
                       {Event::recv(Term::pair(g(9), t)), Event::send(Term::enc(Term::tuple({g(8), kp, t}), aik))});
    r.non_orig = {Term::inv(kp), aik};
    r.uniq_orig = {kp};
    roles.push_back(std::move(r));
  }
  {
    Term v = V("v", Sort::D), esk = V("esk", Sort::S), k = V("k", Sort::A), aik = V("aik", Sort::A),
         n = V("n", Sort::E);
    Term obtain = Term::hash(Term::pair(g(1), Term::hash(Term::pair(n, s0))));
    Trace tail = {Event::send(Term::pair(g(9), obtain)), Event::recv(Term::enc(Term::tuple({g(8), k, obtain}), aik)),
                  Event::send(Term::enc(v, k))};
    Role r;
    if (replay_protection) {
      Term sid = V("sid", Sort::D), tpmk = V("tpmk", Sort::A);
      Trace trace = {Event::send(Term::tuple({g(4), tpmk, Term::enc(esk, tpmk)})), Event::recv(Term::pair(g(4), sid)),
                     Event::send(Term::enc(Term::tuple({g(5), n, sid}), esk))};
      trace.insert(trace.end(), tail.begin(), tail.end());
      r = make_role("alice", {sid, v, esk, k, tpmk, aik, n}, std::move(trace));
    } else {
      Trace trace = {Event::send(Term::enc(Term::pair(g(5), n), esk))};
      trace.insert(trace.end(), tail.begin(), tail.end());
      r = make_role("alice", {v, esk, k, aik, n}, std::move(trace));
    }
    // Nonce and secret are fresh; so is the session key when there is a
    // session, otherwise esk is a long-term key shared with the TPM.
    r.uniq_orig = {n, v};
    if (replay_protection) r.uniq_orig.push_back(esk);
    roles.push_back(std::move(r));
  }
  {
    Term x = V("x", Sort::Top);
    Role r = make_role("listener", {x}, {Event::recv(x), Event::send(x)});
    r.kind = RoleKind::Listener;
    roles.push_back(std::move(r));
  }
  Protocol p(replay_protection ? "envelope" : "envelope-weak", std::move(roles));
  p.add_adversary_roles();
  return p;
}

Term encode_state(const MachineState& m, const Term& k) { return st(pcr(m), k); }

std::optional<DecodedState> decode_state_any(const Term& t) {
  if (t.kind() != Kind::Enc || t.arg(1).kind() != Kind::Hash) return std::nullopt;
  const Term& body = t.arg(0);
  if (body.kind() != Kind::Pair || body.arg(0) != state_tag()) return std::nullopt;
  auto m = pcr_inverse(body.arg(1));
  if (!m) return std::nullopt;
  return DecodedState{*m, t.arg(1).arg(0)};
}

std::optional<MachineState> decode_state(const Term& t, const Term& k) {
  auto d = decode_state_any(t);
  if (!d || d->key != k) return std::nullopt;
  return d->state;
}

namespace {

using AnnoMap = std::map<std::size_t, NodeAnnotation>;

std::optional<AnnoMap> role_annotations(const Role& role, const Trace& trace) {
  auto sigma = role_instance(role, trace);
  if (!sigma) return std::nullopt;
  AnnoMap out;
  for (const auto& a : role.annotations) {
    if (a.event >= trace.size()) continue;
    NodeAnnotation na{std::nullopt, sigma->apply(a.post)};
    if (a.pre) na.pre = sigma->apply(*a.pre);
    out.emplace(a.event, std::move(na));
  }
  return out;
}

bool same(const AnnoMap& a, const AnnoMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [i, x] : a) {
    auto it = b.find(i);
    if (it == b.end() || it->second.pre != x.pre || it->second.post != x.post) return false;
  }
  return true;
}

}  // namespace

std::map<Node, NodeAnnotation> annotate(const Bundle& b, const Protocol& p) {
  std::map<Node, NodeAnnotation> out;
  for (std::size_t s = 0; s < b.space.size(); ++s) {
    if (s >= b.roles.size()) throw AnnotationError("strand " + std::to_string(s) + " has no role");
    const Role* role = p.find(b.roles[s].role);
    if (!role) throw AnnotationError("unknown role " + b.roles[s].role);
    if (role->kind == RoleKind::Adversary) continue;
    auto mine = role_annotations(*role, b.space[s]);
    if (!mine) throw AnnotationError("strand " + std::to_string(s) + " is not an instance of " + role->name);
    for (const auto& other : p.roles()) {
      if (other.kind == RoleKind::Adversary || other.name == role->name) continue;
      auto theirs = role_annotations(other, b.space[s]);
      if (theirs && !same(*mine, *theirs))
        throw AnnotationError("strand " + std::to_string(s) + " is ambiguous between " + role->name + " and " +
                              other.name);
    }
    for (auto& [i, a] : *mine) out.emplace(Node{s, i}, std::move(a));
  }
  return out;
}

namespace {

struct Decoded {
  std::optional<MachineState> pre;
  MachineState post;
};

// Decodes both ends under the post-state key; none when the denoted set is empty.
std::optional<Decoded> decode_annotation(const NodeAnnotation& a) {
  auto post = decode_state_any(a.post);
  if (!post) return std::nullopt;
  Decoded d{std::nullopt, post->state};
  if (a.pre) {
    auto pre = decode_state(*a.pre, post->key);
    if (!pre || !step(*pre, post->state)) return std::nullopt;
    d.pre = *pre;
  }
  return d;
}

}  // namespace

bool annotation_admits(const NodeAnnotation& a, const MachineState& m0, const MachineState& m1) {
  auto d = decode_annotation(a);
  if (!d) return false;
  if (d->pre && *d->pre != m0) return false;
  return d->post == m1 && step(m0, m1);
}

CompatibilityResult check_compatibility(const Bundle& b, const Protocol& p) {
  auto anno = annotate(b, p);
  std::vector<Node> nodes;
  std::map<Node, Decoded> dec;
  for (const auto& [n, a] : anno) {
    auto d = decode_annotation(a);
    if (!d) return {std::nullopt, "annotation at " + n.str() + " denotes the empty set"};
    dec.emplace(n, *d);
    nodes.push_back(n);
  }
  Precedence prec(b.space, b.comm);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (!prec.before(nodes[i], nodes[j]) && !prec.before(nodes[j], nodes[i]))
        return {std::nullopt, "annotated nodes " + nodes[i].str() + " and " + nodes[j].str() + " are unordered"};
  std::sort(nodes.begin(), nodes.end(), [&](Node x, Node y) { return prec.before(x, y); });

  CompatibilityWitness w;
  w.length = nodes.size();
  w.path.push_back(MachineState::boot());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Decoded& d = dec.at(nodes[i]);
    if (d.pre && *d.pre != w.path.back())
      return {std::nullopt, "node " + nodes[i].str() + " consumes " + d.pre->term().str() + " but the state is " +
                                w.path.back().term().str()};
    if (!step(w.path.back(), d.post))
      return {std::nullopt, "node " + nodes[i].str() + " is not a transition from the current state"};
    w.placement.emplace(nodes[i], i);
    w.path.push_back(d.post);
  }
  std::string why;
  if (!verify_witness(b, anno, w, &why)) throw std::logic_error("compatibility witness rejected: " + why);
  return {std::move(w), {}};
}

bool verify_witness(const Bundle& b, const std::map<Node, NodeAnnotation>& anno, const CompatibilityWitness& w,
                    std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (w.length != anno.size()) return fail("length differs from the number of annotated nodes");
  if (w.placement.size() != anno.size()) return fail("placement is not total");
  if (w.path.size() != w.length + 1) return fail("path length must be length + 1");
  try {
    Path checked(w.path);
  } catch (const std::invalid_argument& e) {
    return fail(e.what());
  }
  std::vector<bool> hit(w.length, false);
  for (const auto& [n, i] : w.placement) {
    if (!anno.contains(n)) return fail("placement maps an unannotated node");
    if (i >= w.length || hit[i]) return fail("placement is not a bijection");
    hit[i] = true;
  }
  Precedence prec(b.space, b.comm);
  for (const auto& [n0, i0] : w.placement)
    for (const auto& [n1, i1] : w.placement)
      if (prec.before(n0, n1) != (i0 < i1)) return fail("placement does not embed precedence at " + n0.str());
  for (const auto& [n, i] : w.placement)
    if (!annotation_admits(anno.at(n), w.path[i], w.path[i + 1])) return fail("transition not admitted at " + n.str());
  return true;
}

namespace {

void collect_extend_args(const Term& m, std::set<Term>& out) {
  for (Term cur = m; cur.kind() == Kind::Extend; cur = cur.arg(1)) out.insert(cur.arg(0));
}

}  // namespace

bool compatibility_oracle(const Bundle& b, const Protocol& p) {
  auto anno = annotate(b, p);
  std::vector<Node> nodes;
  std::set<Term> letters;
  for (const auto& [n, a] : anno) {
    nodes.push_back(n);
    for (const Term* t : {&a.post, a.pre ? &*a.pre : nullptr}) {
      if (!t) continue;
      if (auto d = decode_state_any(*t)) collect_extend_args(d->state.term(), letters);
    }
  }
  const std::size_t len = nodes.size();
  Precedence prec(b.space, b.comm);
  std::vector<std::size_t> f(len);
  std::iota(f.begin(), f.end(), 0);
  std::vector<Term> alphabet(letters.begin(), letters.end());
  do {
    bool embeds = true;
    for (std::size_t i = 0; i < len && embeds; ++i)
      for (std::size_t j = 0; j < len && embeds; ++j)
        if (i != j && prec.before(nodes[i], nodes[j]) != (f[i] < f[j])) embeds = false;
    if (!embeds) continue;
    PathEnumerator paths(len + 1, alphabet);
    while (auto pi = paths.next()) {
      if (pi->size() != len + 1) continue;
      bool ok = true;
      for (std::size_t i = 0; i < len && ok; ++i) ok = annotation_admits(anno.at(nodes[i]), (*pi)[f[i]], (*pi)[f[i] + 1]);
      if (ok) return true;
    }
  } while (std::next_permutation(f.begin(), f.end()));
  return false;
}

// ---------------------------------------------------------------------------

namespace {

Term test_key() { return Term::atom(Sort::S, "k"); }

struct Builder {
  Bundle b;
  std::vector<std::pair<Node, Term>> states;  // state transmissions and their pcr values

  void add(const std::string& role, Trace trace, const std::vector<std::size_t>& inputs, Term post_value) {
    std::size_t s = b.space.size();
    b.space.push_back(std::move(trace));
    b.roles.push_back({role, {}});
    std::size_t r = 0;
    for (std::size_t i = 0; i < b.space[s].size(); ++i)
      if (!b.space[s][i].is_send()) b.comm.insert({states[inputs[r++]].first, Node{s, i}});
    states.push_back({Node{s, b.space[s].size() - 1}, std::move(post_value)});
  }
};

// Choice c over the strands that may follow `states.size()` existing ones:
// 0 boot, 1 forge, then extend(t, i) per alphabet letter, pass(i), sync(i, j).
std::size_t choice_count(std::size_t existing, std::size_t letters) {
  return 2 + existing * (letters + 1) + existing * existing;
}

void apply_choice(Builder& bld, std::size_t c, const std::vector<Term>& alphabet) {
  const Term k = test_key();
  const std::size_t e = bld.states.size();
  if (c == 0) {
    bld.add("boot", {Event::send(st(pcr_boot_value(), k))}, {}, pcr_boot_value());
    return;
  }
  if (c == 1) {
    Term junk = Term::atom(Sort::D, "junk");
    bld.add("forge", {Event::send(st(junk, k))}, {}, junk);
    return;
  }
  c -= 2;
  if (c < e * alphabet.size()) {
    std::size_t i = c / alphabet.size();
    const Term& t = alphabet[c % alphabet.size()];
    Term p = bld.states[i].second;
    Term q = Term::hash(Term::pair(t, p));
    bld.add("extend", {Event::recv(st(p, k)), Event::send(st(q, k))}, {i}, q);
    return;
  }
  c -= e * alphabet.size();
  if (c < e) {
    Term p = bld.states[c].second;
    bld.add("pass", {Event::recv(st(p, k)), Event::send(st(p, k))}, {c}, p);
    return;
  }
  c -= e;
  std::size_t i = c / e, j = c % e;
  Term p = bld.states[i].second;
  Term q = bld.states[j].second;
  bld.add("sync", {Event::recv(st(p, k)), Event::recv(st(q, k)), Event::send(st(p, k))}, {i, j}, p);
}

void enumerate_from(Builder& bld, std::size_t max_annotated, const std::vector<Term>& alphabet,
                    const std::function<void(const Bundle&)>& visit) {
  if (!bld.states.empty()) visit(bld.b);
  if (bld.states.size() == max_annotated) return;
  std::size_t n = choice_count(bld.states.size(), alphabet.size());
  for (std::size_t c = 0; c < n; ++c) {
    Builder next = bld;
    apply_choice(next, c, alphabet);
    enumerate_from(next, max_annotated, alphabet, visit);
  }
}

}  // namespace

Protocol compat_test_protocol() {
  Term k = V("k", Sort::S), p = V("p", Sort::Top), q = V("q", Sort::Top), t = V("t", Sort::Top),
       x = V("x", Sort::Top);
  std::vector<Role> roles;
  Role boot = make_role("boot", {k}, {Event::send(st(pcr_boot_value(), k))});
  annotate_role(boot, 0, std::nullopt);
  roles.push_back(boot);
  Role ext = make_role("extend", {k, p, t}, {Event::recv(st(p, k)), Event::send(st(Term::hash(Term::pair(t, p)), k))});
  annotate_role(ext, 1, 0);
  roles.push_back(ext);
  Role pass = make_role("pass", {k, p}, {Event::recv(st(p, k)), Event::send(st(p, k))});
  annotate_role(pass, 1, 0);
  roles.push_back(pass);
  Role sync = make_role("sync", {k, p, q}, {Event::recv(st(p, k)), Event::recv(st(q, k)), Event::send(st(p, k))});
  annotate_role(sync, 2, 0);
  roles.push_back(sync);
  Role forge = make_role("forge", {k, x}, {Event::send(st(x, k))});
  annotate_role(forge, 0, std::nullopt);
  roles.push_back(forge);
  Protocol out("tpm-compat", std::move(roles));
  out.add_adversary_roles();
  return out;
}

void enumerate_compat_bundles(std::size_t max_annotated, const std::vector<Term>& alphabet,
                              const std::function<void(const Bundle&)>& visit) {
  Builder bld;
  enumerate_from(bld, max_annotated, alphabet, visit);
}

Bundle random_compat_bundle(std::mt19937_64& rng, std::size_t max_annotated, const std::vector<Term>& alphabet) {
  std::uniform_int_distribution<std::size_t> count(1, max_annotated);
  std::size_t n = count(rng);
  Builder bld;
  for (std::size_t i = 0; i < n; ++i) {
    // Boot and forge would dominate the early choices; bias toward growth.
    std::size_t total = choice_count(i, alphabet.size());
    std::size_t c;
    if (i == 0) {
      c = std::uniform_int_distribution<std::size_t>(0, 9)(rng) == 0 ? 1 : 0;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, total + 1);
      c = pick(rng);
      if (c >= total) c = std::uniform_int_distribution<std::size_t>(2, total - 1)(rng);
    }
    apply_choice(bld, c, alphabet);
  }
  return bld.b;
}

}  // namespace sst
