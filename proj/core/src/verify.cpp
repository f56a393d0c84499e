#include "strandstate/verify.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace sst {

namespace {

struct ExtendParams {
  std::string value, prior, key;
};

// Parameter names of an annotation whose post state is st(#(t, p), k).
std::optional<ExtendParams> extend_params(const RoleAnnotation& a) {
  const Term& post = a.post;
  if (post.kind() != Kind::Enc || post.arg(1).kind() != Kind::Hash || !post.arg(1).arg(0).is_var()) return std::nullopt;
  const Term& body = post.arg(0);
  if (body.kind() != Kind::Pair || body.arg(1).kind() != Kind::Hash) return std::nullopt;
  const Term& hashed = body.arg(1).arg(0);
  if (hashed.kind() != Kind::Pair || !hashed.arg(0).is_var() || !hashed.arg(1).is_var()) return std::nullopt;
  return ExtendParams{hashed.arg(0).name(), hashed.arg(1).name(), post.arg(1).arg(0).name()};
}

std::vector<Node> annotated_nodes(const Skeleton& sk) {
  std::vector<Node> out;
  for (std::size_t s = 0; s < sk.strands.size(); ++s) {
    const Role* r = sk.protocol().find(sk.strands[s].role);
    for (const auto& a : r->annotations)
      if (a.event < sk.strands[s].height) out.push_back(Node{s, a.event});
  }
  return out;
}

}  // namespace

std::vector<ExtendSite> extend_sites(const Skeleton& sk) {
  std::vector<ExtendSite> out;
  for (std::size_t s = 0; s < sk.strands.size(); ++s) {
    const SkStrand& st = sk.strands[s];
    const Role* r = sk.protocol().find(st.role);
    for (const auto& a : r->annotations) {
      if (!a.pre_event || a.event >= st.height) continue;
      auto pre = decode_state_any(st.trace[*a.pre_event].msg);
      auto post = decode_state_any(st.trace[a.event].msg);
      if (!pre || !post || pre->key != post->key) continue;
      const Term& v = post->state.term();
      if (v.kind() != Kind::Extend || v.arg(1) != pre->state.term()) continue;
      out.push_back({s, *a.pre_event, a.event, pre->state, v.arg(0), pre->key});
    }
  }
  return out;
}

BridgeResult bridge_refine(const Skeleton& shape) {
  BridgeResult out;
  const auto sites = extend_sites(shape);
  const Precedence prec = shape.precedence();
  for (std::size_t i = 0; i < sites.size() && !out.split; ++i)
    for (std::size_t j = i + 1; j < sites.size() && !out.split; ++j) {
      const auto& a = sites[i];
      const auto& b = sites[j];
      if (a.strand == b.strand) continue;
      if (prec.before(Node{a.strand, a.post}, Node{b.strand, b.pre}) ||
          prec.before(Node{b.strand, b.post}, Node{a.strand, a.pre}))
        continue;
      out.split = std::make_pair(a, b);
    }
  if (!out.split) {
    out.diagnostic = sites.size() < 2 ? "fewer than two extend instances" : "extend instances already ordered";
    return out;
  }
  out.applicable = true;

  const auto& [first, second] = *out.split;
  for (int orient = 0; orient < 2; ++orient) {
    const ExtendSite& z0 = orient == 0 ? first : second;
    const ExtendSite& z1 = orient == 0 ? second : first;
    const Term written = Term::extend(z0.t, z0.m.term());
    Skeleton sk = shape;
    std::string label = "edge";
    if (subterm(written, z1.m.term())) {
      sk.order.insert({Node{z0.strand, z0.post}, Node{z1.strand, z1.pre}});
    } else if (z1.m.is_boot()) {
      // The state was reset in between.
      const Role* boot = nullptr;
      for (const auto& r : shape.protocol().roles())
        for (const auto& a : r.annotations)
          if (!a.pre_event && r.kind == RoleKind::Regular) boot = &r;
      if (!boot || boot->params.size() != 1) continue;
      const std::size_t ev = boot->annotations.front().event;
      std::size_t z = sk.add_strand(boot->name, ev + 1, {{boot->params[0].name(), z0.key}});
      sk.order.insert({Node{z0.strand, z0.post}, Node{z, 0}});
      sk.order.insert({Node{z, ev}, Node{z1.strand, z1.pre}});
      label = "boot";
    } else {
      // m1 = ex(t, m'): the extend that last wrote m1 runs in between.
      const Term& m1 = z1.m.term();
      const Term& t = m1.arg(0);
      const SkStrand& src = shape.strands[z0.strand];
      const Role& role = *shape.protocol().find(src.role);
      const RoleAnnotation* anno = role.annotation_at(z0.post);
      auto names = anno ? extend_params(*anno) : std::nullopt;
      if (!names) continue;
      std::size_t z = sk.add_strand(src.role, z0.post + 1,
                                    {{names->value, t}, {names->prior, pcr(MachineState(m1.arg(1)))}, {names->key, z0.key}});
      sk.order.insert({Node{z0.strand, z0.post}, Node{z, z0.pre}});
      sk.order.insert({Node{z, z0.post}, Node{z1.strand, z1.pre}});
      label = "extend " + t.str();
    }
    if (auto norm = normalize(std::move(sk))) {
      out.enriched.push_back(std::move(*norm));
      out.labels.push_back(label);
    }
  }
  if (out.enriched.empty()) out.diagnostic = "every ordering of the split contradicts the skeleton";
  return out;
}

std::optional<Linearization> find_compatible_linearization(const Skeleton& shape, std::size_t limit) {
  const auto nodes = annotated_nodes(shape);
  const Precedence prec = shape.precedence();
  std::vector<Node> order;
  std::vector<bool> used(nodes.size(), false);
  std::size_t tried = 0;
  std::optional<Linearization> found;

  auto attempt = [&]() {
    Skeleton sk = shape;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const Node a = order[i], b = order[i + 1];
      if (a.strand == b.strand || prec.before(a, b)) continue;
      // Force a before b through the last reception before b.
      std::optional<Node> r;
      for (std::size_t k = b.index; k-- > 0 && !r;)
        if (!sk.event(Node{b.strand, k}).is_send()) r = Node{b.strand, k};
      if (!r) return;
      sk.order.insert({a, *r});
    }
    auto norm = normalize(std::move(sk));
    if (!norm) return;
    try {
      WitnessBundle w = to_bundle(*norm);
      auto c = check_compatibility(w.bundle, norm->protocol());
      if (c) found = Linearization{std::move(*norm), std::move(w), std::move(*c.witness)};
    } catch (const std::exception&) {
    }
  };

  std::function<void()> extend = [&]() {
    if (found || tried >= limit) return;
    if (order.size() == nodes.size()) {
      ++tried;
      attempt();
      return;
    }
    for (std::size_t i = 0; i < nodes.size() && !found; ++i) {
      if (used[i]) continue;
      bool ready = true;
      for (std::size_t j = 0; j < nodes.size() && ready; ++j)
        if (!used[j] && j != i && prec.before(nodes[j], nodes[i])) ready = false;
      if (!ready) continue;
      used[i] = true;
      order.push_back(nodes[i]);
      extend();
      order.pop_back();
      used[i] = false;
    }
  };
  extend();
  return found;
}

Skeleton envelope_goal_skeleton(bool replay_protection) {
  auto p = std::make_shared<Protocol>(envelope_protocol(replay_protection));
  Skeleton sk(p);
  Term v = Term::var("v", Sort::D), esk = Term::var("esk", Sort::S), k = Term::var("k", Sort::A),
       aik = Term::var("aik", Sort::A), n = Term::var("n", Sort::E);
  std::map<std::string, Term> args{{"v", v}, {"esk", esk}, {"k", k}, {"aik", aik}, {"n", n}};
  Term tpmk = Term::var("tpmk", Sort::A);
  if (replay_protection) {
    args["sid"] = Term::var("sid", Sort::D);
    args["tpmk"] = tpmk;
  }
  const std::size_t height = replay_protection ? 6 : 4;
  const std::size_t a = sk.add_strand("alice", height, args);
  sk.add_strand("listener", 2, {{"x", v}});
  Term refused = Term::hash(Term::pair(envelope_tag(2), Term::hash(Term::pair(n, pcr_boot_value()))));
  Term refusal = Term::enc(Term::tuple({envelope_tag(6), refused, Term::enc(v, k)}), aik);
  sk.add_strand("listener", 2, {{"x", refusal}});
  sk.non = {aik};
  const std::size_t off = replay_protection ? 2 : 0;
  if (replay_protection) {
    sk.non.insert(Term::inv(tpmk));
    sk.uniq[esk] = Node{a, 0};
  } else {
    sk.non.insert(esk);
  }
  sk.uniq[n] = Node{a, off};
  sk.uniq[v] = Node{a, off + 3};
  return sk;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Verified:
      return "VERIFIED";
    case Verdict::Falsified:
      return "FALSIFIED";
    case Verdict::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

namespace {

VerifyResult verify_once(const Skeleton& goal, const VerifyOptions& opts) {
  VerifyResult out;
  out.max_strands = opts.bounds.max_strands;
  bool unresolved = false;

  std::function<void(const Skeleton&, std::optional<std::size_t>, std::optional<std::size_t>, std::string,
                     std::size_t)>
      run = [&](const Skeleton& sk, std::optional<std::size_t> parent, std::optional<std::size_t> parent_shape,
                std::string label, std::size_t round) {
        if (out.counterexample) return;
        const std::size_t id = out.steps.size();
        {
          EvidenceStep step;
          step.id = id;
          step.parent = parent;
          step.parent_shape = parent_shape;
          step.label = std::move(label);
          step.round = round;
          step.skeleton = sk;
          step.result = search(sk, opts.bounds);
          if (step.result.incomplete) ++out.incomplete_steps;
          step.sentence = shape_analysis_sentence(sk, step.result, true);
          out.steps.push_back(std::move(step));
        }
        if (out.steps[id].result.incomplete) unresolved = true;
        const std::vector<Skeleton> shapes = out.steps[id].result.shapes;
        for (std::size_t i = 0; i < shapes.size(); ++i) {
          if (out.counterexample) return;
          BridgeResult br;
          if (opts.bridge) br = bridge_refine(shapes[i]);
          if (br.applicable) {
            if (br.enriched.empty()) {
              out.steps[id].shape_outcomes.push_back("eliminated");
              out.steps[id].bridges.push_back(std::move(br));
              continue;
            }
            if (round + 1 > opts.max_rounds) {
              out.steps[id].shape_outcomes.push_back("round-limit");
              out.steps[id].bridges.push_back(std::move(br));
              unresolved = true;
              continue;
            }
            out.steps[id].shape_outcomes.push_back("bridged");
            out.steps[id].bridges.push_back(br);
            for (std::size_t j = 0; j < br.enriched.size(); ++j) run(br.enriched[j], id, i, br.labels[j], round + 1);
            continue;
          }
          out.steps[id].bridges.push_back(std::move(br));
          if (auto lin = find_compatible_linearization(shapes[i])) {
            out.steps[id].shape_outcomes.push_back("counterexample");
            out.counterexample = std::move(*lin);
            return;
          }
          out.steps[id].shape_outcomes.push_back("fixpoint");
          unresolved = true;
        }
      };

  run(goal, std::nullopt, std::nullopt, "goal", 0);
  if (out.counterexample) {
    out.verdict = Verdict::Falsified;
    out.reason = "a shape stable under refinement grounds to a bundle compatible with the state machine";
  } else if (unresolved) {
    out.verdict = Verdict::Inconclusive;
    out.reason = out.incomplete_steps ? "search bounds were reached" : "a surviving shape has no compatible linearization";
  } else {
    out.verdict = Verdict::Verified;
    out.reason = "every branch is dead";
  }
  return out;
}

}  // namespace

VerifyResult verify_goal(const Skeleton& goal, const VerifyOptions& opts) {
  if (!opts.deepen || opts.step == 0 || opts.first_strands >= opts.bounds.max_strands) return verify_once(goal, opts);
  std::vector<std::pair<std::size_t, Verdict>> passes;
  for (std::size_t ms = opts.first_strands;; ms = std::min(ms + opts.step, opts.bounds.max_strands)) {
    VerifyOptions o = opts;
    o.bounds.max_strands = ms;
    VerifyResult r = verify_once(goal, o);
    if (r.verdict != Verdict::Inconclusive || ms == opts.bounds.max_strands) {
      r.passes = std::move(passes);
      return r;
    }
    passes.emplace_back(ms, r.verdict);
  }
}

}  // namespace sst
