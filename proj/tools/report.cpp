#include "report.hpp"

namespace sst::report {

Json header(const std::string& command) {
  Json j;
  j["format_version"] = std::string(kFormatVersion);
  j["command"] = command;
  return j;
}

Json bounds(const SearchBounds& b) {
  return Json{{"max_strands", b.max_strands}, {"max_height", b.max_height}, {"max_depth", b.max_depth},
              {"max_tree", b.max_tree}};
}

Json node(Node n) { return Json::array({n.strand, n.index}); }

Json stats(const TreeStats& s) {
  return Json{{"explored", s.explored},       {"shapes", s.shapes},   {"dead_leaves", s.dead_leaves},
              {"duplicates", s.duplicates},   {"bounded", s.bounded}, {"max_depth", s.max_depth}};
}

Json analysis(const AnalysisResult& r, bool with_tree) {
  Json j;
  j["input"] = print_skeleton(r.input);
  j["dead"] = r.dead;
  j["incomplete"] = r.incomplete;
  j["stats"] = stats(r.stats);
  Json shapes = Json::array();
  for (const auto& sk : r.shapes) shapes.push_back(Json{{"strands", sk.strands.size()}, {"skeleton", print_skeleton(sk)}});
  j["shapes"] = shapes;
  if (with_tree) {
    Json tree = Json::array();
    for (const auto& e : r.tree) {
      Json t{{"id", e.id}, {"depth", e.depth}, {"strands", e.strands}, {"outcome", e.outcome}, {"children", e.children}};
      t["parent"] = e.parent ? Json(*e.parent) : Json(nullptr);
      t["via"] = e.via;
      t["target"] = e.target ? node(*e.target) : Json(nullptr);
      tree.push_back(t);
    }
    j["tree"] = tree;
  }
  return j;
}

Json violations(const std::vector<Violation>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) {
    Json j{{"kind", std::string(violation_name(v.kind))}, {"node", node(v.node)}};
    j["other"] = v.other ? node(*v.other) : Json(nullptr);
    j["detail"] = v.detail;
    out.push_back(j);
  }
  return out;
}

Json compat_witness(const CompatibilityWitness& w) {
  Json placement = Json::array();
  for (const auto& [n, i] : w.placement) placement.push_back(Json{{"node", node(n)}, {"position", i}});
  Json path = Json::array();
  for (const auto& m : w.path) path.push_back(m.term().str());
  return Json{{"length", w.length}, {"placement", placement}, {"path", path}};
}

namespace {

Json site(const ExtendSite& s) {
  return Json{{"strand", s.strand}, {"pre", s.pre},          {"post", s.post},
              {"state", s.m.term().str()}, {"value", s.t.str()}, {"key", s.key.str()}};
}

}  // namespace

Json bridge(const BridgeResult& b) {
  Json j{{"applicable", b.applicable}};
  j["split"] = b.split ? Json::array({site(b.split->first), site(b.split->second)}) : Json(nullptr);
  j["labels"] = b.labels;
  j["diagnostic"] = b.diagnostic;
  return j;
}

Json evidence(const VerifyResult& r, const Protocol& p) {
  Json j;
  j["verdict"] = verdict_name(r.verdict);
  j["reason"] = r.reason;
  j["max_strands"] = r.max_strands;
  Json passes = Json::array();
  for (const auto& [ms, v] : r.passes) passes.push_back(Json{{"max_strands", ms}, {"verdict", verdict_name(v)}});
  j["earlier_passes"] = passes;
  j["incomplete_steps"] = r.incomplete_steps;
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    Json e{{"id", s.id}};
    e["parent"] = s.parent ? Json(*s.parent) : Json(nullptr);
    e["parent_shape"] = s.parent_shape ? Json(*s.parent_shape) : Json(nullptr);
    e["label"] = s.label;
    e["round"] = s.round;
    e["analysis"] = analysis(s.result, false);
    e["sentence"] = s.sentence ? Json(print_formula(s.sentence->as_formula(), p)) : Json(nullptr);
    e["sentence_unsound"] = s.sentence && s.sentence->unsound;
    e["shape_outcomes"] = s.shape_outcomes;
    Json bridges = Json::array();
    for (const auto& b : s.bridges) bridges.push_back(bridge(b));
    e["bridges"] = bridges;
    steps.push_back(e);
  }
  j["steps"] = steps;
  if (r.counterexample) {
    const auto& c = *r.counterexample;
    j["counterexample"] = Json{{"skeleton", print_skeleton(c.skeleton)},
                               {"bundle", print_bundle(c.witness.bundle, p)},
                               {"compatibility", compat_witness(c.compat)}};
  } else {
    j["counterexample"] = nullptr;
  }
  return j;
}

}  // namespace sst::report
