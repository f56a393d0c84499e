// strandstate: command-line front end.
//
// Exit status: 0 verified or clean, 1 falsified or a failed check,
// 2 inconclusive or incomplete, 3 input errors, 4 anything else.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "report.hpp"
#include "strandstate/envelope.hpp"
#include "strandstate/format.hpp"
#include "strandstate/logic.hpp"
#include "strandstate/state.hpp"
#include "strandstate/verify.hpp"

namespace {

using sst::report::Json;

constexpr int kOk = 0, kFalsified = 1, kInconclusive = 2, kInputError = 3, kOtherError = 4;
constexpr const char* kToolVersion = "0.3.0";

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const sst::Protocol> builtin_protocol(const std::string& name) {
  if (name == "envelope") return std::make_shared<sst::Protocol>(sst::envelope_protocol(true));
  if (name == "envelope-weak") return std::make_shared<sst::Protocol>(sst::envelope_protocol(false));
  if (name == "tpm-compat") return std::make_shared<sst::Protocol>(sst::compat_test_protocol());
  return nullptr;
}

// An explicit protocol file wins; otherwise the name the input refers to must
// be a built-in one.
std::shared_ptr<const sst::Protocol> resolve_protocol(const std::string& file, const std::string& referring_text) {
  if (!file.empty()) return std::make_shared<sst::Protocol>(sst::parse_protocol(slurp(file)));
  std::string name = sst::referenced_protocol(referring_text);
  if (auto p = builtin_protocol(name)) return p;
  throw InputError("protocol " + name + " is not built in; pass --protocol FILE");
}

// STRANDSTATE_BOUNDS="strands=9,height=6,depth=24,tree=200000"
sst::SearchBounds env_bounds() {
  sst::SearchBounds b;
  const char* env = std::getenv("STRANDSTATE_BOUNDS");
  if (!env) return b;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("STRANDSTATE_BOUNDS: expected key=value, got " + item);
    std::string key = item.substr(0, eq);
    std::size_t value = 0;
    try {
      value = std::stoul(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw InputError("STRANDSTATE_BOUNDS: bad number in " + item);
    }
    if (value == 0) throw InputError("STRANDSTATE_BOUNDS: bounds must be positive");
    if (key == "strands") b.max_strands = value;
    else if (key == "height") b.max_height = value;
    else if (key == "depth") b.max_depth = value;
    else if (key == "tree") b.max_tree = value;
    else throw InputError("STRANDSTATE_BOUNDS: unknown key " + key);
  }
  return b;
}

struct BoundFlags {
  std::size_t strands = 0, height = 0, depth = 0, tree = 0;

  void attach(CLI::App* app) {
    app->add_option("--max-strands", strands, "Strand bound")->check(CLI::PositiveNumber);
    app->add_option("--max-height", height, "Strand height bound")->check(CLI::PositiveNumber);
    app->add_option("--max-depth", depth, "Refinement depth bound")->check(CLI::PositiveNumber);
    app->add_option("--max-tree", tree, "Refinement tree size bound")->check(CLI::PositiveNumber);
  }

  sst::SearchBounds resolve() const {
    sst::SearchBounds b = env_bounds();
    if (strands) b.max_strands = strands;
    if (height) b.max_height = height;
    if (depth) b.max_depth = depth;
    if (tree) b.max_tree = tree;
    return b;
  }
};

std::vector<sst::Term> text_alphabet(std::size_t n, const std::string& stem, sst::Sort sort) {
  std::vector<sst::Term> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sst::Term::atom(sort, stem + std::to_string(i)));
  return out;
}

// A file of (tags ...) and (consts ...) forms followed by terms.
std::vector<sst::Term> read_alphabet(const std::string& path) {
  sst::Scope scope;
  std::vector<sst::Term> out;
  for (const auto& e : sst::read_sexprs(slurp(path))) {
    if (e.head() == "tags") {
      for (std::size_t i = 1; i < e.items.size(); ++i) scope.emplace(e.items[i].text, sst::Term::tag(e.items[i].text));
    } else if (e.head() == "consts") {
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        const auto& d = e.items[i];
        auto sort = d.is_list() && d.items.size() == 2 ? sst::parse_sort(d.items[1].text) : std::nullopt;
        if (!sort || !sst::is_atom_sort(*sort))
          throw sst::ParseError(sst::ParseError::Category::Sort, d.pos, "expected (name atom-sort)");
        scope.emplace(d.items[0].text, sst::Term::atom(*sort, d.items[0].text));
      }
    } else {
      out.push_back(sst::parse_term(e, scope));
    }
  }
  if (out.empty()) throw InputError(path + " lists no terms");
  return out;
}

// Two atoms per atom sort used by the protocol's regular role parameters.
std::vector<sst::Term> default_bundle_alphabet(const sst::Protocol& p) {
  std::set<sst::Sort> sorts;
  for (const auto& r : p.roles())
    if (r.kind == sst::RoleKind::Regular)
      for (const auto& v : r.params)
        if (sst::is_atom_sort(v.sort())) sorts.insert(v.sort());
  std::vector<sst::Term> out;
  for (sst::Sort s : sorts) {
    std::string stem(1, sst::sort_name(s)[0]);
    for (auto& t : text_alphabet(2, stem, s)) out.push_back(t);
  }
  return out;
}

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

int analyze_exit(const sst::AnalysisResult& r) { return r.incomplete ? kInconclusive : kOk; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strand-space analysis of stateful protocols with TPM state refinement"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("strandstate ") + kToolVersion + ", format " +
                                        std::string(sst::kFormatVersion));
  std::string format = "text";
  int parallel = 1;
  auto add_format = [&](CLI::App* sub, bool dot) {
    std::vector<std::string> choices{"text", "json"};
    if (dot) choices.push_back("dot");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember(choices));
    sub->add_flag_callback("--json", [&] { format = "json"; }, "Same as --format json");
    if (dot) sub->add_flag_callback("--dot", [&] { format = "dot"; }, "Same as --format dot");
  };

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Enrich-by-need search from a skeleton");
  std::string protocol_file, skeleton_file;
  BoundFlags analyze_bounds;
  bool sentence = false, allow_incomplete = false, with_tree = false;
  analyze->add_option("protocol", protocol_file, "Protocol file")->required();
  analyze->add_option("skeleton", skeleton_file, "Skeleton file")->required();
  analyze_bounds.attach(analyze);
  analyze->add_flag("--sentence", sentence, "Also print the shape analysis sentence");
  analyze->add_flag("--allow-incomplete", allow_incomplete, "Print the sentence even when bounds were hit");
  analyze->add_flag("--tree", with_tree, "Include the refinement tree in JSON output");
  analyze->add_option("--parallel", parallel, "Branch workers (the search runs on one)")->check(CLI::PositiveNumber);
  add_format(analyze, true);

  // verify-goal
  auto* verify = app.add_subcommand("verify-goal", "Hybrid verification of the envelope secrecy goal");
  std::string goal = "envelope", replay = "on", evidence_file;
  BoundFlags verify_bounds;
  bool no_bridge = false, no_deepen = false;
  std::size_t max_rounds = 4, first_strands = 8;
  verify->add_option("goal", goal, "Goal name")->check(CLI::IsMember({"envelope", "envelope-weak"}));
  verify->add_option("--replay-protection", replay, "Session binding on extend requests")
      ->check(CLI::IsMember({"on", "off"}));
  verify->add_flag("--no-bridge", no_bridge, "Skip the inferred-extend refinement");
  verify->add_flag("--no-deepen", no_deepen, "Run once at --max-strands instead of deepening");
  verify->add_option("--first-strands", first_strands, "Strand bound of the first deepening pass")
      ->check(CLI::PositiveNumber);
  verify->add_option("--max-rounds", max_rounds, "Nested bridge rounds");
  verify->add_option("--evidence", evidence_file, "Write the evidence chain as JSON");
  verify->add_option("--parallel", parallel, "Branch workers (the search runs on one)")->check(CLI::PositiveNumber);
  verify_bounds.attach(verify);
  add_format(verify, false);

  // check-bundle, check-compat, check-sat
  std::string bundle_file, formula_file, protocol_opt;
  auto* check_bundle = app.add_subcommand("check-bundle", "Well-formedness and role instances of a bundle");
  check_bundle->add_option("bundle", bundle_file, "Bundle file")->required();
  auto* check_compat = app.add_subcommand("check-compat", "Compatibility of a bundle with the TPM state machine");
  check_compat->add_option("bundle", bundle_file, "Bundle file")->required();
  auto* check_sat = app.add_subcommand("check-sat", "Satisfaction of a formula in a bundle");
  check_sat->add_option("bundle", bundle_file, "Bundle file")->required();
  check_sat->add_option("formula", formula_file, "Formula file")->required();
  for (auto* sub : {check_bundle, check_compat, check_sat}) {
    sub->add_option("--protocol", protocol_opt, "Protocol file, when the input names no built-in protocol");
    add_format(sub, sub == check_bundle);
  }

  // oracle paths | bundles | compat
  auto* oracle = app.add_subcommand("oracle", "Exhaustive and randomized checks");
  oracle->require_subcommand(1);
  auto* paths = oracle->add_subcommand("paths", "Prefix Boot Extend over every bounded path");
  std::size_t max_len = 6, alphabet_size = 3;
  std::string alphabet_file;
  paths->add_option("--max-len", max_len, "Path length bound")->check(CLI::PositiveNumber);
  paths->add_option("--alphabet", alphabet_file, "File of extend values");
  paths->add_option("--alphabet-size", alphabet_size, "Number of generated extend values")->check(CLI::PositiveNumber);
  add_format(paths, false);

  auto* bundles = oracle->add_subcommand("bundles", "Every bounded bundle against the shape analysis sentence");
  std::size_t enum_strands = 3, enum_height = 3;
  bundles->add_option("protocol", protocol_file, "Protocol file")->required();
  bundles->add_option("skeleton", skeleton_file, "Skeleton file")->required();
  bundles->add_option("--max-strands", enum_strands, "Regular strands per bundle")->check(CLI::PositiveNumber);
  bundles->add_option("--max-height", enum_height, "Strand height bound")->check(CLI::PositiveNumber);
  bundles->add_option("--alphabet", alphabet_file, "File of parameter values");
  add_format(bundles, false);

  auto* compat = oracle->add_subcommand("compat", "check_compatibility against the linearization oracle");
  std::size_t max_annotated = 4, random_count = 1000, random_annotated = 6;
  std::uint64_t seed = 1;
  compat->add_option("--max-annotated", max_annotated, "Exhaustive bound on annotated strands");
  compat->add_option("--random", random_count, "Random bundles");
  compat->add_option("--random-annotated", random_annotated, "Annotated strand bound for random bundles");
  compat->add_option("--seed", seed, "Random seed");
  add_format(compat, false);

  // fmt
  auto* fmt = app.add_subcommand("fmt", "Canonical re-print of a protocol, skeleton, bundle or formula file");
  std::string fmt_file;
  fmt->add_option("file", fmt_file, "Input file")->required();
  fmt->add_option("--protocol", protocol_opt, "Protocol file, when the input names no built-in protocol");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (analyze->parsed()) {
      auto p = std::make_shared<sst::Protocol>(sst::parse_protocol(slurp(protocol_file)));
      sst::Skeleton sk = sst::parse_skeleton(slurp(skeleton_file), p);
      sst::SearchBounds b = analyze_bounds.resolve();
      sst::AnalysisResult r = sst::search(sk, b);
      std::optional<sst::ShapeAnalysisSentence> sent;
      if (sentence && (!r.incomplete || allow_incomplete)) sent = sst::shape_analysis_sentence(sk, r, allow_incomplete);
      if (format == "json") {
        Json j = sst::report::header("analyze");
        j["protocol"] = p->name();
        j["bounds"] = sst::report::bounds(b);
        j.update(sst::report::analysis(r, with_tree));
        if (sentence) j["sentence"] = sent ? Json(sst::print_formula(sent->as_formula(), *p)) : Json(nullptr);
        emit(j);
      } else if (format == "dot") {
        for (const auto& s : r.shapes) std::cout << sst::skeleton_dot(s);
      } else {
        const auto& s = r.stats;
        std::cout << "protocol " << p->name() << ": " << r.shapes.size() << " shape(s)"
                  << (r.dead ? ", dead" : "") << (r.incomplete ? ", INCOMPLETE (bounds reached)" : "") << '\n'
                  << "explored " << s.explored << ", dead leaves " << s.dead_leaves << ", duplicates "
                  << s.duplicates << ", bounded " << s.bounded << ", depth " << s.max_depth << '\n';
        for (std::size_t i = 0; i < r.shapes.size(); ++i)
          std::cout << "\n; shape " << i << '\n' << sst::print_skeleton(r.shapes[i]);
        if (sentence) {
          if (sent) std::cout << "\n; sentence\n" << sst::print_formula(sent->as_formula(), *p);
          else std::cout << "\n; no sentence: the search was incomplete\n";
        }
      }
      return analyze_exit(r);
    }

    if (verify->parsed()) {
      bool rp = goal == "envelope" && replay == "on";
      sst::Protocol p = sst::envelope_protocol(rp);
      sst::VerifyOptions opts;
      opts.bounds = verify_bounds.resolve();
      opts.bridge = !no_bridge;
      opts.max_rounds = max_rounds;
      opts.deepen = !no_deepen;
      opts.first_strands = first_strands;
      sst::VerifyResult r = sst::verify_goal(sst::envelope_goal_skeleton(rp), opts);
      Json ev = sst::report::evidence(r, p);
      if (!evidence_file.empty()) {
        std::ofstream out(evidence_file);
        if (!out) throw InputError("cannot write " + evidence_file);
        Json j = sst::report::header("verify-goal");
        j["goal"] = rp ? "envelope" : "envelope-weak";
        j["bounds"] = sst::report::bounds(opts.bounds);
        j["bridge"] = opts.bridge;
        j.update(ev);
        out << j.dump(2) << '\n';
      }
      if (format == "json") {
        Json j = sst::report::header("verify-goal");
        j["goal"] = rp ? "envelope" : "envelope-weak";
        j["bounds"] = sst::report::bounds(opts.bounds);
        j["bridge"] = opts.bridge;
        j.update(ev);
        emit(j);
      } else {
        std::cout << sst::verdict_name(r.verdict) << ": " << r.reason << '\n';
        for (const auto& [ms, v] : r.passes)
          std::cout << "pass at max-strands " << ms << ": " << sst::verdict_name(v) << '\n';
        std::cout << "evidence at max-strands " << r.max_strands << ", " << r.steps.size() << " step(s), "
                  << r.incomplete_steps << " incomplete\n";
        for (const auto& s : r.steps) {
          std::cout << "  step " << s.id;
          if (s.parent) std::cout << " <- " << *s.parent << '.' << *s.parent_shape << " [" << s.label << ']';
          std::cout << ": " << s.result.shapes.size() << " shape(s)" << (s.result.dead ? ", dead" : "")
                    << (s.result.incomplete ? ", incomplete" : "");
          for (const auto& o : s.shape_outcomes) std::cout << ' ' << o;
          std::cout << '\n';
        }
        if (r.counterexample) {
          std::cout << "\n; counterexample bundle\n"
                    << sst::print_bundle(r.counterexample->witness.bundle, p) << "; state path";
          for (const auto& m : r.counterexample->compat.path) std::cout << ' ' << m.term().str();
          std::cout << '\n';
        }
      }
      switch (r.verdict) {
        case sst::Verdict::Verified: return kOk;
        case sst::Verdict::Falsified: return kFalsified;
        case sst::Verdict::Inconclusive: return kInconclusive;
      }
    }

    if (check_bundle->parsed() || check_compat->parsed() || check_sat->parsed()) {
      std::string text = slurp(bundle_file);
      auto p = resolve_protocol(protocol_opt, text);
      sst::Bundle b = sst::parse_bundle(text, *p);
      if (check_bundle->parsed()) {
        auto vs = sst::check_bundle(b, *p);
        if (format == "json") {
          Json j = sst::report::header("check-bundle");
          j["ok"] = vs.empty();
          j["violations"] = sst::report::violations(vs);
          emit(j);
        } else if (format == "dot") {
          std::cout << sst::bundle_dot(b, *p);
        } else {
          std::cout << (vs.empty() ? "bundle is well formed" : std::to_string(vs.size()) + " violation(s)") << '\n';
          for (const auto& v : vs) std::cout << "  " << v.str() << '\n';
        }
        return vs.empty() ? kOk : kFalsified;
      }
      if (check_compat->parsed()) {
        auto vs = sst::check_bundle(b, *p);
        if (!vs.empty()) throw InputError("not a bundle of " + p->name() + ": " + vs.front().str());
        sst::CompatibilityResult c;
        try {
          c = sst::check_compatibility(b, *p);
        } catch (const sst::AnnotationError& e) {
          throw InputError(e.what());
        }
        if (format == "json") {
          Json j = sst::report::header("check-compat");
          j["compatible"] = c.witness.has_value();
          j["reason"] = c.reason;
          j["witness"] = c.witness ? sst::report::compat_witness(*c.witness) : Json(nullptr);
          emit(j);
        } else if (c) {
          std::cout << "compatible; path";
          for (const auto& m : c.witness->path) std::cout << ' ' << m.term().str();
          std::cout << '\n';
          for (const auto& [n, i] : c.witness->placement) std::cout << "  " << n.str() << " -> " << i << '\n';
        } else {
          std::cout << "incompatible: " << c.reason << '\n';
        }
        return c ? kOk : kFalsified;
      }
      sst::Formula f = sst::parse_formula(slurp(formula_file), *p);
      auto fv = sst::free_vars(f);
      auto sols = sst::solutions(b, *p, {}, fv, f, 1);
      bool sat = !sols.empty();
      if (format == "json") {
        Json j = sst::report::header("check-sat");
        j["satisfied"] = sat;
        Json a = Json::object();
        if (sat) {
          for (const auto& [z, s] : sols[0].strands) a[z] = s;
          for (const auto& [x, t] : sols[0].msg.bindings()) a[x] = t.str();
        }
        j["assignment"] = a;
        emit(j);
      } else {
        std::cout << (sat ? "satisfied" : "not satisfied") << '\n';
        if (sat) {
          for (const auto& [z, s] : sols[0].strands) std::cout << "  " << z << " = strand " << s << '\n';
          for (const auto& [x, t] : sols[0].msg.bindings()) std::cout << "  " << x << " = " << t.str() << '\n';
        }
      }
      return sat ? kOk : kFalsified;
    }

    if (paths->parsed()) {
      auto alphabet =
          alphabet_file.empty() ? text_alphabet(alphabet_size, "a", sst::Sort::E) : read_alphabet(alphabet_file);
      auto s = sst::run_prefix_boot_extend_oracle(max_len, alphabet);
      if (format == "json") {
        Json j = sst::report::header("oracle paths");
        j["max_len"] = max_len;
        j["alphabet"] = Json::array();
        for (const auto& t : alphabet) j["alphabet"].push_back(t.str());
        j["paths"] = s.paths;
        j["instances"] = s.instances;
        j["subterm_holds"] = s.subterm_holds;
        j["extend_at"] = s.extend_at;
        j["violations"] = s.violations;
        emit(j);
      } else {
        std::cout << "paths " << s.paths << ", instances " << s.instances << ", subterm disjunct " << s.subterm_holds
                  << ", extend disjunct " << s.extend_at << ", violations " << s.violations << '\n';
      }
      return s.violations ? kFalsified : kOk;
    }

    if (bundles->parsed()) {
      auto p = std::make_shared<sst::Protocol>(sst::parse_protocol(slurp(protocol_file)));
      sst::Skeleton sk = sst::parse_skeleton(slurp(skeleton_file), p);
      auto alphabet = alphabet_file.empty() ? default_bundle_alphabet(*p) : read_alphabet(alphabet_file);
      sst::SearchBounds sb = env_bounds();
      sb.max_strands = enum_strands;
      sb.max_height = enum_height;
      sst::AnalysisResult r = sst::search(sk, sb);
      auto sent = sst::shape_analysis_sentence(sk, r, true);
      std::size_t total = 0, hyp = 0, bad = 0;
      sst::enumerate_bundles(*p, {enum_strands, enum_height}, alphabet, [&](const sst::Bundle& b) {
        ++total;
        if (!sst::solutions(b, *p, {}, sent.universals, sent.hypothesis, 1).empty()) ++hyp;
        if (!sst::sentence_holds(b, *p, sent)) ++bad;
      });
      if (format == "json") {
        Json j = sst::report::header("oracle bundles");
        j["protocol"] = p->name();
        j["max_strands"] = enum_strands;
        j["max_height"] = enum_height;
        j["alphabet"] = Json::array();
        for (const auto& t : alphabet) j["alphabet"].push_back(t.str());
        j["shapes"] = r.shapes.size();
        j["incomplete"] = r.incomplete;
        j["bundles"] = total;
        j["hypothesis_holds"] = hyp;
        j["counterexamples"] = bad;
        emit(j);
      } else {
        std::cout << "shapes " << r.shapes.size() << (r.incomplete ? " (incomplete)" : "") << ", bundles " << total
                  << ", satisfying the input formula " << hyp << ", counterexamples " << bad << '\n';
      }
      if (bad) return kFalsified;
      return r.incomplete ? kInconclusive : kOk;
    }

    if (compat->parsed()) {
      auto alphabet = text_alphabet(2, "a", sst::Sort::E);
      sst::Protocol p = sst::compat_test_protocol();
      std::size_t total = 0, compatible = 0, disagree = 0;
      auto visit = [&](const sst::Bundle& b) {
        ++total;
        bool fast = sst::check_compatibility(b, p).witness.has_value();
        if (fast) ++compatible;
        if (fast != sst::compatibility_oracle(b, p)) ++disagree;
      };
      sst::enumerate_compat_bundles(max_annotated, alphabet, visit);
      std::size_t exhaustive = total, exhaustive_compatible = compatible, exhaustive_disagree = disagree;
      total = compatible = disagree = 0;
      std::mt19937_64 rng(seed);
      for (std::size_t i = 0; i < random_count; ++i) visit(sst::random_compat_bundle(rng, random_annotated, alphabet));
      if (format == "json") {
        Json j = sst::report::header("oracle compat");
        j["seed"] = seed;
        j["exhaustive"] = Json{{"max_annotated", max_annotated},
                               {"bundles", exhaustive},
                               {"compatible", exhaustive_compatible},
                               {"disagreements", exhaustive_disagree}};
        j["random"] = Json{{"max_annotated", random_annotated},
                           {"bundles", total},
                           {"compatible", compatible},
                           {"disagreements", disagree}};
        emit(j);
      } else {
        std::cout << "exhaustive: " << exhaustive << " bundles, " << exhaustive_compatible << " compatible, "
                  << exhaustive_disagree << " disagreements\n"
                  << "random (seed " << seed << "): " << total << " bundles, " << compatible << " compatible, "
                  << disagree << " disagreements\n";
      }
      return exhaustive_disagree + disagree ? kFalsified : kOk;
    }

    if (fmt->parsed()) {
      std::string text = slurp(fmt_file);
      auto forms = sst::read_sexprs(text);
      std::shared_ptr<const sst::Protocol> p;
      if (!forms.empty() && forms[0].head() != "defprotocol") p = resolve_protocol(protocol_opt, text);
      std::cout << sst::reformat(text, p.get());
      return kOk;
    }
  } catch (const sst::ParseError& e) {
    std::cerr << "error (" << sst::category_name(e.category()) << "): " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const sst::IncompleteAnalysis& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInconclusive;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOtherError;
  }
  return kOtherError;
}
