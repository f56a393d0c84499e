#include "strandstate/format.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "strandstate/envelope.hpp"

namespace sst {

namespace {

using Cat = ParseError::Category;

[[noreturn]] void fail(Cat c, const SExpr& at, const std::string& msg) { throw ParseError(c, at.pos, msg); }

const std::set<std::string, std::less<>> kKeywords = {"boot", "enc", "pair", "hash", "extend", "invk"};

const SExpr& only_form(const std::vector<SExpr>& forms, std::string_view head) {
  if (forms.size() != 1) {
    SExpr where;
    if (forms.size() > 1) where = forms[1];
    fail(Cat::Syntax, where, "expected exactly one (" + std::string(head) + " ...) form");
  }
  const SExpr& f = forms[0];
  if (f.head() != head) fail(Cat::Syntax, f, "expected (" + std::string(head) + " ...)");
  if (f.items.size() < 2 || !f.items[1].is_symbol()) fail(Cat::Syntax, f, "missing name after " + std::string(head));
  return f;
}

std::size_t index_of(const SExpr& e) {
  if (!e.is_number() || e.number() < 0) fail(Cat::Syntax, e, "expected a non-negative integer");
  return static_cast<std::size_t>(e.number());
}

const std::string& symbol_of(const SExpr& e, const char* what) {
  if (!e.is_symbol()) fail(Cat::Syntax, e, std::string("expected ") + what);
  return e.text;
}

void walk_atoms(const Term& t, Scope& out) {
  switch (t.kind()) {
    case Kind::Atom: out.emplace(t.name(), Term::atom(t.sort(), t.name())); break;
    case Kind::Tag: out.emplace(t.name(), t); break;
    case Kind::Var:
    case Kind::Boot: break;
    default:
      for (std::size_t i = 0; i < t.arity(); ++i) walk_atoms(t.arg(i), out);
  }
}

// (vars (a b akey) (x mesg)) -> ordered names with sorts; "strand" allowed
// only when strand_ok.
std::vector<std::pair<std::string, std::optional<Sort>>> parse_decls(const SExpr& form, bool strand_ok,
                                                                     std::size_t first = 1) {
  std::vector<std::pair<std::string, std::optional<Sort>>> out;
  std::set<std::string> seen;
  for (std::size_t i = first; i < form.items.size(); ++i) {
    const SExpr& d = form.items[i];
    if (!d.is_list() || d.items.size() < 2) fail(Cat::Syntax, d, "expected (name ... sort)");
    const SExpr& sort_e = d.items.back();
    const std::string& sname = symbol_of(sort_e, "a sort name");
    std::optional<Sort> sort = parse_sort(sname);
    if (!sort && !(strand_ok && sname == "strand")) fail(Cat::Sort, sort_e, "unknown sort " + sname);
    for (std::size_t j = 0; j + 1 < d.items.size(); ++j) {
      const std::string& name = symbol_of(d.items[j], "a name");
      if (kKeywords.count(name)) fail(Cat::Syntax, d.items[j], "reserved word " + name + " used as a name");
      if (!seen.insert(name).second) fail(Cat::Semantic, d.items[j], "duplicate declaration of " + name);
      out.emplace_back(name, sort);
    }
  }
  return out;
}

SExpr decl_sexpr(const std::string& name, std::string_view sort) { return list({sym(name), sym(std::string(sort))}); }

SExpr node_sexpr(Node n) { return list({num(static_cast<long>(n.strand)), num(static_cast<long>(n.index))}); }

Node parse_node(const SExpr& e) {
  if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected a node (strand index)");
  return Node{index_of(e.items[0]), index_of(e.items[1])};
}

SExpr event_sexpr(const Event& e) { return list({sym(e.is_send() ? "send" : "recv"), term_sexpr(e.msg)}); }

Event parse_event(const SExpr& e, const Scope& scope) {
  std::string_view h = e.head();
  if ((h != "send" && h != "recv") || e.items.size() != 2) fail(Cat::Syntax, e, "expected (send t) or (recv t)");
  Term t = parse_term(e.items[1], scope);
  return h == "send" ? Event::send(t) : Event::recv(t);
}

// Tags and constants of `extra` not already supplied by `base`, as
// (tags ...) and (consts ...) forms.
std::vector<SExpr> header_forms(const Scope& extra, const Scope& base) {
  SExpr tags = list({sym("tags")});
  SExpr consts = list({sym("consts")});
  for (const auto& [name, t] : extra) {
    if (base.count(name)) continue;
    if (t.kind() == Kind::Tag) tags.items.push_back(sym(name));
    else consts.items.push_back(decl_sexpr(name, sort_name(t.sort())));
  }
  std::vector<SExpr> out;
  for (auto* f : {&tags, &consts})
    if (f->items.size() > 1) out.push_back(std::move(*f));
  return out;
}

void add_tags(const SExpr& form, Scope& scope) {
  for (std::size_t j = 1; j < form.items.size(); ++j) {
    const std::string& name = symbol_of(form.items[j], "a tag name");
    if (kKeywords.count(name)) fail(Cat::Syntax, form.items[j], "reserved word " + name);
    scope.emplace(name, Term::tag(name));
  }
}

void add_consts(const SExpr& form, Scope& scope) {
  for (const auto& [name, sort] : parse_decls(form, false)) {
    if (!is_atom_sort(*sort)) fail(Cat::Sort, form, "constant " + name + " must have an atom sort");
    Term c = Term::atom(*sort, name);
    auto [it, fresh] = scope.emplace(name, c);
    if (!fresh && it->second != c) fail(Cat::Semantic, form, "conflicting declaration of " + name);
  }
}

}  // namespace

Scope protocol_scope(const Protocol& p) {
  Scope out;
  for (const auto& r : p.roles()) {
    if (r.kind == RoleKind::Adversary) continue;
    for (const auto& e : r.trace) walk_atoms(e.msg, out);
    for (const auto& t : r.non_orig) walk_atoms(t, out);
    for (const auto& t : r.uniq_orig) walk_atoms(t, out);
  }
  return out;
}

Term parse_term(const SExpr& e, const Scope& scope) {
  if (e.is_symbol()) {
    if (e.text == "boot") return Term::boot();
    auto it = scope.find(e.text);
    if (it == scope.end()) fail(Cat::UnboundVariable, e, "unbound name " + e.text);
    return it->second;
  }
  if (!e.is_list() || e.items.empty()) fail(Cat::Syntax, e, "expected a term");
  std::string_view h = e.head();
  auto args = [&](std::size_t from, std::size_t to) {
    std::vector<Term> out;
    for (std::size_t i = from; i < to; ++i) out.push_back(parse_term(e.items[i], scope));
    return out;
  };
  try {
    if (h == "enc") {
      if (e.items.size() < 3) fail(Cat::Syntax, e, "enc needs a body and a key");
      const SExpr& key_e = e.items.back();
      Term key = parse_term(key_e, scope);
      if (key.sort() != Sort::A && key.sort() != Sort::S)
        fail(Cat::Sort, key_e, "encryption key must be akey or skey, got " + std::string(sort_name(key.sort())));
      return Term::enc(Term::tuple(args(1, e.items.size() - 1)), key);
    }
    if (h == "pair") {
      if (e.items.size() < 3) fail(Cat::Syntax, e, "pair needs two or more items");
      return Term::tuple(args(1, e.items.size()));
    }
    if (h == "hash") {
      if (e.items.size() < 2) fail(Cat::Syntax, e, "hash needs an argument");
      return Term::hash(Term::tuple(args(1, e.items.size())));
    }
    if (h == "extend") {
      if (e.items.size() != 3) fail(Cat::Syntax, e, "extend takes a value and a state");
      Term value = parse_term(e.items[1], scope);
      Term prior = parse_term(e.items[2], scope);
      if (prior.sort() != Sort::M) fail(Cat::Sort, e.items[2], "extend needs a state, got " + prior.str());
      if (value.sort() == Sort::M) fail(Cat::Sort, e.items[1], "extend value cannot be a state");
      return Term::extend(value, prior);
    }
    if (h == "invk") {
      if (e.items.size() != 2) fail(Cat::Syntax, e, "invk takes one key");
      Term k = parse_term(e.items[1], scope);
      if (k.sort() != Sort::A) fail(Cat::Sort, e.items[1], "invk needs an akey");
      return Term::inv(k);
    }
    if (e.items.size() < 2) fail(Cat::Syntax, e, "a tuple needs two or more items");
    return Term::tuple(args(0, e.items.size()));
  } catch (const SortError& err) {
    fail(Cat::Sort, e, err.what());
  }
}

Term parse_term(std::string_view text, const Scope& scope) {
  auto forms = read_sexprs(text);
  if (forms.size() != 1) throw ParseError(Cat::Syntax, {}, "expected one term");
  return parse_term(forms[0], scope);
}

SExpr term_sexpr(const Term& t) { return read_sexprs(t.str()).at(0); }

Protocol parse_protocol(std::string_view text) {
  auto forms = read_sexprs(text);
  const SExpr& top = only_form(forms, "defprotocol");
  Scope base;
  std::set<std::string> names;
  for (const auto& r : adversary_roles()) names.insert(r.name);
  std::vector<Role> roles;
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& f = top.items[i];
    std::string_view h = f.head();
    if (h == "tags") {
      add_tags(f, base);
      continue;
    }
    if (h == "consts") {
      add_consts(f, base);
      continue;
    }
    if (h != "defrole") fail(Cat::Syntax, f, "expected tags, consts or defrole");
    if (f.items.size() < 2) fail(Cat::Syntax, f, "defrole needs a name");
    Role r;
    r.name = symbol_of(f.items[1], "a role name");
    if (!names.insert(r.name).second) fail(Cat::DuplicateRole, f.items[1], "duplicate role " + r.name);
    Scope scope = base;
    bool have_trace = false;
    for (std::size_t j = 2; j < f.items.size(); ++j) {
      const SExpr& c = f.items[j];
      std::string_view ch = c.head();
      if (ch == "vars") {
        for (const auto& [name, sort] : parse_decls(c, false)) {
          Term v = Term::var(name, *sort);
          r.params.push_back(v);
          scope.insert_or_assign(name, v);
        }
      } else if (ch == "trace") {
        have_trace = true;
        for (std::size_t k = 1; k < c.items.size(); ++k) r.trace.push_back(parse_event(c.items[k], scope));
      } else if (ch == "non-orig" || ch == "uniq-orig") {
        auto& dst = ch == "non-orig" ? r.non_orig : r.uniq_orig;
        for (std::size_t k = 1; k < c.items.size(); ++k) dst.push_back(parse_term(c.items[k], scope));
      } else if (ch == "annotate") {
        if (c.items.size() < 2 || c.items.size() > 3) fail(Cat::Syntax, c, "expected (annotate event [pre-event])");
        RoleAnnotation a;
        a.event = index_of(c.items[1]);
        if (a.event >= r.trace.size() || !r.trace[a.event].is_send())
          fail(Cat::Semantic, c.items[1], "annotated event must be a transmission of the trace");
        a.post = r.trace[a.event].msg;
        if (c.items.size() == 3) {
          std::size_t pre = index_of(c.items[2]);
          if (pre >= a.event || r.trace[pre].is_send())
            fail(Cat::Semantic, c.items[2], "pre-state event must be an earlier reception");
          a.pre_event = pre;
          a.pre = r.trace[pre].msg;
        }
        r.annotations.push_back(std::move(a));
      } else if (ch == "listener" && c.items.size() == 1) {
        r.kind = RoleKind::Listener;
      } else {
        fail(Cat::Syntax, c, "unknown role clause");
      }
    }
    if (!have_trace || r.trace.empty()) fail(Cat::Syntax, f, "role " + r.name + " has no trace");
    roles.push_back(std::move(r));
  }
  Protocol p(top.items[1].text, std::move(roles));
  p.add_adversary_roles();
  return p;
}

std::string print_protocol(const Protocol& p) {
  Scope scope = protocol_scope(p);
  SExpr top = list({sym("defprotocol"), sym(p.name())});
  for (auto& f : header_forms(scope, {})) top.items.push_back(std::move(f));
  for (const auto& r : p.roles()) {
    if (r.kind == RoleKind::Adversary) continue;
    SExpr role = list({sym("defrole"), sym(r.name)});
    SExpr vars = list({sym("vars")});
    for (const auto& v : r.params) vars.items.push_back(decl_sexpr(v.name(), sort_name(v.sort())));
    role.items.push_back(vars);
    SExpr trace = list({sym("trace")});
    for (const auto& e : r.trace) trace.items.push_back(event_sexpr(e));
    role.items.push_back(trace);
    for (auto [label, terms] : {std::pair{"non-orig", &r.non_orig}, std::pair{"uniq-orig", &r.uniq_orig}}) {
      if (terms->empty()) continue;
      SExpr f = list({sym(label)});
      for (const auto& t : *terms) f.items.push_back(term_sexpr(t));
      role.items.push_back(f);
    }
    for (const auto& a : r.annotations) {
      SExpr f = list({sym("annotate"), num(static_cast<long>(a.event))});
      if (a.pre_event) f.items.push_back(num(static_cast<long>(*a.pre_event)));
      role.items.push_back(f);
    }
    if (r.kind == RoleKind::Listener) role.items.push_back(list({sym("listener")}));
    top.items.push_back(role);
  }
  return pretty(top) + "\n";
}

std::string referenced_protocol(std::string_view text) {
  auto forms = read_sexprs(text);
  if (forms.empty() || !forms[0].is_list() || forms[0].items.size() < 2 || !forms[0].items[1].is_symbol())
    throw ParseError(Cat::Syntax, forms.empty() ? SourcePos{} : forms[0].pos, "expected (kind name ...)");
  return forms[0].items[1].text;
}

namespace {

void check_protocol_name(const SExpr& top, const Protocol& p) {
  if (top.items[1].text != p.name())
    fail(Cat::Semantic, top.items[1], "file refers to protocol " + top.items[1].text + ", not " + p.name());
}

const Role& role_at(const Protocol& p, const SExpr& e) {
  const std::string& name = symbol_of(e, "a role name");
  const Role* r = p.find(name);
  if (!r) fail(Cat::Semantic, e, "unknown role " + name);
  return *r;
}

// (p t) bindings for role parameters, sort checked against the role.
std::map<std::string, Term> parse_args(const Role& r, const SExpr& f, std::size_t from, const Scope& scope) {
  std::map<std::string, Term> args;
  for (std::size_t i = from; i < f.items.size(); ++i) {
    const SExpr& b = f.items[i];
    if (!b.is_list() || b.items.size() != 2) fail(Cat::Syntax, b, "expected (parameter term)");
    const std::string& name = symbol_of(b.items[0], "a parameter name");
    auto param = std::find_if(r.params.begin(), r.params.end(), [&](const Term& v) { return v.name() == name; });
    if (param == r.params.end()) fail(Cat::Semantic, b.items[0], "role " + r.name + " has no parameter " + name);
    Term t = parse_term(b.items[1], scope);
    if (!sort_leq(t.sort(), param->sort()))
      fail(Cat::Sort, b.items[1],
           "parameter " + name + " has sort " + std::string(sort_name(param->sort())) + ", got " + t.str());
    if (!args.emplace(name, t).second) fail(Cat::Semantic, b.items[0], "parameter " + name + " bound twice");
  }
  return args;
}

SExpr args_sexpr(const std::map<std::string, Term>& args) {
  SExpr out = list({});
  for (const auto& [name, t] : args) out.items.push_back(list({sym(name), term_sexpr(t)}));
  return out;
}

}  // namespace

Skeleton parse_skeleton(std::string_view text, std::shared_ptr<const Protocol> p) {
  auto forms = read_sexprs(text);
  const SExpr& top = only_form(forms, "defskeleton");
  check_protocol_name(top, *p);
  Scope scope = protocol_scope(*p);
  Skeleton sk(p);
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& f = top.items[i];
    std::string_view h = f.head();
    if (h == "tags") {
      add_tags(f, scope);
    } else if (h == "consts") {
      add_consts(f, scope);
    } else if (h == "vars") {
      for (const auto& [name, sort] : parse_decls(f, false)) scope.insert_or_assign(name, Term::var(name, *sort));
    } else if (h == "defstrand") {
      if (f.items.size() < 3) fail(Cat::Syntax, f, "expected (defstrand role height (param term)...)");
      const Role& r = role_at(*p, f.items[1]);
      if (r.kind == RoleKind::Adversary) fail(Cat::Semantic, f.items[1], "adversary roles cannot appear in skeletons");
      std::size_t height = index_of(f.items[2]);
      if (height == 0 || height > r.trace.size())
        fail(Cat::Semantic, f.items[2], "height must be between 1 and " + std::to_string(r.trace.size()));
      sk.add_strand(r.name, height, parse_args(r, f, 3, scope));
    } else if (h == "precedes") {
      for (std::size_t j = 1; j < f.items.size(); ++j) {
        const SExpr& e = f.items[j];
        if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected ((s i) (s i))");
        Node a = parse_node(e.items[0]), b = parse_node(e.items[1]);
        if (!sk.has_node(a) || !sk.has_node(b)) fail(Cat::Semantic, e, "ordering mentions a missing node");
        sk.order.emplace(a, b);
      }
    } else if (h == "non-orig") {
      for (std::size_t j = 1; j < f.items.size(); ++j) sk.non.insert(parse_term(f.items[j], scope));
    } else if (h == "uniq-orig") {
      for (std::size_t j = 1; j < f.items.size(); ++j) {
        const SExpr& e = f.items[j];
        if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected (term (s i))");
        Node n = parse_node(e.items[1]);
        if (!sk.has_node(n)) fail(Cat::Semantic, e.items[1], "origination node is missing");
        sk.uniq[parse_term(e.items[0], scope)] = n;
      }
    } else if (h == "inputs") {
      for (std::size_t j = 1; j < f.items.size(); ++j) sk.inputs.push_back(parse_term(f.items[j], scope));
    } else if (h == "bind") {
      for (std::size_t j = 1; j < f.items.size(); ++j) {
        const SExpr& e = f.items[j];
        if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected (variable term)");
        sk.input_binding.set(symbol_of(e.items[0], "a variable"), parse_term(e.items[1], scope));
      }
    } else if (h == "fixed" && f.items.size() == 2) {
      sk.fixed = index_of(f.items[1]);
      if (sk.fixed > sk.strands.size()) fail(Cat::Semantic, f.items[1], "more fixed strands than strands");
    } else {
      fail(Cat::Syntax, f, "unknown skeleton clause");
    }
  }
  return sk;
}

std::string print_skeleton(const Skeleton& sk) {
  SExpr top = list({sym("defskeleton"), sym(sk.protocol().name())});
  Scope seen;
  for (const auto& s : sk.strands)
    for (const auto& [name, t] : s.args) walk_atoms(t, seen);
  for (const auto& t : sk.non) walk_atoms(t, seen);
  for (const auto& [t, n] : sk.uniq) walk_atoms(t, seen);
  for (const auto& [name, t] : sk.input_binding.bindings()) walk_atoms(t, seen);
  for (auto& f : header_forms(seen, protocol_scope(sk.protocol()))) top.items.push_back(std::move(f));
  SExpr vars = list({sym("vars")});
  for (const auto& [name, sort] : sk.variables()) vars.items.push_back(decl_sexpr(name, sort_name(sort)));
  top.items.push_back(vars);
  for (const auto& s : sk.strands) {
    SExpr f = list({sym("defstrand"), sym(s.role), num(static_cast<long>(s.height))});
    for (auto& b : args_sexpr(s.args).items) f.items.push_back(std::move(b));
    top.items.push_back(f);
  }
  if (!sk.order.empty()) {
    SExpr f = list({sym("precedes")});
    for (const auto& [a, b] : sk.order) f.items.push_back(list({node_sexpr(a), node_sexpr(b)}));
    top.items.push_back(f);
  }
  if (!sk.non.empty()) {
    SExpr f = list({sym("non-orig")});
    for (const auto& t : sk.non) f.items.push_back(term_sexpr(t));
    top.items.push_back(f);
  }
  if (!sk.uniq.empty()) {
    SExpr f = list({sym("uniq-orig")});
    for (const auto& [t, n] : sk.uniq) f.items.push_back(list({term_sexpr(t), node_sexpr(n)}));
    top.items.push_back(f);
  }
  if (!sk.inputs.empty()) {
    SExpr f = list({sym("inputs")});
    for (const auto& t : sk.inputs) f.items.push_back(term_sexpr(t));
    top.items.push_back(f);
  }
  if (!sk.input_binding.empty()) {
    SExpr f = list({sym("bind")});
    for (const auto& [name, t] : sk.input_binding.bindings()) f.items.push_back(list({sym(name), term_sexpr(t)}));
    top.items.push_back(f);
  }
  if (sk.fixed) top.items.push_back(list({sym("fixed"), num(static_cast<long>(sk.fixed))}));
  return pretty(top) + "\n";
}

Bundle parse_bundle(std::string_view text, const Protocol& p) {
  auto forms = read_sexprs(text);
  const SExpr& top = only_form(forms, "defbundle");
  check_protocol_name(top, p);
  Scope scope = protocol_scope(p);
  Bundle b;
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& f = top.items[i];
    std::string_view h = f.head();
    if (h == "tags") {
      add_tags(f, scope);
    } else if (h == "consts") {
      add_consts(f, scope);
    } else if (h == "strand") {
      if (f.items.size() != 4 || f.items[2].head() != "bind" || f.items[3].head() != "trace")
        fail(Cat::Syntax, f, "expected (strand role (bind ...) (trace ...))");
      RoleAssignment ra;
      ra.role = symbol_of(f.items[1], "a role name");
      for (std::size_t j = 1; j < f.items[2].items.size(); ++j) {
        const SExpr& e = f.items[2].items[j];
        if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected (parameter term)");
        ra.subst.set(symbol_of(e.items[0], "a parameter name"), parse_term(e.items[1], scope));
      }
      Trace trace;
      for (std::size_t j = 1; j < f.items[3].items.size(); ++j) trace.push_back(parse_event(f.items[3].items[j], scope));
      b.space.push_back(std::move(trace));
      b.roles.push_back(std::move(ra));
    } else if (h == "comm") {
      for (std::size_t j = 1; j < f.items.size(); ++j) {
        const SExpr& e = f.items[j];
        if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected ((s i) (s i))");
        b.comm.emplace(parse_node(e.items[0]), parse_node(e.items[1]));
      }
    } else {
      fail(Cat::Syntax, f, "unknown bundle clause");
    }
  }
  return b;
}

std::string print_bundle(const Bundle& b, const Protocol& p) {
  Scope base = protocol_scope(p);
  Scope seen;
  for (const auto& c : b.space)
    for (const auto& e : c) walk_atoms(e.msg, seen);
  for (const auto& ra : b.roles)
    for (const auto& [name, t] : ra.subst.bindings()) walk_atoms(t, seen);
  SExpr top = list({sym("defbundle"), sym(p.name())});
  for (auto& f : header_forms(seen, base)) top.items.push_back(std::move(f));
  for (std::size_t s = 0; s < b.space.size(); ++s) {
    SExpr bind = list({sym("bind")});
    std::string role;
    if (s < b.roles.size()) {
      role = b.roles[s].role;
      for (const auto& [name, t] : b.roles[s].subst.bindings()) bind.items.push_back(list({sym(name), term_sexpr(t)}));
    }
    SExpr trace = list({sym("trace")});
    for (const auto& e : b.space[s]) trace.items.push_back(event_sexpr(e));
    top.items.push_back(list({sym("strand"), sym(role.empty() ? "?" : role), bind, trace}));
  }
  if (!b.comm.empty()) {
    SExpr f = list({sym("comm")});
    for (const auto& [x, y] : b.comm) f.items.push_back(list({node_sexpr(x), node_sexpr(y)}));
    top.items.push_back(f);
  }
  return pretty(top) + "\n";
}

namespace {

SExpr vars_sexpr(const std::vector<QVar>& vars) {
  SExpr out = list({});
  for (const auto& v : vars) out.items.push_back(decl_sexpr(v.name, v.sort ? sort_name(*v.sort) : "strand"));
  return out;
}

SExpr noderef_sexpr(const NodeRef& n) { return list({sym(n.strand), num(static_cast<long>(n.index))}); }

struct FormulaScope {
  Scope terms;
  std::set<std::string> strands;
};

NodeRef parse_noderef(const SExpr& e, const FormulaScope& sc) {
  if (!e.is_list() || e.items.size() != 2) fail(Cat::Syntax, e, "expected a node (z i)");
  const std::string& z = symbol_of(e.items[0], "a strand variable");
  if (!sc.strands.count(z)) fail(Cat::UnboundVariable, e.items[0], "unbound strand variable " + z);
  return NodeRef{z, index_of(e.items[1])};
}

std::vector<QVar> bind_vars(const SExpr& decls, std::size_t first, FormulaScope& sc) {
  std::vector<QVar> out;
  for (const auto& [name, sort] : parse_decls(decls, true, first)) {
    if (sort) {
      sc.terms.insert_or_assign(name, Term::var(name, *sort));
      sc.strands.erase(name);
    } else {
      sc.strands.insert(name);
      sc.terms.erase(name);
    }
    out.push_back(QVar{name, sort});
  }
  return out;
}

Formula parse_formula_body(const SExpr& e, const FormulaScope& sc, const Protocol& p) {
  std::string_view h = e.head();
  auto arity = [&](std::size_t n) {
    if (e.items.size() != n) fail(Cat::Syntax, e, "wrong number of arguments to " + std::string(h));
  };
  if (h == "=") {
    arity(3);
    return Formula::equal(parse_term(e.items[1], sc.terms), parse_term(e.items[2], sc.terms));
  }
  if (h == "htin") {
    if (e.items.size() < 4) fail(Cat::Syntax, e, "expected (htin z height role (param term)...)");
    const std::string& z = symbol_of(e.items[1], "a strand variable");
    if (!sc.strands.count(z)) fail(Cat::UnboundVariable, e.items[1], "unbound strand variable " + z);
    const Role& r = role_at(p, e.items[3]);
    return Formula::htin(z, index_of(e.items[2]), r.name, parse_args(r, e, 4, sc.terms));
  }
  if (h == "prec") {
    arity(3);
    return Formula::prec(parse_noderef(e.items[1], sc), parse_noderef(e.items[2], sc));
  }
  if (h == "non") {
    arity(2);
    return Formula::non(parse_term(e.items[1], sc.terms));
  }
  if (h == "uniq") {
    arity(3);
    return Formula::uniq(parse_term(e.items[1], sc.terms), parse_noderef(e.items[2], sc));
  }
  if (h == "sends") {
    arity(3);
    return Formula::sends(parse_noderef(e.items[1], sc), parse_term(e.items[2], sc.terms));
  }
  if (h == "and") {
    std::vector<Formula> parts;
    for (std::size_t i = 1; i < e.items.size(); ++i) parts.push_back(parse_formula_body(e.items[i], sc, p));
    return Formula::conj(std::move(parts));
  }
  if (h == "exists") {
    arity(3);
    if (!e.items[1].is_list()) fail(Cat::Syntax, e.items[1], "expected a variable list");
    FormulaScope inner = sc;
    auto vars = bind_vars(e.items[1], 0, inner);
    return Formula::exists(std::move(vars), parse_formula_body(e.items[2], inner, p));
  }
  if (h == "forall") {
    arity(3);
    if (!e.items[1].is_list()) fail(Cat::Syntax, e.items[1], "expected a variable list");
    if (e.items[2].head() != "implies") fail(Cat::Syntax, e.items[2], "forall must wrap an implication");
    FormulaScope inner = sc;
    bind_vars(e.items[1], 0, inner);
    return parse_formula_body(e.items[2], inner, p);
  }
  if (h == "implies") {
    arity(3);
    Formula hyp = parse_formula_body(e.items[1], sc, p);
    std::vector<Formula> ds;
    if (e.items[2].head() == "or") {
      for (std::size_t i = 1; i < e.items[2].items.size(); ++i) ds.push_back(parse_formula_body(e.items[2].items[i], sc, p));
    } else {
      ds.push_back(parse_formula_body(e.items[2], sc, p));
    }
    return Formula::implies(std::move(hyp), std::move(ds));
  }
  if (h == "false") {
    arity(1);
    return Formula::falsum();
  }
  fail(Cat::Syntax, e, "expected a formula");
}

void formula_atoms(const Formula& f, Scope& out) {
  for (const Term* t : {&f.lhs, &f.rhs})
    if (t->valid()) walk_atoms(*t, out);
  for (const auto& [name, t] : f.args) walk_atoms(t, out);
  for (const auto& part : f.parts) formula_atoms(part, out);
}

}  // namespace

Formula parse_formula(std::string_view text, const Protocol& p) {
  auto forms = read_sexprs(text);
  const SExpr& top = only_form(forms, "defformula");
  check_protocol_name(top, p);
  FormulaScope sc;
  sc.terms = protocol_scope(p);
  std::optional<Formula> body;
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& f = top.items[i];
    if (f.head() == "vars") {
      bind_vars(f, 1, sc);
    } else if (f.head() == "consts") {
      add_consts(f, sc.terms);
    } else if (f.head() == "tags") {
      add_tags(f, sc.terms);
    } else {
      if (body) fail(Cat::Syntax, f, "more than one formula");
      body = parse_formula_body(f, sc, p);
    }
  }
  if (!body) fail(Cat::Syntax, top, "missing formula");
  return *body;
}

SExpr formula_sexpr(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::Equal: return list({sym("="), term_sexpr(f.lhs), term_sexpr(f.rhs)});
    case FormulaKind::Htin: {
      SExpr e = list({sym("htin"), sym(f.strand), num(static_cast<long>(f.height)), sym(f.role)});
      for (auto& b : args_sexpr(f.args).items) e.items.push_back(std::move(b));
      return e;
    }
    case FormulaKind::Prec: return list({sym("prec"), noderef_sexpr(f.n0), noderef_sexpr(f.n1)});
    case FormulaKind::Non: return list({sym("non"), term_sexpr(f.lhs)});
    case FormulaKind::Uniq: return list({sym("uniq"), term_sexpr(f.lhs), noderef_sexpr(f.n0)});
    case FormulaKind::Sends: return list({sym("sends"), noderef_sexpr(f.n0), term_sexpr(f.lhs)});
    case FormulaKind::And: {
      SExpr e = list({sym("and")});
      for (const auto& p : f.parts) e.items.push_back(formula_sexpr(p));
      return e;
    }
    case FormulaKind::Exists:
      return list({sym("exists"), vars_sexpr(f.vars), formula_sexpr(f.parts.at(0))});
    case FormulaKind::Implies: {
      SExpr ors = list({sym("or")});
      for (std::size_t i = 1; i < f.parts.size(); ++i) ors.items.push_back(formula_sexpr(f.parts[i]));
      SExpr imp = list({sym("implies"), formula_sexpr(f.parts.at(0)), ors});
      auto universals = free_vars(f.parts.at(0));
      if (universals.empty()) return imp;
      return list({sym("forall"), vars_sexpr(universals), imp});
    }
    case FormulaKind::False: return list({sym("false")});
  }
  return list({});
}

std::string print_formula(const Formula& f, const Protocol& p) {
  SExpr top = list({sym("defformula"), sym(p.name())});
  Scope seen;
  formula_atoms(f, seen);
  for (auto& h : header_forms(seen, protocol_scope(p))) top.items.push_back(std::move(h));
  auto fv = free_vars(f);
  if (!fv.empty()) {
    SExpr vars = list({sym("vars")});
    for (const auto& v : fv) vars.items.push_back(decl_sexpr(v.name, v.sort ? sort_name(*v.sort) : "strand"));
    top.items.push_back(vars);
  }
  top.items.push_back(formula_sexpr(f));
  return pretty(top) + "\n";
}

std::string reformat(std::string_view text, const Protocol* p) {
  auto forms = read_sexprs(text);
  std::string_view h = forms.empty() ? std::string_view{} : forms[0].head();
  if (h == "defprotocol") return print_protocol(parse_protocol(text));
  if (h != "defskeleton" && h != "defbundle" && h != "defformula")
    throw ParseError(Cat::Syntax, forms.empty() ? SourcePos{} : forms[0].pos,
                     "expected defprotocol, defskeleton, defbundle or defformula");
  if (!p) throw std::invalid_argument("reformatting " + std::string(h) + " needs its protocol");
  if (h == "defskeleton") return print_skeleton(parse_skeleton(text, std::make_shared<Protocol>(*p)));
  if (h == "defbundle") return print_bundle(parse_bundle(text, *p), *p);
  return print_formula(parse_formula(text, *p), *p);
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string node_id(Node n) { return "n" + std::to_string(n.strand) + "_" + std::to_string(n.index); }

void emit_strands(std::ostringstream& os, const std::vector<std::string>& titles, const std::vector<Trace>& traces,
                  const std::set<Node>& stateful, const std::vector<bool>& faint) {
  for (std::size_t s = 0; s < traces.size(); ++s) {
    os << "  subgraph cluster_" << s << " {\n    label=\"" << escape(titles[s]) << "\";\n";
    if (faint[s]) os << "    color=gray;\n";
    for (std::size_t i = 0; i < traces[s].size(); ++i) {
      Node n{s, i};
      os << "    " << node_id(n) << " [label=\"" << escape(traces[s][i].str()) << '"';
      if (stateful.count(n)) os << ", style=filled, fillcolor=lightyellow";
      if (faint[s]) os << ", fontcolor=gray40";
      os << "];\n";
    }
    for (std::size_t i = 0; i + 1 < traces[s].size(); ++i)
      os << "    " << node_id({s, i}) << " -> " << node_id({s, i + 1}) << " [style=dashed];\n";
    os << "  }\n";
  }
}

}  // namespace

std::string bundle_dot(const Bundle& b, const Protocol& p) {
  std::set<Node> stateful;
  try {
    for (const auto& [n, a] : annotate(b, p)) stateful.insert(n);
  } catch (const AnnotationError&) {
  }
  std::vector<std::string> titles;
  std::vector<bool> faint;
  for (std::size_t s = 0; s < b.space.size(); ++s) {
    std::string role = s < b.roles.size() ? b.roles[s].role : "?";
    const Role* r = p.find(role);
    titles.push_back(std::to_string(s) + ": " + role);
    faint.push_back(r && r->kind == RoleKind::Adversary);
  }
  std::ostringstream os;
  os << "digraph bundle {\n  node [shape=box, fontname=\"monospace\"];\n";
  emit_strands(os, titles, b.space, stateful, faint);
  for (const auto& [x, y] : b.comm) os << "  " << node_id(x) << " -> " << node_id(y) << ";\n";
  os << "}\n";
  return os.str();
}

std::string skeleton_dot(const Skeleton& sk) {
  std::set<Node> stateful;
  std::vector<std::string> titles;
  std::vector<Trace> traces;
  for (std::size_t s = 0; s < sk.strands.size(); ++s) {
    const SkStrand& st = sk.strands[s];
    titles.push_back(std::to_string(s) + ": " + st.role);
    traces.push_back(st.trace);
    if (const Role* r = sk.protocol().find(st.role))
      for (const auto& a : r->annotations)
        if (a.event < st.trace.size()) stateful.insert(Node{s, a.event});
  }
  std::ostringstream os;
  os << "digraph skeleton {\n  node [shape=box, fontname=\"monospace\"];\n";
  emit_strands(os, titles, traces, stateful, std::vector<bool>(traces.size(), false));
  for (const auto& [x, y] : sk.order) os << "  " << node_id(x) << " -> " << node_id(y) << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace sst
