#include "strandstate/term.hpp"

#include <sstream>

namespace sst {

bool sort_leq(Sort lo, Sort hi) {
  if (lo == hi) return true;
  return hi == Sort::Top && lo != Sort::M;
}

bool is_atom_sort(Sort s) {
  return s == Sort::A || s == Sort::S || s == Sort::D || s == Sort::E;
}

std::string_view sort_name(Sort s) {
  switch (s) {
    case Sort::M: return "state";
    case Sort::Top: return "mesg";
    case Sort::A: return "akey";
    case Sort::S: return "skey";
    case Sort::D: return "data";
    case Sort::E: return "text";
  }
  return "?";
}

std::optional<Sort> parse_sort(std::string_view name) {
  if (name == "state") return Sort::M;
  if (name == "mesg" || name == "top") return Sort::Top;
  if (name == "akey") return Sort::A;
  if (name == "skey") return Sort::S;
  if (name == "data") return Sort::D;
  if (name == "text") return Sort::E;
  return std::nullopt;
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

void require_message(const Term& t, const char* where) {
  if (!t.valid()) throw SortError(std::string(where) + ": missing argument");
  if (t.sort() == Sort::M) throw SortError(std::string(where) + ": state term used as message");
}

}  // namespace

Term Term::make(Kind kind, Sort sort, std::string name, bool flag, std::vector<Term> args) {
  auto n = std::make_shared<TermNode>();
  n->kind = kind;
  n->sort = sort;
  n->name = std::move(name);
  n->flag = flag;
  std::size_t h = mix(static_cast<std::size_t>(kind) * 31 + static_cast<std::size_t>(sort),
                      std::hash<std::string>{}(n->name));
  h = mix(h, flag ? 1 : 0);
  std::size_t size = 1;
  bool ground = kind != Kind::Var;
  for (const auto& a : args) {
    h = mix(h, a.hash_value());
    size += a.size();
    ground = ground && a.is_ground();
  }
  n->args = std::move(args);
  n->hash = h;
  n->size = size;
  n->ground = ground;
  return Term(std::move(n));
}

Term Term::atom(Sort sort, std::string name, bool inverse) {
  if (!is_atom_sort(sort)) throw SortError("constant " + name + " must have an atom sort");
  return make(Kind::Atom, sort, std::move(name), sort == Sort::A && inverse, {});
}

Term Term::tag(std::string name) { return make(Kind::Tag, Sort::Top, std::move(name), false, {}); }

Term Term::boot() {
  static const Term b = make(Kind::Boot, Sort::M, "boot", false, {});
  return b;
}

Term Term::extend(Term arg, Term prior) {
  require_message(arg, "extend argument");
  if (!prior.valid() || prior.sort() != Sort::M) throw SortError("extend: second argument must be a state");
  return make(Kind::Extend, Sort::M, "extend", false, {std::move(arg), std::move(prior)});
}

Term Term::pair(Term left, Term right) {
  require_message(left, "pair left");
  require_message(right, "pair right");
  return make(Kind::Pair, Sort::Top, "pair", false, {std::move(left), std::move(right)});
}

Term Term::tuple(const std::vector<Term>& items) {
  if (items.empty()) throw SortError("empty tuple");
  Term acc = items.back();
  for (auto it = items.rbegin() + 1; it != items.rend(); ++it) acc = pair(*it, acc);
  return acc;
}

Term Term::enc(Term body, Term key) {
  require_message(body, "encryption body");
  if (!key.valid() || (key.sort() != Sort::A && key.sort() != Sort::S))
    throw SortError("encryption key must have sort akey or skey");
  return make(Kind::Enc, Sort::Top, "enc", false, {std::move(body), std::move(key)});
}

Term Term::hash(Term body) {
  require_message(body, "hash body");
  return make(Kind::Hash, Sort::S, "hash", false, {std::move(body)});
}

Term Term::inv(Term key) {
  if (!key.valid() || (key.sort() != Sort::A && key.sort() != Sort::S))
    throw SortError("inverse applies only to akey or skey");
  if (key.sort() == Sort::S) return key;
  switch (key.kind()) {
    case Kind::Atom: return atom(Sort::A, key.name(), !key.inverse());
    case Kind::Inv: return key.arg(0);
    case Kind::Var: return make(Kind::Inv, Sort::A, "invk", false, {std::move(key)});
    default: throw SortError("inverse of a non-key term");
  }
}

Term Term::var(std::string name, Sort sort) { return make(Kind::Var, sort, std::move(name), false, {}); }

Kind Term::kind() const { return node_->kind; }
Sort Term::sort() const { return node_->sort; }
const std::string& Term::name() const { return node_->name; }
bool Term::inverse() const { return node_->flag; }
std::size_t Term::arity() const { return node_->args.size(); }
const Term& Term::arg(std::size_t i) const { return node_->args.at(i); }
bool Term::is_ground() const { return node_->ground; }
std::size_t Term::hash_value() const { return node_ ? node_->hash : 0; }
std::size_t Term::size() const { return node_ ? node_->size : 0; }

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.node_->hash != b.node_->hash) return false;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind || x.sort != y.sort || x.flag != y.flag || x.name != y.name ||
      x.args.size() != y.args.size())
    return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!(x.args[i] == y.args[i])) return false;
  return true;
}

std::strong_ordering operator<=>(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (!a.node_) return std::strong_ordering::less;
  if (!b.node_) return std::strong_ordering::greater;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (auto c = x.kind <=> y.kind; c != 0) return c;
  if (auto c = x.sort <=> y.sort; c != 0) return c;
  if (auto c = x.name.compare(y.name); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  if (auto c = x.flag <=> y.flag; c != 0) return c;
  if (auto c = x.args.size() <=> y.args.size(); c != 0) return c;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (auto c = x.args[i] <=> y.args[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

namespace {

void print(const Term& t, std::ostream& os);

void print_flat(const Term& t, std::ostream& os) {
  // Right-nested pairs print as one list.
  Term cur = t;
  while (cur.kind() == Kind::Pair) {
    os << ' ';
    print(cur.arg(0), os);
    cur = cur.arg(1);
  }
  os << ' ';
  print(cur, os);
}

void print(const Term& t, std::ostream& os) {
  switch (t.kind()) {
    case Kind::Atom:
      if (t.inverse()) os << "(invk " << t.name() << ')';
      else os << t.name();
      break;
    case Kind::Tag:
    case Kind::Var: os << t.name(); break;
    case Kind::Boot: os << "boot"; break;
    case Kind::Extend:
      os << "(extend ";
      print(t.arg(0), os);
      os << ' ';
      print(t.arg(1), os);
      os << ')';
      break;
    case Kind::Pair:
      os << "(pair";
      print_flat(t, os);
      os << ')';
      break;
    case Kind::Enc:
      os << "(enc ";
      print(t.arg(0), os);
      os << ' ';
      print(t.arg(1), os);
      os << ')';
      break;
    case Kind::Hash:
      os << "(hash";
      print_flat(t.arg(0), os);
      os << ')';
      break;
    case Kind::Inv:
      os << "(invk ";
      print(t.arg(0), os);
      os << ')';
      break;
  }
}

}  // namespace

std::string Term::str() const {
  if (!node_) return "<null>";
  std::ostringstream os;
  print(*this, os);
  return os.str();
}

Term canonicalize(const Term& t) {
  switch (t.kind()) {
    case Kind::Atom:
    case Kind::Tag:
    case Kind::Boot:
    case Kind::Var: return t;
    case Kind::Extend: return Term::extend(canonicalize(t.arg(0)), canonicalize(t.arg(1)));
    case Kind::Pair: return Term::pair(canonicalize(t.arg(0)), canonicalize(t.arg(1)));
    case Kind::Enc: return Term::enc(canonicalize(t.arg(0)), canonicalize(t.arg(1)));
    case Kind::Hash: return Term::hash(canonicalize(t.arg(0)));
    case Kind::Inv: return Term::inv(canonicalize(t.arg(0)));
  }
  return t;
}

bool carried_by(const Term& t0, const Term& t1) {
  if (t0 == t1) return true;
  switch (t1.kind()) {
    case Kind::Pair: return carried_by(t0, t1.arg(0)) || carried_by(t0, t1.arg(1));
    case Kind::Enc: return carried_by(t0, t1.arg(0));
    default: return false;
  }
}

bool subterm(const Term& t0, const Term& t1) {
  if (t0 == t1) return true;
  if (t0.size() >= t1.size()) return false;
  for (std::size_t i = 0; i < t1.arity(); ++i)
    if (subterm(t0, t1.arg(i))) return true;
  return false;
}

void collect_vars(const Term& t, std::map<std::string, Sort>& out) {
  if (t.is_ground()) return;
  if (t.is_var()) {
    out.emplace(t.name(), t.sort());
    return;
  }
  for (std::size_t i = 0; i < t.arity(); ++i) collect_vars(t.arg(i), out);
}

// ---------------------------------------------------------------------------
// Substitutions

std::optional<Term> Subst::lookup(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Term Subst::apply(const Term& t) const {
  if (map_.empty() || t.is_ground()) return t;
  switch (t.kind()) {
    case Kind::Var: {
      auto it = map_.find(t.name());
      return it == map_.end() ? t : it->second;
    }
    case Kind::Extend: return Term::extend(apply(t.arg(0)), apply(t.arg(1)));
    case Kind::Pair: return Term::pair(apply(t.arg(0)), apply(t.arg(1)));
    case Kind::Enc: return Term::enc(apply(t.arg(0)), apply(t.arg(1)));
    case Kind::Hash: return Term::hash(apply(t.arg(0)));
    case Kind::Inv: return Term::inv(apply(t.arg(0)));
    default: return t;
  }
}

void Subst::bind(const Term& var, const Term& t) {
  Subst single;
  single.map_.emplace(var.name(), t);
  for (auto& [name, value] : map_) value = single.apply(value);
  map_.emplace(var.name(), t);
}

Subst Subst::compose_after(const Subst& other) const {
  Subst out;
  for (const auto& [name, value] : other.map_) out.map_.emplace(name, apply(value));
  for (const auto& [name, value] : map_) out.map_.emplace(name, value);
  // Drop trivial x -> x bindings.
  for (auto it = out.map_.begin(); it != out.map_.end();) {
    if (it->second.is_var() && it->second.name() == it->first) it = out.map_.erase(it);
    else ++it;
  }
  return out;
}

std::string Subst::str() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [name, value] : map_) {
    if (!first) os << ", ";
    first = false;
    os << name << " -> " << value.str();
  }
  os << '}';
  return os.str();
}

namespace {

bool occurs(const std::string& name, const Term& t) {
  if (t.is_ground()) return false;
  if (t.is_var()) return t.name() == name;
  for (std::size_t i = 0; i < t.arity(); ++i)
    if (occurs(name, t.arg(i))) return true;
  return false;
}

struct Unifier {
  Subst s;
  UnifyError err = UnifyError::None;
  bool one_sided = false;
  std::set<std::string> rigid;  // target variables when matching

  bool fail(UnifyError e) {
    if (err == UnifyError::None) err = e;
    return false;
  }

  bool is_flexible(const Term& t) const { return t.is_var() && !rigid.contains(t.name()); }

  bool bind_var(const Term& x, const Term& t) {
    if (!sort_leq(t.sort(), x.sort())) return fail(UnifyError::SortClash);
    if (occurs(x.name(), t)) return fail(UnifyError::Occurs);
    s.bind(x, t);
    return true;
  }

  bool solve_inv(const Term& inv_term, const Term& other) {
    // inv_term = (invk x) with x a flexible A variable.
    const Term& x = inv_term.arg(0);
    if (other.sort() != Sort::A) return fail(UnifyError::SortClash);
    return bind_var(x, Term::inv(other));
  }

  bool run(const Term& a0, const Term& b0) {
    Term a = s.apply(a0);
    Term b = s.apply(b0);
    if (a == b) return true;
    bool fa = is_flexible(a);
    bool fb = !one_sided && is_flexible(b);
    if (fa && fb) {
      if (sort_leq(b.sort(), a.sort())) return bind_var(a, b);
      if (sort_leq(a.sort(), b.sort())) return bind_var(b, a);
      return fail(UnifyError::SortClash);
    }
    if (fa) return bind_var(a, b);
    if (fb) return bind_var(b, a);
    if (a.kind() == Kind::Inv && is_flexible(a.arg(0))) return solve_inv(a, b);
    if (!one_sided && b.kind() == Kind::Inv && is_flexible(b.arg(0))) return solve_inv(b, a);
    if (a.kind() != b.kind() || a.name() != b.name() || a.inverse() != b.inverse() ||
        a.arity() != b.arity()) {
      if (a.sort() != b.sort() && !sort_leq(a.sort(), b.sort()) && !sort_leq(b.sort(), a.sort()))
        return fail(UnifyError::SortClash);
      return fail(UnifyError::Clash);
    }
    if (a.kind() == Kind::Atom || a.kind() == Kind::Var) {
      if (a.sort() != b.sort()) return fail(UnifyError::SortClash);
      return fail(UnifyError::Clash);
    }
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (!run(a.arg(i), b.arg(i))) return false;
    return true;
  }
};

}  // namespace

UnifyResult unify(const Term& a, const Term& b, const Subst& base) {
  Unifier u;
  u.s = base;
  if (u.run(a, b)) return {std::move(u.s), UnifyError::None};
  return {std::nullopt, u.err};
}

UnifyResult match(const Term& pattern, const Term& target, const Subst& base) {
  Unifier u;
  u.s = base;
  u.one_sided = true;
  std::map<std::string, Sort> tv;
  collect_vars(target, tv);
  for (const auto& [name, sort] : tv) {
    if (u.s.lookup(name)) return {std::nullopt, UnifyError::Clash};
    u.rigid.insert(name);
  }
  if (u.run(pattern, target)) return {std::move(u.s), UnifyError::None};
  return {std::nullopt, u.err};
}

}  // namespace sst
