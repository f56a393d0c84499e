// Order-sorted message algebra: sorts, terms in canonical inverse-free form,
// substitutions, unification and matching.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sst {

// M is the sort of machine states; A, S, D, E are the atom sorts.
enum class Sort : std::uint8_t { M, Top, A, S, D, E };

bool sort_leq(Sort lo, Sort hi);
bool is_atom_sort(Sort s);
std::string_view sort_name(Sort s);
std::optional<Sort> parse_sort(std::string_view name);

enum class Kind : std::uint8_t { Atom, Tag, Boot, Extend, Pair, Enc, Hash, Inv, Var };

class SortError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TermNode;

/// Immutable, shareable message value. Smart constructors keep every term in
/// canonical form: inverses are resolved eagerly and only survive wrapped
/// directly around a variable of sort A.
class Term {
 public:
  Term() = default;

  static Term atom(Sort sort, std::string name, bool inverse = false);
  static Term tag(std::string name);
  static Term boot();
  static Term extend(Term arg, Term prior);
  static Term pair(Term left, Term right);
  /// Right-nested tuple; a single element is returned unchanged.
  static Term tuple(const std::vector<Term>& items);
  static Term enc(Term body, Term key);
  static Term hash(Term body);
  static Term inv(Term key);
  static Term var(std::string name, Sort sort);

  bool valid() const { return node_ != nullptr; }
  Kind kind() const;
  Sort sort() const;
  const std::string& name() const;
  /// For asymmetric constants: true for the b-side of the key pair.
  bool inverse() const;
  std::size_t arity() const;
  const Term& arg(std::size_t i) const;
  bool is_var() const { return kind() == Kind::Var; }
  bool is_ground() const;
  std::size_t hash_value() const;
  std::size_t size() const;

  std::string str() const;

  friend bool operator==(const Term& a, const Term& b);
  friend std::strong_ordering operator<=>(const Term& a, const Term& b);

 private:
  explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}
  static Term make(Kind kind, Sort sort, std::string name, bool flag, std::vector<Term> args);
  std::shared_ptr<const TermNode> node_;
};

struct TermNode {
  Kind kind;
  Sort sort;
  std::string name;
  bool flag;
  std::vector<Term> args;
  std::size_t hash;
  std::size_t size;
  bool ground;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash_value(); }
};

using TermSet = std::set<Term>;

/// Rebuilds t through the smart constructors. Idempotent.
Term canonicalize(const Term& t);

/// Carried-by: t0 can be extracted from t1 given the needed keys.
bool carried_by(const Term& t0, const Term& t1);
/// Structural subterm over every position, keys and hash bodies included.
bool subterm(const Term& t0, const Term& t1);

void collect_vars(const Term& t, std::map<std::string, Sort>& out);

/// Sort-preserving, idempotent variable bindings.
class Subst {
 public:
  Subst() = default;

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::map<std::string, Term>& bindings() const { return map_; }
  std::optional<Term> lookup(const std::string& name) const;

  Term apply(const Term& t) const;
  /// Adds x -> t keeping the substitution idempotent. The caller guarantees
  /// x is unbound, t is already applied, and sort(t) <= sort(x).
  void bind(const Term& var, const Term& t);
  /// Raw binding with no composition: for simultaneous substitutions whose
  /// range may mention the bound names.
  void set(const std::string& name, Term t) { map_.insert_or_assign(name, std::move(t)); }
  /// this ∘ other: applies other first, then this.
  Subst compose_after(const Subst& other) const;

  friend bool operator==(const Subst&, const Subst&) = default;
  std::string str() const;

 private:
  std::map<std::string, Term> map_;
};

enum class UnifyError { None, Clash, Occurs, SortClash };

struct UnifyResult {
  std::optional<Subst> subst;
  UnifyError error = UnifyError::None;
  explicit operator bool() const { return subst.has_value(); }
};

/// Most general order-sorted unifier extending `base`.
UnifyResult unify(const Term& a, const Term& b, const Subst& base = {});
/// One-sided: only variables of `pattern` are bound; variables occurring in
/// `target` are treated as constants.
UnifyResult match(const Term& pattern, const Term& target, const Subst& base = {});

}  // namespace sst

template <>
struct std::hash<sst::Term> {
  std::size_t operator()(const sst::Term& t) const { return t.hash_value(); }
};
