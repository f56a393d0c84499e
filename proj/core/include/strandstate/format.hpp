// Text formats: protocols, skeletons, bundles and formulas as S-expressions
// over one shared reader, plus DOT drawings. The grammar is in docs/format.md.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "strandstate/logic.hpp"
#include "strandstate/sexp.hpp"
#include "strandstate/skeleton.hpp"

namespace sst {

inline constexpr std::string_view kFormatVersion = "1.0";

/// Names a term may refer to: variables, constants and tags.
using Scope = std::map<std::string, Term>;

/// Constants and tags occurring anywhere in the protocol's roles.
Scope protocol_scope(const Protocol& p);

Term parse_term(const SExpr& e, const Scope& scope);
Term parse_term(std::string_view text, const Scope& scope);
SExpr term_sexpr(const Term& t);

/// Adds the adversary roles after the declared ones.
Protocol parse_protocol(std::string_view text);
std::string print_protocol(const Protocol& p);

/// The protocol name the file's top form refers to.
std::string referenced_protocol(std::string_view text);

Skeleton parse_skeleton(std::string_view text, std::shared_ptr<const Protocol> p);
std::string print_skeleton(const Skeleton& sk);

Bundle parse_bundle(std::string_view text, const Protocol& p);
std::string print_bundle(const Bundle& b, const Protocol& p);

/// Free variables must be declared in the header.
Formula parse_formula(std::string_view text, const Protocol& p);
SExpr formula_sexpr(const Formula& f);
std::string print_formula(const Formula& f, const Protocol& p);

/// Canonical re-print of any of the four file kinds; all but protocol files
/// need the protocol they refer to.
std::string reformat(std::string_view text, const Protocol* p);

/// Nodes labelled ±term; dashed succession, solid communication, state
/// bearing nodes filled.
std::string bundle_dot(const Bundle& b, const Protocol& p);
std::string skeleton_dot(const Skeleton& sk);

}  // namespace sst
