// Shared S-expression reader used by every input format.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sst {

struct SourcePos {
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  enum class Category { Syntax, Sort, DuplicateRole, UnboundVariable, Semantic };

  ParseError(Category category, SourcePos pos, const std::string& msg);

  Category category() const { return category_; }
  SourcePos pos() const { return pos_; }

 private:
  Category category_;
  SourcePos pos_;
};

std::string_view category_name(ParseError::Category c);

struct SExpr {
  enum class Type { Symbol, Number, String, List };

  Type type = Type::List;
  std::string text;
  std::vector<SExpr> items;
  SourcePos pos;

  bool is_list() const { return type == Type::List; }
  bool is_symbol() const { return type == Type::Symbol; }
  bool is_symbol(std::string_view s) const { return type == Type::Symbol && text == s; }
  bool is_number() const { return type == Type::Number; }
  /// Head symbol of a non-empty list, or "" otherwise.
  std::string_view head() const;
  long number() const;
};

/// Reads every top-level form. ';' starts a comment running to end of line.
std::vector<SExpr> read_sexprs(std::string_view text);

std::string to_string(const SExpr& e);

SExpr sym(std::string text);
SExpr num(long n);
SExpr list(std::vector<SExpr> items);

/// Multi-line layout: a list that does not fit in `width` keeps its leading
/// atoms on the first line and puts every other item on its own line.
std::string pretty(const SExpr& e, std::size_t width = 96);

}  // namespace sst
