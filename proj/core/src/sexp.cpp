#include "strandstate/sexp.hpp"

#include <cctype>
#include <sstream>

namespace sst {

namespace {

std::string format_error(SourcePos pos, const std::string& msg) {
  std::ostringstream os;
  os << pos.line << ':' << pos.column << ": " << msg;
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_space();
    while (i_ < text_.size()) {
      out.push_back(read());
      skip_space();
    }
    return out;
  }

 private:
  std::string_view text_;
  std::size_t i_ = 0;
  SourcePos pos_;

  char peek() const { return text_[i_]; }

  void advance() {
    if (text_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < text_.size()) {
      char c = peek();
      if (c == ';') {
        while (i_ < text_.size() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void error(const std::string& msg) const {
    throw ParseError(ParseError::Category::Syntax, pos_, msg);
  }

  SExpr read() {
    skip_space();
    if (i_ >= text_.size()) error("unexpected end of input");
    SExpr e;
    e.pos = pos_;
    char c = peek();
    if (c == '(') {
      advance();
      e.type = SExpr::Type::List;
      for (;;) {
        skip_space();
        if (i_ >= text_.size()) throw ParseError(ParseError::Category::Syntax, e.pos, "unclosed '('");
        if (peek() == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    if (c == ')') error("unexpected ')'");
    if (c == '"') {
      advance();
      e.type = SExpr::Type::String;
      while (i_ < text_.size() && peek() != '"') {
        e.text.push_back(peek());
        advance();
      }
      if (i_ >= text_.size()) throw ParseError(ParseError::Category::Syntax, e.pos, "unterminated string");
      advance();
      return e;
    }
    while (i_ < text_.size()) {
      char d = peek();
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';' || d == '"') break;
      e.text.push_back(d);
      advance();
    }
    bool numeric = !e.text.empty();
    for (std::size_t k = 0; k < e.text.size(); ++k) {
      char d = e.text[k];
      if (!(std::isdigit(static_cast<unsigned char>(d)) || (k == 0 && d == '-' && e.text.size() > 1)))
        numeric = false;
    }
    e.type = numeric ? SExpr::Type::Number : SExpr::Type::Symbol;
    return e;
  }
};

}  // namespace

ParseError::ParseError(Category category, SourcePos pos, const std::string& msg)
    : std::runtime_error(format_error(pos, msg)), category_(category), pos_(pos) {}

std::string_view category_name(ParseError::Category c) {
  switch (c) {
    case ParseError::Category::Syntax: return "syntax";
    case ParseError::Category::Sort: return "sort";
    case ParseError::Category::DuplicateRole: return "duplicate-role";
    case ParseError::Category::UnboundVariable: return "unbound-variable";
    case ParseError::Category::Semantic: return "semantic";
  }
  return "unknown";
}

std::string_view SExpr::head() const {
  if (type != Type::List || items.empty() || !items[0].is_symbol()) return {};
  return items[0].text;
}

long SExpr::number() const {
  if (type != Type::Number) throw ParseError(ParseError::Category::Syntax, pos, "expected a number");
  return std::stol(text);
}

std::vector<SExpr> read_sexprs(std::string_view text) { return Reader(text).read_all(); }

std::string to_string(const SExpr& e) {
  switch (e.type) {
    case SExpr::Type::Symbol:
    case SExpr::Type::Number: return e.text;
    case SExpr::Type::String: return '"' + e.text + '"';
    case SExpr::Type::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += to_string(e.items[i]);
      }
      return out + ')';
    }
  }
  return {};
}

SExpr sym(std::string text) {
  SExpr e;
  e.type = SExpr::Type::Symbol;
  e.text = std::move(text);
  return e;
}

SExpr num(long n) {
  SExpr e;
  e.type = SExpr::Type::Number;
  e.text = std::to_string(n);
  return e;
}

SExpr list(std::vector<SExpr> items) {
  SExpr e;
  e.type = SExpr::Type::List;
  e.items = std::move(items);
  return e;
}

namespace {

void layout(const SExpr& e, std::size_t indent, std::size_t width, std::string& out) {
  std::string flat = to_string(e);
  if (!e.is_list() || indent + flat.size() <= width) {
    out += flat;
    return;
  }
  out += '(';
  std::size_t i = 0;
  for (; i < e.items.size() && !e.items[i].is_list(); ++i) {
    if (i) out += ' ';
    out += to_string(e.items[i]);
  }
  for (; i < e.items.size(); ++i) {
    if (i == 0) {
      layout(e.items[i], indent + 1, width, out);
      continue;
    }
    out += '\n';
    out.append(indent + 2, ' ');
    layout(e.items[i], indent + 2, width, out);
  }
  out += ')';
}

}  // namespace

std::string pretty(const SExpr& e, std::size_t width) {
  std::string out;
  layout(e, 0, width, out);
  return out;
}

}  // namespace sst
