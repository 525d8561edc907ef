#include "archgen/pysyntax.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>

namespace archgen::py {

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first so greedy matching picks "**=" over "**" over "*".
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ";",  ".",  "="};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view s) {
  if (s.size() > 2) return false;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenStream run() {
    while (true) {
      if (line_start_ && brackets_.empty()) {
        if (!handle_indentation()) break;
        if (pos_ >= src_.size()) break;
      }
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
      } else if (c == '\\') {
        continuation();
      } else if (c == '\n' || c == '\r') {
        newline_char();
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        identifier_or_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number();
      } else if (c == '"' || c == '\'') {
        string_literal(pos_, col_);
      } else {
        op();
      }
    }
    finish();
    return std::move(out_);
  }

 private:
  void advance() {
    ++pos_;
    ++col_;
  }

  void emit(TokenKind k, std::size_t start, int col) {
    out_.tokens.push_back({k, src_.substr(start, pos_ - start), line_, col});
  }
  void emit_empty(TokenKind k) { out_.tokens.push_back({k, {}, line_, 0}); }
  void issue(int line, std::string msg) { out_.issues.push_back({line, std::move(msg)}); }

  bool last_is_newline() const {
    return out_.tokens.empty() || out_.tokens.back().kind == TokenKind::Newline ||
           out_.tokens.back().kind == TokenKind::Indent ||
           out_.tokens.back().kind == TokenKind::Dedent;
  }

  // Consumes one physical line break (\n, \r\n or \r).
  void eat_line_break() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
    col_ = 0;
  }

  // Measures leading whitespace, skips blank/comment-only lines, and emits
  // Indent/Dedent tokens. Returns false at end of input.
  bool handle_indentation() {
    while (pos_ < src_.size()) {
      int width = 0;
      while (pos_ < src_.size()) {
        const char c = src_[pos_];
        if (c == ' ') {
          ++width;
        } else if (c == '\t') {
          width = (width / 8 + 1) * 8;
        } else if (c == '\f') {
          width = 0;
        } else {
          break;
        }
        advance();
      }
      if (pos_ >= src_.size()) return false;
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
        if (pos_ >= src_.size()) return false;
      }
      if (src_[pos_] == '\n' || src_[pos_] == '\r') {
        eat_line_break();
        continue;
      }
      line_start_ = false;
      if (width > indents_.back()) {
        indents_.push_back(width);
        emit_empty(TokenKind::Indent);
      } else {
        while (width < indents_.back()) {
          indents_.pop_back();
          emit_empty(TokenKind::Dedent);
        }
        if (width != indents_.back()) {
          issue(line_, "unindent does not match any outer indentation level");
          indents_.push_back(width);
        }
      }
      return true;
    }
    return false;
  }

  void continuation() {
    const std::size_t next = pos_ + 1;
    if (next < src_.size() && (src_[next] == '\n' || src_[next] == '\r')) {
      ++pos_;
      eat_line_break();
    } else {
      issue(line_, "unexpected character after line continuation");
      advance();
    }
  }

  void newline_char() {
    if (brackets_.empty()) {
      if (!last_is_newline()) {
        const std::size_t start = pos_;
        out_.tokens.push_back({TokenKind::Newline, src_.substr(start, 1), line_, col_});
      }
      line_start_ = true;
    }
    eat_line_break();
  }

  void identifier_or_string() {
    const std::size_t start = pos_;
    const int col = col_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
        is_string_prefix(src_.substr(start, pos_ - start))) {
      string_literal(start, col);
      return;
    }
    emit(TokenKind::Name, start, col);
  }

  void number() {
    const std::size_t start = pos_;
    const int col = col_;
    const auto peek = [&](std::size_t k = 0) -> char {
      return pos_ + k < src_.size() ? src_[pos_ + k] : '\0';
    };
    if (peek() == '0' && std::strchr("xXoObB", peek(1)) && peek(1) != '\0') {
      advance();
      advance();
      while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
    } else {
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
      if (peek() == '.') {
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
      }
      if (peek() == 'e' || peek() == 'E') {
        const char sign = peek(1);
        if (std::isdigit(static_cast<unsigned char>(sign)) ||
            ((sign == '+' || sign == '-') && std::isdigit(static_cast<unsigned char>(peek(2))))) {
          advance();
          if (sign == '+' || sign == '-') advance();
          while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        }
      }
      if (peek() == 'j' || peek() == 'J') advance();
    }
    emit(TokenKind::Number, start, col);
  }

  void string_literal(std::size_t start, int col) {
    const char quote = src_[pos_];
    const int open_line = line_;
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    const std::size_t qlen = triple ? 3 : 1;
    for (std::size_t k = 0; k < qlen; ++k) advance();

    while (true) {
      if (pos_ >= src_.size()) {
        issue(open_line, triple ? "unterminated triple-quoted string literal"
                                : "unterminated string literal");
        break;
      }
      const char c = src_[pos_];
      if (c == '\\') {
        advance();
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n' || src_[pos_] == '\r') {
            eat_line_break();
          } else {
            advance();
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) {
          issue(open_line, "unterminated string literal");
          break;
        }
        eat_line_break();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          advance();
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          advance();
          advance();
          advance();
          break;
        }
      }
      advance();
    }
    out_.tokens.push_back({TokenKind::String, src_.substr(start, pos_ - start), open_line, col});
  }

  void op() {
    const std::string_view rest = src_.substr(pos_);
    if (rest.starts_with("```")) {
      issue(line_, "stray code fence");
      for (int k = 0; k < 3; ++k) advance();
      return;
    }
    for (std::string_view o : kOperators) {
      if (!rest.starts_with(o)) continue;
      const std::size_t start = pos_;
      const int col = col_;
      for (std::size_t k = 0; k < o.size(); ++k) advance();
      if (o.size() == 1 && std::strchr("([{", o[0])) {
        brackets_.push_back({o[0], line_});
      } else if (o.size() == 1 && std::strchr(")]}", o[0])) {
        const char want = o[0] == ')' ? '(' : o[0] == ']' ? '[' : '{';
        if (brackets_.empty()) {
          issue(line_, std::string("unmatched '") + o[0] + "'");
        } else if (brackets_.back().open != want) {
          issue(line_, std::string("closing '") + o[0] + "' does not match '" +
                           brackets_.back().open + "' opened on line " +
                           std::to_string(brackets_.back().line));
          brackets_.pop_back();
        } else {
          brackets_.pop_back();
        }
      }
      emit(TokenKind::Op, start, col);
      return;
    }
    issue(line_, std::string("invalid character '") + src_[pos_] + "'");
    advance();
  }

  void finish() {
    for (const auto& b : brackets_)
      issue(b.line, std::string("'") + b.open + "' was never closed");
    if (!last_is_newline()) emit_empty(TokenKind::Newline);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit_empty(TokenKind::Dedent);
    }
    emit_empty(TokenKind::End);
  }

  struct Open {
    char open;
    int line;
  };

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  bool line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<Open> brackets_;
  TokenStream out_;
};

}  // namespace

bool is_keyword(std::string_view word) noexcept {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

TokenStream tokenize(std::string_view source) { return Lexer(source).run(); }

// ---------------------------------------------------------------------------
// Parser

const char* to_string(NodeKind k) noexcept {
  switch (k) {
#define ARCHGEN_KIND(x) \
  case NodeKind::x:     \
    return #x;
    ARCHGEN_KIND(Module) ARCHGEN_KIND(Block) ARCHGEN_KIND(Import) ARCHGEN_KIND(ImportFrom)
    ARCHGEN_KIND(Alias) ARCHGEN_KIND(ClassDef) ARCHGEN_KIND(FunctionDef) ARCHGEN_KIND(Params)
    ARCHGEN_KIND(Param) ARCHGEN_KIND(StarParam) ARCHGEN_KIND(StarStarParam)
    ARCHGEN_KIND(Decorator) ARCHGEN_KIND(If) ARCHGEN_KIND(While) ARCHGEN_KIND(For)
    ARCHGEN_KIND(Try) ARCHGEN_KIND(ExceptHandler) ARCHGEN_KIND(With) ARCHGEN_KIND(WithItem)
    ARCHGEN_KIND(Return) ARCHGEN_KIND(Raise) ARCHGEN_KIND(Assert) ARCHGEN_KIND(Delete)
    ARCHGEN_KIND(Global) ARCHGEN_KIND(Nonlocal) ARCHGEN_KIND(Pass) ARCHGEN_KIND(Break)
    ARCHGEN_KIND(Continue) ARCHGEN_KIND(ExprStmt) ARCHGEN_KIND(Assign) ARCHGEN_KIND(AugAssign)
    ARCHGEN_KIND(AnnAssign) ARCHGEN_KIND(Name) ARCHGEN_KIND(Number) ARCHGEN_KIND(String)
    ARCHGEN_KIND(Constant) ARCHGEN_KIND(Ellipsis) ARCHGEN_KIND(Tuple) ARCHGEN_KIND(List)
    ARCHGEN_KIND(Dict) ARCHGEN_KIND(Set) ARCHGEN_KIND(DictItem) ARCHGEN_KIND(DoubleStar)
    ARCHGEN_KIND(Starred) ARCHGEN_KIND(ListComp) ARCHGEN_KIND(SetComp) ARCHGEN_KIND(DictComp)
    ARCHGEN_KIND(GeneratorExp) ARCHGEN_KIND(Comprehension) ARCHGEN_KIND(BinOp)
    ARCHGEN_KIND(UnaryOp) ARCHGEN_KIND(BoolOp) ARCHGEN_KIND(Compare) ARCHGEN_KIND(IfExp)
    ARCHGEN_KIND(Lambda) ARCHGEN_KIND(NamedExpr) ARCHGEN_KIND(Await) ARCHGEN_KIND(Yield)
    ARCHGEN_KIND(YieldFrom) ARCHGEN_KIND(Call) ARCHGEN_KIND(Keyword) ARCHGEN_KIND(Attribute)
    ARCHGEN_KIND(Subscript) ARCHGEN_KIND(Slice)
#undef ARCHGEN_KIND
  }
  return "?";
}

namespace {

struct SyntaxFailure {
  int line;
  std::string message;
};

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : t_(toks) {}

  Node module() {
    Node m = make(NodeKind::Module);
    while (!at(TokenKind::End)) {
      if (at(TokenKind::Newline)) {
        ++i_;
        continue;
      }
      statement(m.children);
    }
    return m;
  }

 private:
  // -- token helpers ------------------------------------------------------

  const Token& cur() const { return t_[i_]; }
  bool at(TokenKind k) const { return cur().kind == k; }
  bool at_op(std::string_view s) const { return cur().kind == TokenKind::Op && cur().text == s; }
  bool at_kw(std::string_view s) const { return cur().kind == TokenKind::Name && cur().text == s; }

  bool accept_op(std::string_view s) {
    if (!at_op(s)) return false;
    ++i_;
    return true;
  }
  bool accept_kw(std::string_view s) {
    if (!at_kw(s)) return false;
    ++i_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    std::string got = cur().kind == TokenKind::Newline  ? "end of line"
                      : cur().kind == TokenKind::Indent ? "indent"
                      : cur().kind == TokenKind::Dedent ? "dedent"
                      : cur().kind == TokenKind::End    ? "end of input"
                                                        : "'" + std::string(cur().text) + "'";
    throw SyntaxFailure{cur().line, "expected " + what + ", got " + got};
  }

  void expect_op(std::string_view s) {
    if (!accept_op(s)) fail("'" + std::string(s) + "'");
  }
  void expect_kw(std::string_view s) {
    if (!accept_kw(s)) fail("'" + std::string(s) + "'");
  }
  void expect(TokenKind k, const char* what) {
    if (!at(k)) fail(what);
    ++i_;
  }

  std::string identifier() {
    if (!at(TokenKind::Name) || is_keyword(cur().text)) fail("identifier");
    return std::string(t_[i_++].text);
  }

  Node make(NodeKind k, std::string text = {}) const { return Node{k, std::move(text), cur().line, {}}; }
  static Node wrap(NodeKind k, std::string text, int line, std::vector<Node> children) {
    return Node{k, std::move(text), line, std::move(children)};
  }

  // -- statements ---------------------------------------------------------

  void statement(std::vector<Node>& out) {
    if (at_kw("if")) return out.push_back(if_stmt());
    if (at_kw("while")) return out.push_back(while_stmt());
    if (at_kw("for")) return out.push_back(for_stmt());
    if (at_kw("try")) return out.push_back(try_stmt());
    if (at_kw("with")) return out.push_back(with_stmt());
    if (at_kw("def")) return out.push_back(funcdef({}));
    if (at_kw("class")) return out.push_back(classdef({}));
    if (at_op("@")) return out.push_back(decorated());
    if (at_kw("async")) {
      ++i_;
      if (at_kw("def")) return out.push_back(funcdef({}));
      if (at_kw("for")) return out.push_back(for_stmt());
      if (at_kw("with")) return out.push_back(with_stmt());
      fail("'def', 'for' or 'with' after 'async'");
    }
    simple_statements(out);
  }

  void simple_statements(std::vector<Node>& out) {
    out.push_back(small_statement());
    while (accept_op(";")) {
      if (at(TokenKind::Newline) || at(TokenKind::End)) break;
      out.push_back(small_statement());
    }
    if (at(TokenKind::End)) return;
    expect(TokenKind::Newline, "end of line");
  }

  Node block() {
    Node b = make(NodeKind::Block);
    expect_op(":");
    if (!at(TokenKind::Newline)) {
      simple_statements(b.children);
      return b;
    }
    ++i_;
    expect(TokenKind::Indent, "an indented block");
    while (!at(TokenKind::Dedent) && !at(TokenKind::End)) {
      if (at(TokenKind::Newline)) {
        ++i_;
        continue;
      }
      statement(b.children);
    }
    if (at(TokenKind::Dedent)) ++i_;
    return b;
  }

  Node small_statement() {
    const int line = cur().line;
    if (accept_kw("pass")) return wrap(NodeKind::Pass, {}, line, {});
    if (accept_kw("break")) return wrap(NodeKind::Break, {}, line, {});
    if (accept_kw("continue")) return wrap(NodeKind::Continue, {}, line, {});
    if (accept_kw("return")) {
      std::vector<Node> kids;
      if (!at_end_of_simple()) kids.push_back(testlist_star());
      return wrap(NodeKind::Return, {}, line, std::move(kids));
    }
    if (accept_kw("raise")) {
      std::vector<Node> kids;
      if (!at_end_of_simple()) {
        kids.push_back(test());
        if (accept_kw("from")) kids.push_back(test());
      }
      return wrap(NodeKind::Raise, {}, line, std::move(kids));
    }
    if (accept_kw("global") || accept_kw("nonlocal")) {
      const bool global = t_[i_ - 1].text == "global";
      Node n = wrap(global ? NodeKind::Global : NodeKind::Nonlocal, {}, line, {});
      do n.children.push_back(wrap(NodeKind::Name, identifier(), line, {}));
      while (accept_op(","));
      return n;
    }
    if (accept_kw("del")) return wrap(NodeKind::Delete, {}, line, {testlist_star()});
    if (accept_kw("assert")) {
      std::vector<Node> kids{test()};
      if (accept_op(",")) kids.push_back(test());
      return wrap(NodeKind::Assert, {}, line, std::move(kids));
    }
    if (at_kw("import")) return import_name();
    if (at_kw("from")) return import_from();
    return expr_statement();
  }

  bool at_end_of_simple() const {
    return at(TokenKind::Newline) || at(TokenKind::End) || at_op(";");
  }

  std::string dotted_name() {
    std::string name = identifier();
    while (accept_op(".")) name += "." + identifier();
    return name;
  }

  Node import_name() {
    Node n = make(NodeKind::Import);
    expect_kw("import");
    do {
      Node alias = make(NodeKind::Alias, dotted_name());
      if (accept_kw("as")) alias.children.push_back(make(NodeKind::Name, identifier()));
      n.children.push_back(std::move(alias));
    } while (accept_op(","));
    return n;
  }

  Node import_from() {
    Node n = make(NodeKind::ImportFrom);
    expect_kw("from");
    std::string module;
    while (at_op(".") || at_op("...")) module += std::string(t_[i_++].text);
    if (!at_kw("import")) module += dotted_name();
    if (module.empty()) fail("module name");
    n.text = module;
    expect_kw("import");
    if (accept_op("*")) {
      n.children.push_back(make(NodeKind::Alias, "*"));
      return n;
    }
    const bool paren = accept_op("(");
    do {
      if (paren && at_op(")")) break;
      Node alias = make(NodeKind::Alias, identifier());
      if (accept_kw("as")) alias.children.push_back(make(NodeKind::Name, identifier()));
      n.children.push_back(std::move(alias));
    } while (accept_op(","));
    if (paren) expect_op(")");
    return n;
  }

  Node expr_statement() {
    const int line = cur().line;
    if (at_kw("yield")) return wrap(NodeKind::ExprStmt, {}, line, {yield_expr()});
    Node first = testlist_star();
    static constexpr std::array<std::string_view, 13> kAug = {
        "+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**="};
    for (std::string_view a : kAug) {
      if (accept_op(a)) {
        Node value = at_kw("yield") ? yield_expr() : testlist_star();
        return wrap(NodeKind::AugAssign, std::string(a), line, {std::move(first), std::move(value)});
      }
    }
    if (accept_op(":")) {
      std::vector<Node> kids{std::move(first), test()};
      if (accept_op("=")) kids.push_back(at_kw("yield") ? yield_expr() : testlist_star());
      return wrap(NodeKind::AnnAssign, {}, line, std::move(kids));
    }
    if (at_op("=")) {
      std::vector<Node> kids{std::move(first)};
      while (accept_op("=")) kids.push_back(at_kw("yield") ? yield_expr() : testlist_star());
      return wrap(NodeKind::Assign, {}, line, std::move(kids));
    }
    return wrap(NodeKind::ExprStmt, {}, line, {std::move(first)});
  }

  Node if_stmt() {
    Node n = make(NodeKind::If);
    ++i_;  // 'if' or 'elif'
    n.children.push_back(namedexpr_test());
    n.children.push_back(block());
    if (at_kw("elif")) {
      n.children.push_back(if_stmt());
    } else if (accept_kw("else")) {
      n.children.push_back(block());
    }
    return n;
  }

  Node while_stmt() {
    Node n = make(NodeKind::While);
    expect_kw("while");
    n.children.push_back(namedexpr_test());
    n.children.push_back(block());
    if (accept_kw("else")) n.children.push_back(block());
    return n;
  }

  Node for_stmt() {
    Node n = make(NodeKind::For);
    expect_kw("for");
    n.children.push_back(exprlist());
    expect_kw("in");
    n.children.push_back(testlist_star());
    n.children.push_back(block());
    if (accept_kw("else")) n.children.push_back(block());
    return n;
  }

  Node try_stmt() {
    Node n = make(NodeKind::Try);
    expect_kw("try");
    n.children.push_back(block());
    bool handlers = false;
    while (at_kw("except")) {
      Node h = make(NodeKind::ExceptHandler);
      ++i_;
      if (!at_op(":")) {
        h.children.push_back(test());
        if (accept_kw("as")) h.text = identifier();
      }
      h.children.push_back(block());
      n.children.push_back(std::move(h));
      handlers = true;
    }
    if (handlers && accept_kw("else")) n.children.push_back(block());
    if (accept_kw("finally")) {
      Node f = make(NodeKind::Block, "finally");
      f.children.push_back(block());
      n.children.push_back(std::move(f));
    } else if (!handlers) {
      fail("'except' or 'finally'");
    }
    return n;
  }

  Node with_stmt() {
    Node n = make(NodeKind::With);
    expect_kw("with");
    do {
      Node item = make(NodeKind::WithItem);
      item.children.push_back(test());
      if (accept_kw("as")) item.children.push_back(expr());
      n.children.push_back(std::move(item));
    } while (accept_op(","));
    n.children.push_back(block());
    return n;
  }

  Node decorated() {
    std::vector<Node> decorators;
    while (at_op("@")) {
      Node d = make(NodeKind::Decorator);
      ++i_;
      d.children.push_back(namedexpr_test());
      expect(TokenKind::Newline, "end of line after decorator");
      decorators.push_back(std::move(d));
    }
    accept_kw("async");
    if (at_kw("def")) return funcdef(std::move(decorators));
    if (at_kw("class")) return classdef(std::move(decorators));
    fail("'def' or 'class' after decorator");
  }

  Node funcdef(std::vector<Node> decorators) {
    Node n = make(NodeKind::FunctionDef);
    expect_kw("def");
    n.text = identifier();
    expect_op("(");
    n.children.push_back(parameters(")", true));
    expect_op(")");
    if (accept_op("->")) n.children.push_back(test());
    for (auto& d : decorators) n.children.push_back(std::move(d));
    n.children.push_back(block());
    return n;
  }

  // Shared by def (annotations allowed) and lambda.
  Node parameters(std::string_view close, bool annotations) {
    Node ps = make(NodeKind::Params);
    while (!at_op(close)) {
      if (accept_op("/")) {
        ps.children.push_back(make(NodeKind::Param, "/"));
      } else if (accept_op("**")) {
        Node p = make(NodeKind::StarStarParam, identifier());
        if (annotations && accept_op(":")) p.children.push_back(test());
        ps.children.push_back(std::move(p));
      } else if (accept_op("*")) {
        Node p = make(NodeKind::StarParam);
        if (at(TokenKind::Name)) {
          p.text = identifier();
          if (annotations && accept_op(":")) p.children.push_back(test());
        }
        ps.children.push_back(std::move(p));
      } else {
        Node p = make(NodeKind::Param, identifier());
        if (annotations && accept_op(":")) p.children.push_back(test());
        if (accept_op("=")) p.children.push_back(test());
        ps.children.push_back(std::move(p));
      }
      if (!accept_op(",")) break;
    }
    return ps;
  }

  Node classdef(std::vector<Node> decorators) {
    Node n = make(NodeKind::ClassDef);
    expect_kw("class");
    n.text = identifier();
    if (accept_op("(")) {
      n.children.push_back(arguments(make(NodeKind::Call)));
      expect_op(")");
    }
    for (auto& d : decorators) n.children.push_back(std::move(d));
    n.children.push_back(block());
    return n;
  }

  // -- expressions --------------------------------------------------------

  Node yield_expr() {
    Node n = make(NodeKind::Yield);
    expect_kw("yield");
    if (accept_kw("from")) {
      n.kind = NodeKind::YieldFrom;
      n.children.push_back(test());
    } else if (!at_op(")") && !at_end_of_simple() && !at_op("=")) {
      n.children.push_back(testlist_star());
    }
    return n;
  }

  // test_or_star (',' test_or_star)* [','] -> Tuple when a comma is present.
  Node testlist_star() {
    const int line = cur().line;
    Node first = at_op("*") ? star_expr() : test();
    if (!at_op(",")) return first;
    std::vector<Node> items{std::move(first)};
    while (accept_op(",")) {
      if (at_end_of_tuple()) break;
      items.push_back(at_op("*") ? star_expr() : test());
    }
    return wrap(NodeKind::Tuple, {}, line, std::move(items));
  }

  Node exprlist() {
    const int line = cur().line;
    Node first = at_op("*") ? star_expr() : expr();
    if (!at_op(",")) return first;
    std::vector<Node> items{std::move(first)};
    while (accept_op(",")) {
      if (at_kw("in") || at_op("=")) break;
      items.push_back(at_op("*") ? star_expr() : expr());
    }
    return wrap(NodeKind::Tuple, {}, line, std::move(items));
  }

  bool at_end_of_tuple() const {
    return at_end_of_simple() || at_op(")") || at_op("]") || at_op("}") || at_op("=") ||
           at_op(":") || at(TokenKind::Newline);
  }

  Node star_expr() {
    Node n = make(NodeKind::Starred);
    expect_op("*");
    n.children.push_back(expr());
    return n;
  }

  Node namedexpr_test() {
    Node t = test();
    if (accept_op(":=")) return wrap(NodeKind::NamedExpr, {}, t.line, {std::move(t), test()});
    return t;
  }

  Node test() {
    if (at_kw("lambda")) return lambda(false);
    Node cond = or_test();
    if (at_kw("if")) {
      const int line = cur().line;
      ++i_;
      Node pred = or_test();
      expect_kw("else");
      Node orelse = test();
      return wrap(NodeKind::IfExp, {}, line, {std::move(cond), std::move(pred), std::move(orelse)});
    }
    return cond;
  }

  Node test_nocond() { return at_kw("lambda") ? lambda(true) : or_test(); }

  Node lambda(bool nocond) {
    Node n = make(NodeKind::Lambda);
    expect_kw("lambda");
    n.children.push_back(parameters(":", false));
    expect_op(":");
    n.children.push_back(nocond ? test_nocond() : test());
    return n;
  }

  Node or_test() {
    Node left = and_test();
    if (!at_kw("or")) return left;
    Node n = wrap(NodeKind::BoolOp, "or", left.line, {std::move(left)});
    while (accept_kw("or")) n.children.push_back(and_test());
    return n;
  }

  Node and_test() {
    Node left = not_test();
    if (!at_kw("and")) return left;
    Node n = wrap(NodeKind::BoolOp, "and", left.line, {std::move(left)});
    while (accept_kw("and")) n.children.push_back(not_test());
    return n;
  }

  Node not_test() {
    if (at_kw("not")) {
      const int line = cur().line;
      ++i_;
      return wrap(NodeKind::UnaryOp, "not", line, {not_test()});
    }
    return comparison();
  }

  // Returns the comparison operator at the cursor (consuming it) or empty.
  std::string comp_op() {
    static constexpr std::array<std::string_view, 6> kOps = {"<", ">", "==", ">=", "<=", "!="};
    for (std::string_view o : kOps)
      if (accept_op(o)) return std::string(o);
    if (accept_kw("in")) return "in";
    if (at_kw("not") && t_[i_ + 1].kind == TokenKind::Name && t_[i_ + 1].text == "in") {
      i_ += 2;
      return "not in";
    }
    if (accept_kw("is")) return accept_kw("not") ? "is not" : "is";
    return {};
  }

  Node comparison() {
    Node left = expr();
    std::string op = comp_op();
    if (op.empty()) return left;
    Node n = wrap(NodeKind::Compare, {}, left.line, {std::move(left)});
    do {
      n.text += op + ";";
      n.children.push_back(expr());
    } while (!(op = comp_op()).empty());
    return n;
  }

  template <typename Next>
  Node binary(Next next, std::initializer_list<std::string_view> ops) {
    Node left = (this->*next)();
    while (true) {
      std::string_view matched;
      for (std::string_view o : ops)
        if (at_op(o)) matched = o;
      if (matched.empty()) return left;
      ++i_;
      const int line = left.line;
      left = wrap(NodeKind::BinOp, std::string(matched), line, {std::move(left), (this->*next)()});
    }
  }

  Node expr() { return binary(&Parser::xor_expr, {"|"}); }
  Node xor_expr() { return binary(&Parser::and_expr, {"^"}); }
  Node and_expr() { return binary(&Parser::shift_expr, {"&"}); }
  Node shift_expr() { return binary(&Parser::arith_expr, {"<<", ">>"}); }
  Node arith_expr() { return binary(&Parser::term, {"+", "-"}); }
  Node term() { return binary(&Parser::factor, {"*", "/", "%", "//", "@"}); }

  Node factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const int line = cur().line;
      std::string op(t_[i_++].text);
      return wrap(NodeKind::UnaryOp, std::move(op), line, {factor()});
    }
    return power();
  }

  Node power() {
    const int line = cur().line;
    const bool awaited = accept_kw("await");
    Node base = atom();
    while (true) {
      if (at_op("(")) {
        ++i_;
        Node call = wrap(NodeKind::Call, {}, base.line, {std::move(base)});
        base = arguments(std::move(call));
        expect_op(")");
      } else if (at_op("[")) {
        ++i_;
        base = wrap(NodeKind::Subscript, {}, base.line, {std::move(base), subscripts()});
        expect_op("]");
      } else if (accept_op(".")) {
        base = wrap(NodeKind::Attribute, identifier(), base.line, {std::move(base)});
      } else {
        break;
      }
    }
    if (awaited) base = wrap(NodeKind::Await, {}, line, {std::move(base)});
    if (accept_op("**")) return wrap(NodeKind::BinOp, "**", line, {std::move(base), factor()});
    return base;
  }

  Node subscripts() {
    const int line = cur().line;
    Node first = subscript();
    if (!at_op(",")) return first;
    std::vector<Node> items{std::move(first)};
    while (accept_op(",")) {
      if (at_op("]")) break;
      items.push_back(subscript());
    }
    return wrap(NodeKind::Tuple, {}, line, std::move(items));
  }

  Node subscript() {
    const int line = cur().line;
    std::optional<Node> lower;
    if (!at_op(":")) {
      Node t = at_op("*") ? star_expr() : test();
      if (!at_op(":")) return t;
      lower = std::move(t);
    }
    Node s = wrap(NodeKind::Slice, {}, line, {});
    s.children.push_back(lower ? std::move(*lower) : wrap(NodeKind::Constant, "None", line, {}));
    expect_op(":");
    s.children.push_back(at_op(":") || at_op("]") || at_op(",") ? wrap(NodeKind::Constant, "None", line, {})
                                                                : test());
    if (accept_op(":") && !at_op("]") && !at_op(",")) s.children.push_back(test());
    return s;
  }

  // Parses call arguments into the given Call node (callee already present).
  Node arguments(Node call) {
    while (!at_op(")")) {
      const int line = cur().line;
      if (accept_op("**")) {
        call.children.push_back(wrap(NodeKind::DoubleStar, {}, line, {test()}));
      } else if (accept_op("*")) {
        call.children.push_back(wrap(NodeKind::Starred, {}, line, {test()}));
      } else if (at(TokenKind::Name) && t_[i_ + 1].kind == TokenKind::Op && t_[i_ + 1].text == "=") {
        std::string name = identifier();
        ++i_;
        call.children.push_back(wrap(NodeKind::Keyword, std::move(name), line, {test()}));
      } else {
        Node arg = namedexpr_test();
        if (at_kw("for") || at_kw("async")) {
          arg = wrap(NodeKind::GeneratorExp, {}, line, {std::move(arg)});
          comprehension_clauses(arg);
        }
        call.children.push_back(std::move(arg));
      }
      if (!accept_op(",")) break;
    }
    return call;
  }

  void comprehension_clauses(Node& owner) {
    while (at_kw("for") || at_kw("async")) {
      Node c = make(NodeKind::Comprehension);
      accept_kw("async");
      expect_kw("for");
      c.children.push_back(exprlist());
      expect_kw("in");
      c.children.push_back(or_test());
      while (at_kw("if")) {
        ++i_;
        c.children.push_back(test_nocond());
      }
      owner.children.push_back(std::move(c));
    }
  }

  Node atom() {
    const Token& tok = cur();
    const int line = tok.line;
    switch (tok.kind) {
      case TokenKind::Number:
        ++i_;
        return wrap(NodeKind::Number, std::string(tok.text), line, {});
      case TokenKind::String: {
        std::string text;
        while (at(TokenKind::String)) text += std::string(t_[i_++].text);
        return wrap(NodeKind::String, std::move(text), line, {});
      }
      case TokenKind::Name:
        if (tok.text == "None" || tok.text == "True" || tok.text == "False") {
          ++i_;
          return wrap(NodeKind::Constant, std::string(tok.text), line, {});
        }
        return wrap(NodeKind::Name, identifier(), line, {});
      case TokenKind::Op:
        if (accept_op("...")) return wrap(NodeKind::Ellipsis, {}, line, {});
        if (accept_op("(")) return paren_atom(line);
        if (accept_op("[")) return list_atom(line);
        if (accept_op("{")) return brace_atom(line);
        break;
      default:
        break;
    }
    fail("expression");
  }

  Node paren_atom(int line) {
    if (accept_op(")")) return wrap(NodeKind::Tuple, {}, line, {});
    if (at_kw("yield")) {
      Node y = yield_expr();
      expect_op(")");
      return y;
    }
    Node first = at_op("*") ? star_expr() : namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      Node g = wrap(NodeKind::GeneratorExp, {}, line, {std::move(first)});
      comprehension_clauses(g);
      expect_op(")");
      return g;
    }
    if (accept_op(")")) return first;
    Node tuple = wrap(NodeKind::Tuple, {}, line, {std::move(first)});
    while (accept_op(",")) {
      if (at_op(")")) break;
      tuple.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
    }
    expect_op(")");
    return tuple;
  }

  Node list_atom(int line) {
    Node list = wrap(NodeKind::List, {}, line, {});
    if (accept_op("]")) return list;
    Node first = at_op("*") ? star_expr() : namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      Node comp = wrap(NodeKind::ListComp, {}, line, {std::move(first)});
      comprehension_clauses(comp);
      expect_op("]");
      return comp;
    }
    list.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
    }
    expect_op("]");
    return list;
  }

  Node brace_atom(int line) {
    if (accept_op("}")) return wrap(NodeKind::Dict, {}, line, {});
    // First element decides dict vs set.
    Node first = dict_or_set_item();
    const bool is_dict = first.kind == NodeKind::DictItem || first.kind == NodeKind::DoubleStar;
    if (at_kw("for") || at_kw("async")) {
      Node comp = wrap(is_dict ? NodeKind::DictComp : NodeKind::SetComp, {}, line, {std::move(first)});
      comprehension_clauses(comp);
      expect_op("}");
      return comp;
    }
    Node n = wrap(is_dict ? NodeKind::Dict : NodeKind::Set, {}, line, {std::move(first)});
    while (accept_op(",")) {
      if (at_op("}")) break;
      Node item = dict_or_set_item();
      const bool item_dict = item.kind == NodeKind::DictItem || item.kind == NodeKind::DoubleStar;
      if (item_dict != is_dict) fail(is_dict ? "'key: value'" : "set element");
      n.children.push_back(std::move(item));
    }
    expect_op("}");
    return n;
  }

  Node dict_or_set_item() {
    const int line = cur().line;
    if (accept_op("**")) return wrap(NodeKind::DoubleStar, {}, line, {expr()});
    if (at_op("*")) return star_expr();
    Node key = test();
    if (accept_op(":")) return wrap(NodeKind::DictItem, {}, line, {std::move(key), test()});
    return key;
  }

  const std::vector<Token>& t_;
  std::size_t i_ = 0;
};

void serialize(const Node& n, std::string& out) {
  out += to_string(n.kind);
  if (!n.text.empty()) {
    out += ':';
    out += n.text;
  }
  if (n.children.empty()) return;
  out += '(';
  for (std::size_t k = 0; k < n.children.size(); ++k) {
    if (k) out += ',';
    serialize(n.children[k], out);
  }
  out += ')';
}

}  // namespace

ParseResult parse(std::string_view source) {
  TokenStream ts = tokenize(source);
  if (!ts.ok()) return {std::nullopt, ts.issues.front()};
  try {
    return {Parser(ts.tokens).module(), std::nullopt};
  } catch (const SyntaxFailure& f) {
    return {std::nullopt, SyntaxIssue{f.line, f.message}};
  }
}

std::string canonical_form(const Node& tree) {
  std::string out;
  serialize(tree, out);
  return out;
}

std::size_t node_count(const Node& tree) noexcept {
  std::size_t n = 1;
  for (const auto& c : tree.children) n += node_count(c);
  return n;
}

}  // namespace archgen::py
