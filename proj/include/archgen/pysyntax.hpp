#pragma once

// Tokenizer and recursive-descent parser for the Python subset that generated
// PyTorch models use. The tokenizer feeds the structural checks in codecheck;
// the parser is the full-parse baseline the hash path is benchmarked against.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace archgen::py {

enum class TokenKind : std::uint8_t { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  TokenKind kind;
  std::string_view text;  // view into the tokenized source
  int line;
  int col;
};

struct SyntaxIssue {
  int line;
  std::string message;
};

struct TokenStream {
  std::vector<Token> tokens;        // always terminated by End
  std::vector<SyntaxIssue> issues;  // lexical problems; tokenization continues past them
  bool ok() const noexcept { return issues.empty(); }
};

/// Tokenizes source. The returned views borrow from source.
TokenStream tokenize(std::string_view source);

bool is_keyword(std::string_view word) noexcept;

enum class NodeKind : std::uint8_t {
  Module, Block,
  Import, ImportFrom, Alias,
  ClassDef, FunctionDef, Params, Param, StarParam, StarStarParam, Decorator,
  If, While, For, Try, ExceptHandler, With, WithItem,
  Return, Raise, Assert, Delete, Global, Nonlocal, Pass, Break, Continue,
  ExprStmt, Assign, AugAssign, AnnAssign,
  Name, Number, String, Constant, Ellipsis,
  Tuple, List, Dict, Set, DictItem, DoubleStar, Starred,
  ListComp, SetComp, DictComp, GeneratorExp, Comprehension,
  BinOp, UnaryOp, BoolOp, Compare, IfExp, Lambda, NamedExpr, Await, Yield, YieldFrom,
  Call, Keyword, Attribute, Subscript, Slice,
};

const char* to_string(NodeKind k) noexcept;

struct Node {
  NodeKind kind;
  std::string text;  // identifier, literal, or operator where applicable
  int line = 0;
  std::vector<Node> children;
};

struct ParseResult {
  std::optional<Node> tree;
  std::optional<SyntaxIssue> error;
};

/// Full parse into a syntax tree. Never throws on bad input.
ParseResult parse(std::string_view source);

/// Canonical preorder serialization of a tree; formatting-independent.
std::string canonical_form(const Node& tree);

/// Number of nodes in the tree.
std::size_t node_count(const Node& tree) noexcept;

}  // namespace archgen::py
