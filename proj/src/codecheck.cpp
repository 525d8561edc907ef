#include "archgen/codecheck.hpp"

#include <algorithm>
#include <optional>

#include "archgen/pysyntax.hpp"

namespace archgen::codecheck {

using py::Token;
using py::TokenKind;

std::string rule_id(Rule r) { return "R" + std::to_string(static_cast<int>(r)); }

bool ValidationReport::violates(Rule r) const {
  return std::any_of(violations.begin(), violations.end(),
                     [r](const Violation& v) { return v.rule == r; });
}

namespace {

struct Param {
  std::string name;
  bool has_default = false;
  bool variadic = false;  // *args, **kwargs or bare *
};

struct Def {
  std::string name;
  std::vector<Param> params;
  int line;
  int depth;
  int class_index;              // enclosing class, -1 at module level
  std::size_t body_begin;       // token range of the body
  std::size_t body_end;
};

struct ClassInfo {
  std::string name;
  int line;
  int depth;
};

struct Outline {
  std::vector<ClassInfo> classes;
  std::vector<Def> defs;
};

bool is_op(const Token& t, std::string_view s) { return t.kind == TokenKind::Op && t.text == s; }
bool is_name(const Token& t, std::string_view s) { return t.kind == TokenKind::Name && t.text == s; }

bool starts_block(std::string_view word) {
  static constexpr std::string_view kHeads[] = {"def",  "class",  "if",      "elif", "else", "for",
                                                "while", "try",   "except",  "finally", "with",
                                                "async"};
  return std::find(std::begin(kHeads), std::end(kHeads), word) != std::end(kHeads);
}

// End (exclusive) of the body that starts right after the header's ':' token.
std::size_t body_end(const std::vector<Token>& toks, std::size_t after_colon) {
  std::size_t i = after_colon;
  if (i < toks.size() && toks[i].kind == TokenKind::Newline && i + 1 < toks.size() &&
      toks[i + 1].kind == TokenKind::Indent) {
    int level = 0;
    for (i += 1; i < toks.size(); ++i) {
      if (toks[i].kind == TokenKind::Indent) ++level;
      if (toks[i].kind == TokenKind::Dedent && --level == 0) return i;
      if (toks[i].kind == TokenKind::End) return i;
    }
    return toks.size();
  }
  while (i < toks.size() && toks[i].kind != TokenKind::Newline && toks[i].kind != TokenKind::End) ++i;
  return i;
}

// Parses "( ... )" starting at toks[i] == "(". Returns index past ')'.
std::size_t parse_params(const std::vector<Token>& toks, std::size_t i, std::vector<Param>& out) {
  int depth = 0;
  bool expecting_name = true;
  for (; i < toks.size() && toks[i].kind != TokenKind::End; ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::Op && (t.text == "(" || t.text == "[" || t.text == "{")) {
      ++depth;
      continue;
    }
    if (t.kind == TokenKind::Op && (t.text == ")" || t.text == "]" || t.text == "}")) {
      if (--depth == 0) return i + 1;
      continue;
    }
    if (depth != 1) continue;
    if (is_op(t, ",")) {
      expecting_name = true;
    } else if (expecting_name && (is_op(t, "*") || is_op(t, "**"))) {
      out.push_back({std::string(t.text), false, true});
      if (i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Name) out.back().name = toks[++i].text;
      expecting_name = false;
    } else if (expecting_name && is_op(t, "/")) {
      expecting_name = false;
    } else if (expecting_name && t.kind == TokenKind::Name) {
      out.push_back({std::string(t.text)});
      expecting_name = false;
    } else if (is_op(t, "=") && !out.empty()) {
      out.back().has_default = true;
    }
  }
  return i;
}

Outline outline(const std::vector<Token>& toks) {
  Outline o;
  int depth = 0;
  std::vector<std::pair<int, int>> class_stack;  // (class index, body depth)
  bool line_start = true;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::Indent) {
      ++depth;
      continue;
    }
    if (t.kind == TokenKind::Dedent) {
      --depth;
      while (!class_stack.empty() && class_stack.back().second > depth) class_stack.pop_back();
      continue;
    }
    if (t.kind == TokenKind::Newline) {
      line_start = true;
      continue;
    }
    const bool at_start = line_start;
    line_start = false;
    if (!at_start) continue;

    std::size_t k = i;
    if (is_name(toks[k], "async")) ++k;
    if (is_name(toks[k], "class") && toks[k + 1].kind == TokenKind::Name) {
      o.classes.push_back({std::string(toks[k + 1].text), toks[k].line, depth});
      class_stack.emplace_back(static_cast<int>(o.classes.size()) - 1, depth + 1);
    } else if (is_name(toks[k], "def") && toks[k + 1].kind == TokenKind::Name &&
               is_op(toks[k + 2], "(")) {
      Def d{std::string(toks[k + 1].text), {}, toks[k].line, depth, -1, 0, 0};
      if (!class_stack.empty() && class_stack.back().second == depth) d.class_index = class_stack.back().first;
      std::size_t j = parse_params(toks, k + 2, d.params);
      // Skip an optional return annotation up to the header colon.
      int nest = 0;
      while (j < toks.size() && toks[j].kind != TokenKind::End && toks[j].kind != TokenKind::Newline) {
        if (is_op(toks[j], "(") || is_op(toks[j], "[")) ++nest;
        if (is_op(toks[j], ")") || is_op(toks[j], "]")) --nest;
        if (nest == 0 && is_op(toks[j], ":")) break;
        ++j;
      }
      d.body_begin = j + 1;
      d.body_end = body_end(toks, j + 1);
      o.defs.push_back(std::move(d));
    }
  }
  return o;
}

std::string string_value(std::string_view literal) {
  std::size_t p = 0;
  while (p < literal.size() && literal[p] != '"' && literal[p] != '\'') ++p;
  std::string_view body = literal.substr(p);
  const std::size_t q = body.size() >= 6 && (body.starts_with("\"\"\"") || body.starts_with("'''")) ? 3 : 1;
  if (body.size() < 2 * q) return {};
  return std::string(body.substr(q, body.size() - 2 * q));
}

void check_well_formed(const py::TokenStream& ts, std::vector<Violation>& out) {
  for (const auto& issue : ts.issues) out.push_back({Rule::WellFormed, issue.message, issue.line});

  const auto& toks = ts.tokens;
  std::size_t line_begin = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind == TokenKind::Indent) {
      // Legal only after a block header line ending in ':'.
      const bool after_header = i >= 2 && toks[i - 1].kind == TokenKind::Newline && is_op(toks[i - 2], ":");
      if (!after_header) out.push_back({Rule::WellFormed, "unexpected indent", toks[i].line});
      line_begin = i + 1;
      continue;
    }
    if (toks[i].kind == TokenKind::Dedent) {
      line_begin = i + 1;
      continue;
    }
    if (toks[i].kind != TokenKind::Newline) continue;
    const std::size_t head = line_begin;
    const bool header = i > line_begin && is_op(toks[i - 1], ":") && toks[head].kind == TokenKind::Name &&
                        starts_block(toks[head].text);
    if (header && (i + 1 >= toks.size() || toks[i + 1].kind != TokenKind::Indent))
      out.push_back({Rule::WellFormed, "expected an indented block after '" +
                                           std::string(toks[head].text) + "' header",
                     toks[head].line});
    line_begin = i + 1;
  }
}

void check_imports(const std::vector<Token>& toks, std::vector<Violation>& out) {
  bool line_start = true;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::Newline || t.kind == TokenKind::Indent || t.kind == TokenKind::Dedent) {
      line_start = true;
      continue;
    }
    const bool at_start = line_start || (i > 0 && is_op(toks[i - 1], ";"));
    line_start = false;
    if (!at_start) continue;

    if (is_name(t, "import")) {
      // import a.b as c, torchvision.models
      bool expect_module = true;
      for (std::size_t j = i + 1; j < toks.size() && toks[j].kind != TokenKind::Newline && !is_op(toks[j], ";"); ++j) {
        if (is_op(toks[j], ",")) {
          expect_module = true;
        } else if (expect_module && toks[j].kind == TokenKind::Name) {
          if (toks[j].text == "torchvision")
            out.push_back({Rule::NoTorchvision, "imports torchvision", t.line});
          expect_module = false;
        }
      }
    } else if (is_name(t, "from") && i + 1 < toks.size() && is_name(toks[i + 1], "torchvision")) {
      out.push_back({Rule::NoTorchvision, "imports from torchvision", t.line});
    }
  }
}

void check_methods(const Outline& o, std::vector<Violation>& out) {
  // Methods are looked up on Net, or on the first top-level class when Net is
  // absent so that a renamed class fails R1 alone.
  int target = -1;
  for (std::size_t c = 0; c < o.classes.size(); ++c)
    if (o.classes[c].depth == 0 && o.classes[c].name == "Net") {
      target = static_cast<int>(c);
      break;
    }
  if (target < 0)
    for (std::size_t c = 0; c < o.classes.size(); ++c)
      if (o.classes[c].depth == 0) {
        target = static_cast<int>(c);
        break;
      }
  if (target < 0) {
    out.push_back({Rule::RequiredMethods, "no class to hold the required methods", 0});
    return;
  }
  const ClassInfo& cls = o.classes[static_cast<std::size_t>(target)];

  struct Required {
    std::string_view name;
    std::vector<std::string_view> params;  // positional, after self
  };
  const Required required[] = {{"__init__", {}},
                               {"forward", {}},
                               {"train_setup", {"device"}},
                               {"learn", {"data", "target", "device"}}};

  for (const auto& req : required) {
    const auto it = std::find_if(o.defs.begin(), o.defs.end(), [&](const Def& d) {
      return d.class_index == target && d.name == req.name;
    });
    if (it == o.defs.end()) {
      out.push_back({Rule::RequiredMethods,
                     "class " + cls.name + " lacks method " + std::string(req.name), cls.line});
      continue;
    }
    if (it->params.empty() || it->params.front().variadic) {
      out.push_back({Rule::RequiredMethods, std::string(req.name) + " must take self", it->line});
      continue;
    }
    std::vector<Param> rest(it->params.begin() + 1, it->params.end());
    bool ok = rest.size() >= req.params.size();
    for (std::size_t k = 0; ok && k < req.params.size(); ++k)
      ok = !rest[k].variadic && rest[k].name == req.params[k];
    for (std::size_t k = req.params.size(); ok && !req.params.empty() && k < rest.size(); ++k)
      ok = rest[k].has_default || rest[k].variadic;
    if (!ok) {
      std::string want = "self";
      for (auto p : req.params) want += ", " + std::string(p);
      out.push_back({Rule::RequiredMethods,
                     std::string(req.name) + " must have signature (" + want + ")", it->line});
    }
  }
}

void check_hyperparameters(const Outline& o, const std::vector<Token>& toks, std::vector<Violation>& out) {
  const auto it = std::find_if(o.defs.begin(), o.defs.end(),
                               [](const Def& d) { return d.name == "supported_hyperparameters"; });
  if (it == o.defs.end()) {
    out.push_back({Rule::Hyperparameters, "supported_hyperparameters is not defined", 0});
    return;
  }
  bool lr = false, momentum = false;
  for (std::size_t i = it->body_begin; i < it->body_end && i < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::String) continue;
    const std::string v = string_value(toks[i].text);
    lr = lr || v == "lr";
    momentum = momentum || v == "momentum";
  }
  if (!lr || !momentum)
    out.push_back({Rule::Hyperparameters,
                   std::string("supported_hyperparameters must mention ") +
                       (!lr && !momentum ? "'lr' and 'momentum'" : !lr ? "'lr'" : "'momentum'"),
                   it->line});
}

}  // namespace

ValidationReport validate(std::string_view code) {
  const py::TokenStream ts = py::tokenize(code);
  const Outline o = outline(ts.tokens);

  std::vector<Violation> v;
  const bool has_net = std::any_of(o.classes.begin(), o.classes.end(),
                                   [](const ClassInfo& c) { return c.depth == 0 && c.name == "Net"; });
  if (!has_net) v.push_back({Rule::NetClass, "no top-level class named Net", 0});
  check_methods(o, v);
  check_hyperparameters(o, ts.tokens, v);
  check_imports(ts.tokens, v);
  check_well_formed(ts, v);

  std::stable_sort(v.begin(), v.end(),
                   [](const Violation& a, const Violation& b) { return a.rule < b.rule; });
  return ValidationReport{v.empty(), std::move(v)};
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json j;
  j["passed"] = report.passed;
  j["violations"] = nlohmann::json::array();
  for (const auto& v : report.violations)
    j["violations"].push_back({{"rule", rule_id(v.rule)}, {"message", v.message}, {"line", v.line}});
  return j;
}

}  // namespace archgen::codecheck
