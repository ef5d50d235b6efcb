#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "archweave/actions.hpp"
#include "archweave/condition.hpp"
#include "archweave/model.hpp"
#include "archweave/pattern.hpp"
#include "archweave/units.hpp"

namespace archweave {

// ---------------------------------------------------------------------------
// Source units
// ---------------------------------------------------------------------------

enum class UnitKind {
  Architecture,
  Pattern,
  RefinementDef,
  CodegenMapping,
  ResourceInventory,
  Unknown,
};

struct SourceUnit {
  UnitKind kind = UnitKind::Unknown;
  std::string text;
  std::string origin; // file path, for diagnostics
};

/// Parse outcome: exactly one of `value` or a non-empty diagnostic set.
/// `semantic` carries model validation findings forwarded by the parser.
template <typename T>
struct ParseResult {
  std::optional<T> value;
  std::vector<ParseDiagnostic> diagnostics;
  Diagnostics semantic;

  bool ok() const { return value.has_value(); }

  const T& operator*() const { return *value; }
  T& operator*() { return *value; }
  const T* operator->() const { return &*value; }
  T* operator->() { return &*value; }
};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

enum class Tok {
  Ident,
  Int,
  String,
  Annot,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Dot,
  Semi,
  Colon,
  ColonColon,
  Assign, // :=
  Equals,
  Minus,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long int_val = 0;
  // annotation payload
  std::string annot_ref;
  long long annot_priority = 0;
  long long annot_range = 0;
  int line = 1;
  int col = 1;
};

struct ParseAbort {
  ParseDiagnostic diag;
};

[[noreturn]] inline void abort_parse(int line, int col, std::string msg,
                                     std::vector<std::string> expected = {}) {
  throw ParseAbort{ParseDiagnostic{line, col, std::move(msg), std::move(expected)}};
}

class Lexer {
public:
  explicit Lexer(const std::string& text) : src_(text) {}

  Token next() {
    skip_trivia();
    Token t;
    t.line = line_;
    t.col = col_;
    if (eof()) return t;

    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      t.text = lex_word();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Int;
      t.int_val = lex_int();
      t.text = std::to_string(t.int_val);
      return t;
    }
    switch (c) {
      case '"': t.kind = Tok::String; t.text = lex_string(); return t;
      case '{': get(); t.kind = Tok::LBrace; return t;
      case '}': get(); t.kind = Tok::RBrace; return t;
      case '(': get(); t.kind = Tok::LParen; return t;
      case ')': get(); t.kind = Tok::RParen; return t;
      case '[': get(); t.kind = Tok::LBracket; return t;
      case ']': get(); t.kind = Tok::RBracket; return t;
      case ',': get(); t.kind = Tok::Comma; return t;
      case '.': get(); t.kind = Tok::Dot; return t;
      case ';': get(); t.kind = Tok::Semi; return t;
      case '=': get(); t.kind = Tok::Equals; return t;
      case '-': get(); t.kind = Tok::Minus; return t;
      case ':':
        get();
        if (!eof() && peek() == ':') {
          get();
          t.kind = Tok::ColonColon;
        } else if (!eof() && peek() == '=') {
          get();
          t.kind = Tok::Assign;
        } else {
          t.kind = Tok::Colon;
        }
        return t;
      default:
        abort_parse(line_, col_, std::string("unexpected character '") + c + "'");
    }
  }

  /// Lexes the strict annotation marker after "--<" has been recognized.
  Token lex_annotation(int line, int col) {
    Token t;
    t.kind = Tok::Annot;
    t.line = line;
    t.col = col;
    t.annot_ref = require_word("constraint reference");
    require_exact("::", "'::'");
    require_exact("priority:", "'priority:'");
    t.annot_priority = require_marker_int();
    require_exact(",range:", "',range:'");
    t.annot_range = require_marker_int();
    require_exact(">--", "'>--'");
    return t;
  }

  int line() const { return line_; }
  int col() const { return col_; }

private:
  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char get() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_trivia() {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
        continue;
      }
      if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        if (pos_ + 2 < src_.size() && src_[pos_ + 2] == '<') return; // annotation
        while (!eof() && peek() != '\n') get();
        continue;
      }
      return;
    }
  }

public:
  /// Returns true when the next token is the annotation marker. Must be
  /// called where skip_trivia left us at "--<".
  bool peek_is_annotation() {
    skip_trivia();
    return !eof() && peek() == '-' && pos_ + 2 < src_.size() &&
           src_[pos_ + 1] == '-' && src_[pos_ + 2] == '<';
  }

  Token take_annotation() {
    skip_trivia();
    int l = line_, c = col_;
    get(); // -
    get(); // -
    get(); // <
    return lex_annotation(l, c);
  }

private:
  std::string lex_word() {
    std::string w;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
      w.push_back(get());
    return w;
  }

  long long lex_int() {
    long long v = 0;
    while (!eof() && std::isdigit(static_cast<unsigned char>(peek())))
      v = v * 10 + (get() - '0');
    return v;
  }

  std::string lex_string() {
    get(); // opening quote
    std::string s;
    while (true) {
      if (eof()) abort_parse(line_, col_, "unterminated string literal");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) abort_parse(line_, col_, "unterminated string literal");
        char e = get();
        switch (e) {
          case 'n': s.push_back('\n'); break;
          case '"': s.push_back('"'); break;
          case '\\': s.push_back('\\'); break;
          default: s.push_back(e);
        }
      } else {
        s.push_back(c);
      }
    }
    return s;
  }

  // --- strict helpers for the annotation marker (no interior whitespace) ---

  std::string require_word(const char* what) {
    if (eof() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_'))
      abort_parse(line_, col_, std::string("malformed annotation: expected ") + what,
                  {what});
    return lex_word();
  }

  void require_exact(const char* lit, const char* what) {
    for (const char* p = lit; *p; ++p) {
      if (eof() || peek() != *p)
        abort_parse(line_, col_,
                    std::string("malformed annotation: expected ") + what +
                        " with no interior whitespace",
                    {what});
      get();
    }
  }

  long long require_marker_int() {
    bool negative = false;
    if (!eof() && peek() == '-') {
      negative = true;
      get();
    }
    if (eof() || !std::isdigit(static_cast<unsigned char>(peek())))
      abort_parse(line_, col_, "malformed annotation: expected integer", {"integer"});
    long long v = lex_int();
    return negative ? -v : v;
  }
};

// ---------------------------------------------------------------------------
// Parser core
// ---------------------------------------------------------------------------

class Parser {
public:
  explicit Parser(const std::string& text) : lex_(text) { advance(); }

  // --- token plumbing ---

  const Token& cur() const { return cur_; }

  void advance() {
    if (lex_.peek_is_annotation())
      cur_ = lex_.take_annotation();
    else
      cur_ = lex_.next();
  }

  bool at(Tok k) const { return cur_.kind == k; }
  bool at_word(const char* w) const { return cur_.kind == Tok::Ident && cur_.text == w; }

  bool accept(Tok k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  bool accept_word(const char* w) {
    if (!at_word(w)) return false;
    advance();
    return true;
  }

  void expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what, {what});
    advance();
  }
  void expect_word(const char* w) {
    if (!at_word(w)) fail(std::string("expected '") + w + "'", {w});
    advance();
  }

  std::string expect_ident(const char* what = "identifier") {
    if (!at(Tok::Ident)) fail(std::string("expected ") + what, {what});
    std::string s = cur_.text;
    advance();
    return s;
  }

  long long expect_int(const char* what = "integer") {
    if (!at(Tok::Int)) fail(std::string("expected ") + what, {what});
    long long v = cur_.int_val;
    advance();
    return v;
  }

  std::string expect_string(const char* what = "string literal") {
    if (!at(Tok::String)) fail(std::string("expected ") + what, {what});
    std::string s = cur_.text;
    advance();
    return s;
  }

  [[noreturn]] void fail(std::string msg, std::vector<std::string> expected = {}) {
    abort_parse(cur_.line, cur_.col, std::move(msg), std::move(expected));
  }

  /// Optional declaration/statement terminator: '.' or ';'.
  void terminator() {
    if (at(Tok::Dot) || at(Tok::Semi)) advance();
  }

  void expect_end() {
    if (!at(Tok::End)) fail("unexpected trailing input after unit");
  }

  // --- shared productions ---

  ElementPath parse_path() {
    ElementPath p;
    p.segments.push_back(expect_ident("path segment"));
    while (accept(Tok::ColonColon)) p.segments.push_back(expect_ident("path segment"));
    return p;
  }

  TypeExpr parse_type_expr() {
    if (at_word("tuple")) {
      advance();
      expect(Tok::LBracket, "'['");
      std::vector<std::string> elems;
      elems.push_back(expect_ident("type name"));
      while (accept(Tok::Comma)) elems.push_back(expect_ident("type name"));
      expect(Tok::RBracket, "']'");
      return TypeExpr::tuple(std::move(elems));
    }
    return TypeExpr::named(expect_ident("type name"));
  }

  Expr parse_expr() {
    if (at(Tok::String)) {
      Expr e = Expr::lit(cur_.text);
      advance();
      return e;
    }
    std::string name = expect_ident("expression");
    if (accept(Tok::LParen)) {
      std::vector<Expr> args;
      if (!at(Tok::RParen)) {
        args.push_back(parse_expr());
        while (accept(Tok::Comma)) args.push_back(parse_expr());
      }
      expect(Tok::RParen, "')'");
      return Expr::call(std::move(name), std::move(args));
    }
    return Expr::var(std::move(name));
  }

  // `component`, `connector`, `service`, or `generic-interface`
  std::pair<ElementKind, RoleTag> parse_kind_word() {
    if (accept_word("component")) return {ElementKind::Component, RoleTag::Plain};
    if (accept_word("connector")) return {ElementKind::Connector, RoleTag::Plain};
    if (accept_word("service")) return {ElementKind::Component, RoleTag::Service};
    if (at_word("generic")) {
      advance();
      expect(Tok::Minus, "'-'");
      expect_word("interface");
      return {ElementKind::Component, RoleTag::GenericInterface};
    }
    fail("expected element kind",
         {"component", "connector", "service", "generic-interface"});
  }

  // --- conditions ---

  Condition parse_condition() { return parse_cond_or(); }

  Condition parse_cond_or() {
    Condition left = parse_cond_and();
    if (!at_word("or")) return left;
    std::vector<Condition> kids{std::move(left)};
    while (accept_word("or")) kids.push_back(parse_cond_and());
    return Condition::disj(std::move(kids));
  }

  Condition parse_cond_and() {
    Condition left = parse_cond_unary();
    if (!at_word("and")) return left;
    std::vector<Condition> kids{std::move(left)};
    while (accept_word("and")) kids.push_back(parse_cond_unary());
    return Condition::conj(std::move(kids));
  }

  Condition parse_cond_unary() {
    if (accept_word("not")) return Condition::neg(parse_cond_unary());
    if (accept(Tok::LParen)) {
      Condition inner = parse_condition();
      expect(Tok::RParen, "')'");
      return inner;
    }
    return parse_predicate();
  }

  Condition parse_predicate() {
    std::string head = expect_ident("predicate");
    expect(Tok::LParen, "'('");
    if (head == "exists" || head == "is_component" || head == "is_connector" ||
        head == "unique") {
      std::string n = expect_ident();
      expect(Tok::RParen, "')'");
      if (head == "exists") return Condition::exists(n);
      if (head == "is_component") return Condition::is_component(n);
      if (head == "is_connector") return Condition::is_connector(n);
      return Condition::unique(n);
    }
    if (head == "has_port" || head == "attached") {
      std::string a = expect_ident();
      expect(Tok::Comma, "','");
      std::string b = expect_ident();
      expect(Tok::RParen, "')'");
      return head == "has_port" ? Condition::has_port(a, b) : Condition::attached(a, b);
    }
    if (head == "channel_between") {
      ElementPath a = parse_path();
      expect(Tok::Comma, "','");
      ElementPath b = parse_path();
      expect(Tok::RParen, "')'");
      return Condition::channel_between(std::move(a), std::move(b));
    }
    if (head == "payload_of") {
      ElementPath pth = parse_path();
      expect(Tok::RParen, "')'");
      expect(Tok::Equals, "'='");
      std::string tn = expect_ident("type name");
      return Condition::payload_is(std::move(pth), std::move(tn));
    }
    fail("unknown predicate '" + head + "'",
         {"exists", "is_component", "is_connector", "has_port", "channel_between",
          "attached", "unique", "payload_of"});
  }

  /// Flattens a top-level conjunction into a condition list (`provides`).
  std::vector<Condition> parse_condition_list() {
    Condition c = parse_condition();
    if (c.kind == Condition::Kind::And) return std::move(c.kids);
    return {std::move(c)};
  }

private:
  Lexer lex_;
  Token cur_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Architecture dialect
// ---------------------------------------------------------------------------

namespace detail {

class ArchitectureParser : public Parser {
public:
  using Parser::Parser;

  Architecture parse_unit() {
    Architecture arch;
    if (accept_word("archetype")) {
      arch.name = expect_ident("architecture name");
      expect_word("is");
      expect_word("architecture");
      arch.style_ref = "architecture";
    } else {
      arch.name = expect_ident("architecture name");
      expect_word("is");
      arch.style_ref = expect_ident("style reference");
      expect_word("where");
    }
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (at_word("behaviour") || at_word("structure")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          arch.elements.push_back(parse_annotated_element(true));
          terminator();
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("link")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          expect_word("attach");
          Attachment l;
          l.a = expect_ident("element name");
          expect_word("to");
          l.b = expect_ident("element name");
          terminator();
          arch.top_links.push_back(std::move(l));
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("unifies") || at_word("unify")) {
        advance();
        ElementPath first = parse_path();
        expect_word("with");
        ElementPath second = parse_path();
        terminator();
        raw_channels_.push_back({std::move(first), std::move(second)});
      } else {
        fail("expected architecture item",
             {"behaviour is", "structure is", "link is", "unifies"});
      }
    }
    expect(Tok::RBrace, "'}'");
    terminator();
    expect_end();
    normalize_channels(arch);
    arch.stage = Stage::GEIM;
    return arch;
  }

  ArchElement parse_annotated_element(bool top_level) {
    std::vector<ConstraintAnnotation> anns;
    while (at(Tok::Annot)) anns.push_back(take_annotation_checked());
    if (!at_word("archetype"))
      fail(top_level ? "expected element declaration (statements are not "
                       "allowed at architecture level)"
                     : "expected element declaration",
           {"archetype"});
    ArchElement e = parse_element();
    // markers before the header precede ones found inside the behaviour block
    e.annotations.insert(e.annotations.begin(), anns.begin(), anns.end());
    return e;
  }

  ConstraintAnnotation take_annotation_checked() {
    const Token& t = cur();
    ConstraintAnnotation a;
    a.constraint_ref = t.annot_ref;
    if (t.annot_priority < 1)
      abort_parse(t.line, t.col, "priority must be >= 1");
    if (t.annot_range < 1) abort_parse(t.line, t.col, "range must be >= 1");
    a.priority = static_cast<int>(t.annot_priority);
    a.range = static_cast<int>(t.annot_range);
    advance();
    return a;
  }

  // `archetype NAME is KIND [weight=N] { ... }`
  ArchElement parse_element() {
    expect_word("archetype");
    ArchElement e;
    e.name = expect_ident("element name");
    expect_word("is");
    auto [kind, role] = parse_kind_word();
    e.kind = kind;
    e.role = role;
    if (at_word("weight")) {
      advance();
      expect(Tok::Equals, "'='");
      long long w = expect_int("weight");
      if (w < 1) fail("weight must be >= 1");
      e.weight = static_cast<int>(w);
    }
    expect(Tok::LBrace, "'{'");
    parse_element_body(e);
    expect(Tok::RBrace, "'}'");
    return e;
  }

  void parse_element_body(ArchElement& e) {
    while (!at(Tok::RBrace)) {
      if (at_word("types")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          expect_word("type");
          std::string n = expect_ident("type name");
          expect_word("is");
          e.type_decls.emplace_back(n, parse_type_expr());
          terminator();
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("ports")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          e.ports.push_back(parse_port());
          terminator();
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("structure")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          e.children.push_back(parse_annotated_element(false));
          terminator();
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("behaviour")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        // leading markers inside the behaviour block annotate the element
        while (at(Tok::Annot)) e.annotations.push_back(take_annotation_checked());
        if (at_word("archetype")) {
          while (!at(Tok::RBrace)) {
            e.children.push_back(parse_annotated_element(false));
            terminator();
          }
        } else if (!at(Tok::RBrace)) {
          Behaviour b = e.behaviour ? *e.behaviour : Behaviour{};
          parse_behaviour_items(b);
          e.behaviour = std::move(b);
        } else if (!e.behaviour) {
          e.behaviour = Behaviour{};
        }
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("constraint")) {
        fail("constraint block form is not supported; use the "
             "--<ref::priority:p,range:r>-- annotation marker");
      } else {
        fail("expected element item",
             {"types is", "ports is", "structure is", "behaviour is"});
      }
    }
    if (e.behaviour) resolve_invocations(*e.behaviour);
  }

  Port parse_port() {
    expect_word("archetype");
    Port p;
    p.name = expect_ident("port name");
    expect_word("is");
    expect_word("port");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      bool incoming;
      if (accept_word("incoming"))
        incoming = true;
      else if (accept_word("outgoing"))
        incoming = false;
      else
        fail("expected connection block", {"incoming is", "outgoing is"});
      expect_word("is");
      expect(Tok::LBrace, "'{'");
      while (!at(Tok::RBrace)) {
        Connection c;
        c.name = expect_ident("connection name");
        expect_word("is");
        expect_word("connection");
        expect(Tok::LParen, "'('");
        c.payload = parse_type_expr();
        expect(Tok::RParen, "')'");
        c.direction = incoming ? Direction::Incoming : Direction::Outgoing;
        terminator();
        (incoming ? p.incoming : p.outgoing).push_back(std::move(c));
      }
      expect(Tok::RBrace, "'}'");
      terminator();
    }
    expect(Tok::RBrace, "'}'");
    return p;
  }

  // Behaviour blocks hold abstraction declarations plus at most one compose;
  // statements live inside abstraction bodies.
  void parse_behaviour_items(Behaviour& b) {
    while (!at(Tok::RBrace)) {
      if (at_word("recursive") || at_word("value")) {
        bool recursive = accept_word("recursive");
        expect_word("value");
        Abstraction abs;
        abs.recursive = recursive;
        abs.name = expect_ident("abstraction name");
        expect_word("is");
        expect_word("abstraction");
        expect(Tok::LParen, "'('");
        expect(Tok::RParen, "')'");
        terminator();
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) abs.body.push_back(parse_stmt());
        expect(Tok::RBrace, "'}'");
        terminator();
        b.abstractions.push_back(std::move(abs));
      } else if (at_word("compose")) {
        advance();
        expect(Tok::LBrace, "'{'");
        b.compose.push_back(parse_invocation());
        while (accept_word("and")) b.compose.push_back(parse_invocation());
        expect(Tok::RBrace, "'}'");
        terminator();
      } else {
        fail("expected behaviour item",
             {"recursive value <n> is abstraction()", "value <n> is abstraction()",
              "compose"});
      }
    }
  }

  std::string parse_invocation() {
    std::string n = expect_ident("abstraction name");
    expect(Tok::LParen, "'('");
    expect(Tok::RParen, "')'");
    return n;
  }

  Stmt parse_stmt() {
    if (accept_word("via")) {
      ElementPath path = parse_path();
      if (accept_word("send")) {
        Expr v = parse_expr();
        terminator();
        return Stmt{SendStmt{std::move(path), std::move(v)}};
      }
      expect_word("receive");
      std::string var = expect_ident("variable");
      expect(Tok::Colon, "':'");
      std::string tn = expect_ident("type name");
      terminator();
      return Stmt{ReceiveStmt{std::move(path), std::move(var), std::move(tn)}};
    }
    if (at_word("value")) {
      advance();
      std::string var = expect_ident("route variable");
      expect(Tok::Assign, "':='");
      std::string elem = expect_ident("element name");
      terminator();
      return Stmt{RouteAssignStmt{std::move(var), std::move(elem)}};
    }
    if (accept_word("if")) {
      expect(Tok::LParen, "'('");
      expect_word("serviceDown");
      expect(Tok::LParen, "'('");
      std::string elem = expect_ident("element name");
      expect(Tok::RParen, "')'");
      expect(Tok::RParen, "')'");
      IfStmt s;
      s.cond.down_element = std::move(elem);
      s.then_stmt.push_back(parse_stmt());
      return Stmt{std::move(s)};
    }
    std::string head = expect_ident("statement");
    if (accept(Tok::Assign)) {
      Expr v = parse_expr();
      terminator();
      return Stmt{AssignStmt{std::move(head), std::move(v)}};
    }
    expect(Tok::LParen, "'('");
    std::vector<Expr> args;
    if (!at(Tok::RParen)) {
      args.push_back(parse_expr());
      while (accept(Tok::Comma)) args.push_back(parse_expr());
    }
    expect(Tok::RParen, "')'");
    terminator();
    // zero-argument calls of a declared abstraction become invocations in a
    // post-pass (declarations may follow their first use)
    return Stmt{ExternalStmt{std::move(head), std::move(args)}};
  }

private:
  std::vector<std::pair<ElementPath, ElementPath>> raw_channels_;

  void resolve_invocations(Behaviour& b) {
    std::set<std::string> declared;
    for (const auto& a : b.abstractions) declared.insert(a.name);
    auto fix = [&](auto&& self, std::vector<Stmt>& stmts) -> void {
      for (auto& s : stmts) {
        if (auto* ext = std::get_if<ExternalStmt>(&s.node)) {
          if (ext->args.empty() && declared.count(ext->fn))
            s.node = InvokeStmt{ext->fn};
        } else if (auto* branch = std::get_if<IfStmt>(&s.node)) {
          self(self, branch->then_stmt);
        }
      }
    };
    for (auto& a : b.abstractions) fix(fix, a.body);
  }

  /// Stores channels with endpoints normalized outgoing -> incoming after
  /// the whole unit is available; unresolvable or misdirected endpoints are
  /// left in written order for validate() to report.
  void normalize_channels(Architecture& arch) {
    for (auto& [first, second] : raw_channels_) {
      Channel ch{first, second};
      auto direction_of = [&](const ElementPath& p) -> std::optional<Direction> {
        try {
          ModelNode n = resolve(arch, p);
          if (n.is_connection()) return n.connection->direction;
        } catch (const Error&) {
        }
        return std::nullopt;
      };
      auto d1 = direction_of(first);
      auto d2 = direction_of(second);
      if (d1 && d2 && *d1 == Direction::Incoming && *d2 == Direction::Outgoing)
        ch = Channel{second, first};
      arch.channels.push_back(std::move(ch));
    }
  }
};

} // namespace detail

namespace detail {

template <typename T, typename Fn>
ParseResult<T> run_parser(const std::string& text, Fn&& fn) {
  ParseResult<T> result;
  try {
    result.value = fn(text);
  } catch (const ParseAbort& abort) {
    result.diagnostics.push_back(abort.diag);
  }
  return result;
}

} // namespace detail

/// Parses an architecture unit and forwards validation findings; the result
/// carries a model only when both syntax and validation are clean.
inline ParseResult<Architecture> parse_architecture(const SourceUnit& src) {
  auto result = detail::run_parser<Architecture>(src.text, [](const std::string& t) {
    detail::ArchitectureParser p(t);
    return p.parse_unit();
  });
  if (result.ok()) {
    result.semantic = validate(*result.value);
    if (!result.semantic.empty()) result.value.reset();
  }
  return result;
}

inline ParseResult<Architecture> parse_architecture(const std::string& text,
                                                    const std::string& origin = "<memory>") {
  return parse_architecture(SourceUnit{UnitKind::Architecture, text, origin});
}

// ---------------------------------------------------------------------------
// Pattern dialect
// ---------------------------------------------------------------------------

namespace detail {

class PatternParser : public ArchitectureParser {
public:
  using ArchitectureParser::ArchitectureParser;

  ConstraintPattern parse_pattern_unit() {
    ConstraintPattern pat;
    pat.name = expect_ident("pattern name");
    expect_word("is");
    std::string kind = expect_ident("pattern kind");
    if (kind == "qualityOfServiceProperty")
      pat.kind = PatternKind::Qos;
    else if (kind == "platformProperty")
      pat.kind = PatternKind::Platform;
    else
      fail("unknown pattern kind '" + kind + "'",
           {"qualityOfServiceProperty", "platformProperty"});
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (at_word("on")) {
        advance();
        ConstraintPattern::Block block;
        block.var = expect_ident("scope variable");
        expect(Tok::Colon, "':'");
        std::string scope = expect_ident("scope");
        if (scope == "architecture")
          block.scope = BlockScope::Architecture;
        else if (scope == "architecturalElement")
          block.scope = BlockScope::Element;
        else
          fail("unknown scope '" + scope + "'",
               {"architecture", "architecturalElement"});
        expect_word("actions");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) block.actions.push_back(parse_action());
        expect(Tok::RBrace, "'}'");
        terminator();
        pat.blocks.push_back(std::move(block));
      } else if (at_word("provides")) {
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        pat.provides = parse_condition_list();
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("conflicts") || at_word("requires")) {
        bool conflicts = at_word("conflicts");
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        auto& list = conflicts ? pat.conflicts_with : pat.requires_patterns;
        list.push_back(expect_ident("pattern name"));
        while (accept(Tok::Comma)) list.push_back(expect_ident("pattern name"));
        expect(Tok::RBrace, "'}'");
        terminator();
      } else {
        fail("expected pattern item",
             {"on <var>:<scope> actions", "provides is", "conflicts is",
              "requires is"});
      }
    }
    expect(Tok::RBrace, "'}'");
    terminator();
    expect_end();
    check_pattern(pat);
    return pat;
  }

  AtomicAction parse_action() {
    if (accept_word("include")) {
      // `include NAME is KIND { ... }`, same body grammar as archetype
      ArchElement e;
      e.name = expect_ident("element name");
      expect_word("is");
      auto [kind, role] = parse_kind_word();
      e.kind = kind;
      e.role = role;
      expect(Tok::LBrace, "'{'");
      parse_element_body(e);
      expect(Tok::RBrace, "'}'");
      terminator();
      return AtomicAction{IncludeAction{std::move(e)}};
    }
    if (accept_word("replicate")) {
      ReplicateAction a;
      a.target = parse_path();
      expect_word("to");
      a.clone_name = expect_ident("clone name");
      terminator();
      return AtomicAction{std::move(a)};
    }
    if (at_word("unify") || at_word("unifies")) {
      advance();
      UnifyAction a;
      a.out_path = parse_path();
      expect_word("with");
      a.in_path = parse_path();
      terminator();
      return AtomicAction{std::move(a)};
    }
    if (accept_word("attach")) {
      AttachAction a;
      a.a = expect_ident("element name");
      expect_word("to");
      a.b = expect_ident("element name");
      terminator();
      return AtomicAction{std::move(a)};
    }
    if (accept_word("rename")) {
      RenameAction a;
      a.target = parse_path();
      expect_word("to");
      a.new_name = expect_ident("new name");
      terminator();
      return AtomicAction{std::move(a)};
    }
    if (accept_word("remove")) {
      RemoveAction a;
      a.target = parse_path();
      terminator();
      return AtomicAction{std::move(a)};
    }
    fail("unknown action verb '" + cur().text + "'", action_verbs());
  }

private:
  void check_pattern(const ConstraintPattern& pat) {
    int element_blocks = 0;
    for (const auto& b : pat.blocks)
      if (b.scope == BlockScope::Element) ++element_blocks;
    if (element_blocks > 1)
      fail("at most one element-scope block is allowed per pattern");
  }
};

} // namespace detail

inline ParseResult<ConstraintPattern> parse_pattern(const SourceUnit& src) {
  return detail::run_parser<ConstraintPattern>(src.text, [](const std::string& t) {
    detail::PatternParser p(t);
    return p.parse_pattern_unit();
  });
}

inline ParseResult<ConstraintPattern> parse_pattern(const std::string& text,
                                                    const std::string& origin = "<memory>") {
  return parse_pattern(SourceUnit{UnitKind::Pattern, text, origin});
}

// ---------------------------------------------------------------------------
// Refinement-definition dialect
// ---------------------------------------------------------------------------

namespace detail {

class RefinementParser : public PatternParser {
public:
  using PatternParser::PatternParser;

  RefinementDefinition parse_refd_unit() {
    RefinementDefinition def;
    expect_word("on");
    def.arch_var = expect_ident("architecture variable");
    expect(Tok::Colon, "':'");
    expect_word("architecture");
    expect_word("action");
    def.name = expect_ident("action name");
    expect_word("is");
    expect_word("refinement");
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      def.params.push_back(expect_ident("parameter"));
      while (accept(Tok::Comma)) def.params.push_back(expect_ident("parameter"));
    }
    expect(Tok::RParen, "')'");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (at_word("pre")) {
        if (def.pre) fail("duplicate pre clause");
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        def.pre = parse_condition();
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("post")) {
        if (def.post) fail("duplicate post clause");
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        def.post = parse_condition();
        expect(Tok::RBrace, "'}'");
        terminator();
      } else if (at_word("transformation")) {
        if (!def.transformation.empty()) fail("duplicate transformation clause");
        advance();
        expect_word("is");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) def.transformation.push_back(parse_action());
        expect(Tok::RBrace, "'}'");
        terminator();
      } else {
        fail("expected refinement clause",
             {"pre is", "post is", "transformation is"});
      }
    }
    expect(Tok::RBrace, "'}'");
    if (accept_word("assuming")) {
      expect(Tok::LBrace, "'{'");
      def.assuming = parse_condition();
      expect(Tok::RBrace, "'}'");
    }
    terminator();
    expect_end();
    return def;
  }
};

} // namespace detail

inline ParseResult<RefinementDefinition> parse_refinement_def(const SourceUnit& src) {
  return detail::run_parser<RefinementDefinition>(src.text, [](const std::string& t) {
    detail::RefinementParser p(t);
    return p.parse_refd_unit();
  });
}

inline ParseResult<RefinementDefinition> parse_refinement_def(
    const std::string& text, const std::string& origin = "<memory>") {
  return parse_refinement_def(SourceUnit{UnitKind::RefinementDef, text, origin});
}

// ---------------------------------------------------------------------------
// Resource-inventory and codegen-mapping dialects
// ---------------------------------------------------------------------------

namespace detail {

class AuxParser : public Parser {
public:
  using Parser::Parser;

  ResourceInventory parse_inventory_unit() {
    ResourceInventory inv;
    expect_word("resources");
    inv.name = expect_ident("inventory name");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      expect_word("resource");
      ResourceInventory::Resource r;
      r.name = expect_ident("resource name");
      expect_word("capacity");
      long long cap = expect_int("capacity");
      if (cap < 1) fail("capacity must be >= 1");
      r.capacity = static_cast<int>(cap);
      terminator();
      inv.resources.push_back(std::move(r));
    }
    expect(Tok::RBrace, "'}'");
    terminator();
    expect_end();
    std::set<std::string> names;
    for (const auto& r : inv.resources)
      if (!names.insert(r.name).second) fail("duplicate resource name " + r.name);
    return inv;
  }

  CodegenMappingDecl parse_mapping_unit() {
    CodegenMappingDecl decl;
    expect_word("mapping");
    decl.name = expect_ident("mapping name");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (accept_word("target")) {
        decl.target_label = expect_string();
        terminator();
      } else if (accept_word("extension")) {
        decl.extension = expect_string();
        terminator();
      } else if (accept_word("template")) {
        TemplateKey key;
        key.kind = accept_word("component") ? ElementKind::Component
                   : (expect_word("connector"), ElementKind::Connector);
        if (accept_word("plain"))
          key.role = RoleTag::Plain;
        else if (accept_word("service"))
          key.role = RoleTag::Service;
        else if (at_word("generic")) {
          advance();
          expect(Tok::Minus, "'-'");
          expect_word("interface");
          key.role = RoleTag::GenericInterface;
        } else {
          fail("expected role tag", {"plain", "service", "generic-interface"});
        }
        decl.template_files[key] = expect_string("template file");
        terminator();
      } else {
        fail("expected mapping item", {"target", "extension", "template"});
      }
    }
    expect(Tok::RBrace, "'}'");
    terminator();
    expect_end();
    if (decl.extension.empty()) fail("mapping must declare an extension");
    return decl;
  }
};

} // namespace detail

inline ParseResult<ResourceInventory> parse_inventory(const SourceUnit& src) {
  return detail::run_parser<ResourceInventory>(src.text, [](const std::string& t) {
    detail::AuxParser p(t);
    return p.parse_inventory_unit();
  });
}

inline ParseResult<CodegenMappingDecl> parse_codegen_mapping(const SourceUnit& src) {
  return detail::run_parser<CodegenMappingDecl>(src.text, [](const std::string& t) {
    detail::AuxParser p(t);
    return p.parse_mapping_unit();
  });
}

// ---------------------------------------------------------------------------
// Unit classification
// ---------------------------------------------------------------------------

/// Infers the unit kind from the leading tokens.
inline UnitKind classify_source(const std::string& text) {
  try {
    detail::Parser p(text);
    if (p.at_word("archetype")) return UnitKind::Architecture;
    if (p.at_word("on")) return UnitKind::RefinementDef;
    if (p.at_word("resources")) return UnitKind::ResourceInventory;
    if (p.at_word("mapping")) return UnitKind::CodegenMapping;
    if (p.cur().kind == detail::Tok::Ident) {
      p.advance();
      if (!p.accept_word("is")) return UnitKind::Unknown;
      if (p.at_word("qualityOfServiceProperty") || p.at_word("platformProperty"))
        return UnitKind::Pattern;
      if (p.cur().kind == detail::Tok::Ident) {
        p.advance();
        if (p.at_word("where")) return UnitKind::Architecture;
      }
    }
  } catch (const detail::ParseAbort&) {
  }
  return UnitKind::Unknown;
}

inline SourceUnit make_source_unit(std::string text, std::string origin) {
  SourceUnit u;
  u.kind = classify_source(text);
  u.text = std::move(text);
  u.origin = std::move(origin);
  return u;
}

} // namespace archweave
