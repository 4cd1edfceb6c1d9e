#include "sled/parse.hpp"

#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace sled::src {

namespace {

enum class Tok {
  Ident, Nat,
  KwDo, KwIn, KwReturn, KwHandle, KwWith, KwContinue, KwPerform, KwFun, KwEffect,
  KwNatTy, KwCode, KwBot,
  LParen, RParen, LBrace, RBrace,
  Quote, Unquote,        // << and >>
  SpliceOpen,            // $(
  Arrow, DArrow, Bind,   // -> => <-
  Colon, Semi, Comma, Bang, At, Caret,
  Plus, Star, Minus,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::uint64_t nat = 0;
  SourceLoc loc;
};

struct Lexer {
  const std::string &src;
  std::size_t pos = 0;
  int line = 1, col = 1;
  std::vector<Diagnostic> *diags;

  explicit Lexer(const std::string &s, std::vector<Diagnostic> *d) : src(s), diags(d) {}

  char peek(std::size_t off = 0) const {
    return pos + off < src.size() ? src[pos + off] : '\0';
  }

  void advance() {
    if (pos < src.size()) {
      if (src[pos] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
      pos++;
    }
  }

  void error(const std::string &msg, SourceLoc loc) {
    diags->push_back({Severity::Error, msg, loc, {}});
  }

  bool skip_trivia() {
    for (;;) {
      while (std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '(' && peek(1) == '*') {
        SourceLoc start{line, col};
        advance();
        advance();
        int depth = 1;
        while (depth > 0) {
          if (pos >= src.size()) {
            error("unterminated comment", start);
            return false;
          }
          if (peek() == '(' && peek(1) == '*') {
            depth++;
            advance();
            advance();
          } else if (peek() == '*' && peek(1) == ')') {
            depth--;
            advance();
            advance();
          } else {
            advance();
          }
        }
        continue;
      }
      return true;
    }
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      if (!skip_trivia()) break;
      SourceLoc loc{line, col};
      char c = peek();
      if (c == '\0') {
        out.push_back({Tok::End, "", 0, loc});
        break;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::uint64_t v = 0;
        std::string text;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          v = v * 10 + static_cast<std::uint64_t>(peek() - '0');
          text.push_back(peek());
          advance();
        }
        out.push_back({Tok::Nat, text, v, loc});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string text;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '\'') {
          text.push_back(peek());
          advance();
        }
        Tok k = Tok::Ident;
        if (text == "do") k = Tok::KwDo;
        else if (text == "in") k = Tok::KwIn;
        else if (text == "return") k = Tok::KwReturn;
        else if (text == "handle") k = Tok::KwHandle;
        else if (text == "with") k = Tok::KwWith;
        else if (text == "continue") k = Tok::KwContinue;
        else if (text == "perform") k = Tok::KwPerform;
        else if (text == "fun") k = Tok::KwFun;
        else if (text == "effect") k = Tok::KwEffect;
        else if (text == "Nat") k = Tok::KwNatTy;
        else if (text == "Code") k = Tok::KwCode;
        else if (text == "bot") k = Tok::KwBot;
        out.push_back({k, text, 0, loc});
        continue;
      }
      switch (c) {
        case '(':
          advance();
          out.push_back({Tok::LParen, "(", 0, loc});
          continue;
        case ')':
          advance();
          out.push_back({Tok::RParen, ")", 0, loc});
          continue;
        case '{':
          advance();
          out.push_back({Tok::LBrace, "{", 0, loc});
          continue;
        case '}':
          advance();
          out.push_back({Tok::RBrace, "}", 0, loc});
          continue;
        case '<':
          if (peek(1) == '<') {
            advance();
            advance();
            out.push_back({Tok::Quote, "<<", 0, loc});
            continue;
          }
          if (peek(1) == '-') {
            advance();
            advance();
            out.push_back({Tok::Bind, "<-", 0, loc});
            continue;
          }
          break;
        case '>':
          if (peek(1) == '>') {
            advance();
            advance();
            out.push_back({Tok::Unquote, ">>", 0, loc});
            continue;
          }
          break;
        case '$':
          if (peek(1) == '(') {
            advance();
            advance();
            out.push_back({Tok::SpliceOpen, "$(", 0, loc});
            continue;
          }
          break;
        case '-':
          if (peek(1) == '>') {
            advance();
            advance();
            out.push_back({Tok::Arrow, "->", 0, loc});
            continue;
          }
          advance();
          out.push_back({Tok::Minus, "-", 0, loc});
          continue;
        case '=':
          if (peek(1) == '>') {
            advance();
            advance();
            out.push_back({Tok::DArrow, "=>", 0, loc});
            continue;
          }
          break;
        case ':':
          advance();
          out.push_back({Tok::Colon, ":", 0, loc});
          continue;
        case ';':
          advance();
          out.push_back({Tok::Semi, ";", 0, loc});
          continue;
        case ',':
          advance();
          out.push_back({Tok::Comma, ",", 0, loc});
          continue;
        case '!':
          advance();
          out.push_back({Tok::Bang, "!", 0, loc});
          continue;
        case '@':
          advance();
          out.push_back({Tok::At, "@", 0, loc});
          continue;
        case '^':
          advance();
          out.push_back({Tok::Caret, "^", 0, loc});
          continue;
        case '+':
          advance();
          out.push_back({Tok::Plus, "+", 0, loc});
          continue;
        case '*':
          advance();
          out.push_back({Tok::Star, "*", 0, loc});
          continue;
        default:
          break;
      }
      error(std::string("unsupported character '") + c + "'", loc);
      advance();
    }
    if (out.empty() || out.back().kind != Tok::End) out.push_back({Tok::End, "", 0, SourceLoc{line, col}});
    return out;
  }
};

// An atom produced by the expression parser: either a syntactic value or an
// expression. Values appearing in expression position become `return v`.
struct Atom {
  ValuePtr value;  // set iff syntactic value
  ExprPtr expr;    // set iff expression
  SourceLoc loc;

  bool is_value() const { return value != nullptr; }
};

struct Parser {
  const std::vector<Token> &toks;
  std::size_t pos = 0;
  std::vector<Diagnostic> &diags;
  std::set<std::string> declared_rt, declared_ct;
  int fresh_counter = 0;

  Parser(const std::vector<Token> &t, std::vector<Diagnostic> &d) : toks(t), diags(d) {}

  const Token &cur() const { return toks[pos]; }
  const Token &ahead(std::size_t n) const {
    return toks[std::min(pos + n, toks.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }

  Token eat() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }

  bool expect(Tok k, const std::string &what) {
    if (at(k)) {
      eat();
      return true;
    }
    fail("expected " + what);
    return false;
  }

  struct ParseAbort {};

  [[noreturn]] void fail(const std::string &msg) {
    diags.push_back({Severity::Error, msg, cur().loc, {}});
    throw ParseAbort{};
  }

  std::string fresh(const std::set<std::string> &avoid) {
    for (;;) {
      std::string cand = "_s" + std::to_string(fresh_counter++);
      if (!avoid.count(cand)) return cand;
    }
  }

  // -- types ---------------------------------------------------------------

  EffectRow parse_row() {
    EffectRow row;
    expect(Tok::LBrace, "'{'");
    if (!at(Tok::RBrace)) {
      for (;;) {
        if (!at(Tok::Ident)) fail("expected operation name in effect row");
        row.insert(eat().text);
        if (at(Tok::Comma)) {
          eat();
          continue;
        }
        break;
      }
    }
    expect(Tok::RBrace, "'}'");
    return row;
  }

  // Types are written without levels; the checker assigns the level from the
  // mode of the binder the annotation sits on.
  VTypePtr parse_vtype() {
    if (at(Tok::KwNatTy)) {
      eat();
      return nat_type(Level::RunTime);
    }
    if (at(Tok::KwCode)) {
      eat();
      expect(Tok::LParen, "'('");
      VTypePtr val = parse_vtype();
      expect(Tok::Bang, "'!'");
      EffectRow row = parse_row();
      expect(Tok::RParen, "')'");
      std::string cls;
      if (at(Tok::At)) {
        eat();
        if (at(Tok::KwBot)) {
          eat();
          cls = "bot";
        } else if (at(Tok::Ident)) {
          cls = eat().text;
        } else {
          fail("expected classifier name after '@'");
        }
      }
      return code_type(val, row, cls);
    }
    if (at(Tok::LParen)) {
      eat();
      VTypePtr dom = parse_vtype();
      bool is_cont = false;
      if (at(Tok::Arrow)) {
        eat();
      } else if (at(Tok::DArrow)) {
        eat();
        is_cont = true;
      } else {
        fail("expected '->' or '=>' in function type");
      }
      EffectRow latent;
      if (at(Tok::LBrace)) latent = parse_row();
      VTypePtr cod = parse_vtype();
      expect(Tok::RParen, "')'");
      return is_cont ? cont_type(Level::RunTime, dom, latent, cod)
                     : fun_type(Level::RunTime, dom, latent, cod);
    }
    fail("expected type");
  }

  // -- values and expressions ----------------------------------------------

  bool op_declared(const std::string &name) const {
    return declared_rt.count(name) || declared_ct.count(name);
  }

  bool atom_start() const {
    switch (cur().kind) {
      case Tok::Ident:
      case Tok::Nat:
      case Tok::KwFun:
      case Tok::LParen:
      case Tok::Quote:
      case Tok::SpliceOpen:
        return true;
      default:
        return false;
    }
  }

  ExprPtr to_expr(const Atom &a) {
    if (a.is_value()) return mk_return(a.value, a.loc);
    return a.expr;
  }

  ValuePtr to_value(const Atom &a, const std::string &what) {
    if (!a.is_value()) fail(what + " must be a value");
    return a.value;
  }

  // Binds the atom if it is not already a value, so it can sit in a value
  // position. Returns the value plus an optional wrapper applied innermost.
  struct BoundValue {
    ValuePtr value;
    std::optional<std::pair<std::string, ExprPtr>> binding;  // name, bound expr
  };

  BoundValue bind_if_needed(const Atom &a, const std::set<std::string> &avoid) {
    if (a.is_value()) return {a.value, std::nullopt};
    std::string name = fresh(avoid);
    return {mk_var(name, a.loc), std::make_pair(name, a.expr)};
  }

  ExprPtr wrap_bindings(std::vector<std::pair<std::string, ExprPtr>> binds, ExprPtr body,
                        SourceLoc loc) {
    for (auto it = binds.rbegin(); it != binds.rend(); ++it)
      body = mk_do(it->first, nullptr, it->second, body, loc);
    return body;
  }

  Atom parse_atom(Mode mode) {
    SourceLoc loc = cur().loc;
    switch (cur().kind) {
      case Tok::Ident: {
        std::string name = eat().text;
        return {mk_var(name, loc), nullptr, loc};
      }
      case Tok::Nat: {
        std::uint64_t v = eat().nat;
        return {mk_nat(v, loc), nullptr, loc};
      }
      case Tok::KwFun: {
        eat();
        std::string binder;
        VTypePtr ann;
        if (at(Tok::LParen)) {
          eat();
          if (!at(Tok::Ident)) fail("expected binder name");
          binder = eat().text;
          if (at(Tok::Colon)) {
            eat();
            ann = parse_vtype();
          }
          expect(Tok::RParen, "')'");
        } else if (at(Tok::Ident)) {
          binder = eat().text;
        } else {
          fail("expected binder after fun");
        }
        expect(Tok::Arrow, "'->'");
        ExprPtr body = parse_expr(mode);
        return {mk_lam(binder, ann, body, loc), nullptr, loc};
      }
      case Tok::LParen: {
        eat();
        Atom inner = parse_expr_atom(mode);
        expect(Tok::RParen, "')'");
        inner.loc = loc;
        return inner;
      }
      case Tok::Quote: {
        if (mode == Mode::Compile)
          fail("quote is not allowed in compile mode (only under a splice)");
        if (mode == Mode::Quote) fail("quote is not allowed inside a quote (two-stage language)");
        eat();
        Atom inner = parse_expr_atom(Mode::Quote);
        expect(Tok::Unquote, "'>>'");
        return {nullptr, mk_quote(to_expr(inner), loc), loc};
      }
      case Tok::SpliceOpen: {
        if (mode == Mode::Splice) fail("splice is not allowed inside a splice body");
        eat();
        Atom inner = parse_expr_atom(Mode::Splice);
        expect(Tok::RParen, "')'");
        return {nullptr, mk_splice(to_expr(inner), loc), loc};
      }
      default:
        fail("expected expression");
    }
  }

  // atom [atom]: juxtaposition of two values is application.
  Atom parse_app(Mode mode) {
    Atom first = parse_atom(mode);
    if (!atom_start()) return first;
    SourceLoc loc = cur().loc;
    Atom second = parse_atom(mode);
    if (atom_start()) fail("application takes exactly two values; parenthesize");
    ValuePtr f = to_value(first, "applied function");
    ValuePtr a = to_value(second, "application argument");
    return {nullptr, mk_app(f, a, loc), loc};
  }

  Atom parse_mul(Mode mode) {
    Atom lhs = parse_app(mode);
    while (at(Tok::Star)) {
      SourceLoc loc = eat().loc;
      Atom rhs = parse_app(mode);
      lhs = combine_arith(ArithOp::Times, lhs, rhs, loc);
    }
    return lhs;
  }

  Atom parse_add(Mode mode) {
    Atom lhs = parse_mul(mode);
    while (at(Tok::Plus) || at(Tok::Minus)) {
      ArithOp op = at(Tok::Plus) ? ArithOp::Plus : ArithOp::Monus;
      SourceLoc loc = eat().loc;
      Atom rhs = parse_mul(mode);
      lhs = combine_arith(op, lhs, rhs, loc);
    }
    return lhs;
  }

  Atom combine_arith(ArithOp op, const Atom &lhs, const Atom &rhs, SourceLoc loc) {
    std::set<std::string> avoid = collect_names(lhs);
    auto rhs_names = collect_names(rhs);
    avoid.insert(rhs_names.begin(), rhs_names.end());
    std::vector<std::pair<std::string, ExprPtr>> binds;
    BoundValue a = bind_if_needed(lhs, avoid);
    if (a.binding) {
      avoid.insert(a.binding->first);
      binds.push_back(*a.binding);
    }
    BoundValue b = bind_if_needed(rhs, avoid);
    if (b.binding) binds.push_back(*b.binding);
    ExprPtr core = mk_arith(op, a.value, b.value, loc);
    if (binds.empty()) return {nullptr, core, loc};
    return {nullptr, wrap_bindings(std::move(binds), core, loc), loc};
  }

  std::set<std::string> collect_names(const Atom &a) {
    if (a.is_value()) {
      std::set<std::string> s;
      if (a.value->kind == Value::Kind::Var) s.insert(a.value->name);
      return s;
    }
    return free_vars(a.expr);
  }

  Atom parse_expr_atom(Mode mode) {
    SourceLoc loc = cur().loc;
    Atom head = [&]() -> Atom {
      switch (cur().kind) {
        case Tok::KwDo: {
          eat();
          if (!at(Tok::Ident)) fail("expected binder after do");
          std::string binder = eat().text;
          VTypePtr ann;
          if (at(Tok::Colon)) {
            eat();
            ann = parse_vtype();
          }
          expect(Tok::Bind, "'<-'");
          ExprPtr e1 = parse_expr_nonseq(mode);
          expect(Tok::KwIn, "'in'");
          ExprPtr e2 = parse_expr(mode);
          return {nullptr, mk_do(binder, ann, e1, e2, loc), loc};
        }
        case Tok::KwReturn: {
          eat();
          Atom a = parse_add(mode);
          if (a.is_value()) return {nullptr, mk_return(a.value, loc), loc};
          // return e  ==>  do x <- e in return x
          std::set<std::string> avoid = collect_names(a);
          std::string x = fresh(avoid);
          ExprPtr body = mk_return(mk_var(x, loc), loc);
          return {nullptr, mk_do(x, nullptr, a.expr, body, loc), loc};
        }
        case Tok::KwHandle: {
          eat();
          ExprPtr subject = parse_expr_nonseq(mode);
          expect(Tok::KwWith, "'with'");
          HandlerPtr h = parse_handler(mode);
          return {nullptr, mk_handle(subject, h, loc), loc};
        }
        case Tok::KwContinue: {
          eat();
          Atom k = parse_atom(mode);
          Atom v = parse_atom(mode);
          return {nullptr, mk_continue(to_value(k, "continuation"), to_value(v, "continue argument"), loc),
                  loc};
        }
        case Tok::KwPerform: {
          eat();
          if (!at(Tok::Ident)) fail("expected operation name after perform");
          std::string op = eat().text;
          if (!op_declared(op))
            diags.push_back({Severity::Error, "undeclared operation '" + op + "'", loc, {}});
          expect(Tok::LParen, "'('");
          Atom arg = parse_expr_atom(mode);
          expect(Tok::RParen, "')'");
          if (arg.is_value()) return {nullptr, mk_op(op, arg.value, loc), loc};
          // perform op(e)  ==>  do a <- e in perform op(a)
          std::set<std::string> avoid = collect_names(arg);
          std::string a = fresh(avoid);
          ExprPtr body = mk_op(op, mk_var(a, loc), loc);
          return {nullptr, mk_do(a, nullptr, arg.expr, body, loc), loc};
        }
        default:
          return parse_add(mode);
      }
    }();
    // Sequencing: e1 ; e2 == do _ <- e1 in e2. Inside handler bodies the
    // caller stops us before a clause head.
    while (at(Tok::Semi) && !semi_starts_clause()) {
      SourceLoc sloc = eat().loc;
      Atom rest = parse_expr_atom(mode);
      std::set<std::string> avoid = collect_names(head);
      auto rn = collect_names(rest);
      avoid.insert(rn.begin(), rn.end());
      std::string x = fresh(avoid);
      head = {nullptr, mk_do(x, nullptr, to_expr(head), to_expr(rest), sloc), sloc};
    }
    return head;
  }

  // True when the tokens after the current ';' look like a handler clause
  // head: `return (x ...) ->` or `op (x ..., k ...) ->`.
  bool in_handler = false;

  bool semi_starts_clause() const {
    if (!in_handler) return false;
    std::size_t i = 1;
    const Token &t0 = ahead(i);
    if (t0.kind != Tok::KwReturn && t0.kind != Tok::Ident) return false;
    if (ahead(i + 1).kind != Tok::LParen) return false;
    // scan to the matching ')'
    std::size_t j = i + 2;
    int depth = 1;
    while (depth > 0) {
      Tok k = ahead(j).kind;
      if (k == Tok::End) return false;
      if (k == Tok::LParen) depth++;
      if (k == Tok::RParen) depth--;
      j++;
    }
    return ahead(j).kind == Tok::Arrow;
  }

  ExprPtr parse_expr(Mode mode) { return to_expr(parse_expr_atom(mode)); }

  // An expression that stops at 'in' / 'with' boundaries naturally; the
  // grammar is unambiguous because those keywords cannot start an atom.
  ExprPtr parse_expr_nonseq(Mode mode) { return parse_expr(mode); }

  HandlerPtr parse_handler(Mode mode) {
    SourceLoc loc = cur().loc;
    expect(Tok::LBrace, "'{'");
    auto h = std::make_shared<Handler>();
    h->loc = loc;
    bool saved = in_handler;
    in_handler = true;
    bool saw_return = false;
    std::set<std::string> seen_ops;
    for (;;) {
      SourceLoc cloc = cur().loc;
      HClause c;
      c.loc = cloc;
      if (at(Tok::KwReturn)) {
        eat();
        c.is_return = true;
        expect(Tok::LParen, "'('");
        if (!at(Tok::Ident)) fail("expected binder in return clause");
        c.x = eat().text;
        if (at(Tok::Colon)) {
          eat();
          c.x_ann = parse_vtype();
        }
        expect(Tok::RParen, "')'");
        if (saw_return)
          diags.push_back({Severity::Error, "handler has more than one return clause", cloc, {}});
        saw_return = true;
      } else if (at(Tok::Ident)) {
        c.op_name = eat().text;
        if (!op_declared(c.op_name))
          diags.push_back({Severity::Error, "undeclared operation '" + c.op_name + "'", cloc, {}});
        if (!seen_ops.insert(c.op_name).second)
          diags.push_back(
              {Severity::Error, "duplicate clause for operation '" + c.op_name + "'", cloc, {}});
        expect(Tok::LParen, "'('");
        if (!at(Tok::Ident)) fail("expected argument binder");
        c.x = eat().text;
        if (at(Tok::Colon)) {
          eat();
          c.x_ann = parse_vtype();
        }
        expect(Tok::Comma, "','");
        if (!at(Tok::Ident)) fail("expected continuation binder");
        c.k = eat().text;
        if (at(Tok::Colon)) {
          eat();
          c.k_ann = parse_vtype();
        }
        expect(Tok::RParen, "')'");
      } else {
        fail("expected handler clause");
      }
      expect(Tok::Arrow, "'->'");
      c.body = parse_expr(mode);
      h->clauses.push_back(std::move(c));
      if (at(Tok::Semi)) {
        eat();
        continue;
      }
      break;
    }
    in_handler = saved;
    expect(Tok::RBrace, "'}'");
    if (!saw_return)
      diags.push_back({Severity::Error, "handler is missing a return clause", loc, {}});
    // keep the return clause first
    std::stable_sort(h->clauses.begin(), h->clauses.end(),
                     [](const HClause &a, const HClause &b) { return a.is_return && !b.is_return; });
    return h;
  }

  std::vector<EffectSig> parse_sigs() {
    std::vector<EffectSig> sigs;
    while (at(Tok::KwEffect)) {
      SourceLoc loc = eat().loc;
      Level lv = Level::RunTime;
      if (at(Tok::Caret)) {
        eat();
        lv = Level::CompileTime;
      }
      if (!at(Tok::Ident)) fail("expected operation name");
      std::string name = eat().text;
      expect(Tok::Colon, "':'");
      VTypePtr arg = parse_vtype();
      expect(Tok::Arrow, "'->'");
      VTypePtr result = parse_vtype();
      auto &declared = lv == Level::RunTime ? declared_rt : declared_ct;
      if (!declared.insert(name).second)
        diags.push_back({Severity::Error, "duplicate effect declaration '" + name + "'", loc, {}});
      sigs.push_back({name, lv, arg, result, loc});
    }
    return sigs;
  }
};

}  // namespace

ParseResult parse_program(const std::string &text) {
  ParseResult res;
  Lexer lex(text, &res.diagnostics);
  auto toks = lex.run();
  if (!res.diagnostics.empty()) return res;
  if (toks.size() == 1) {
    res.diagnostics.push_back({Severity::Error, "empty program", SourceLoc{1, 1}, {}});
    return res;
  }
  Parser p(toks, res.diagnostics);
  try {
    res.program.sigs = p.parse_sigs();
    if (p.at(Tok::End)) p.fail("empty program: expected an expression after effect declarations");
    res.program.body = p.parse_expr(Mode::Compile);
    if (!p.at(Tok::End)) p.fail("unexpected trailing input");
  } catch (Parser::ParseAbort &) {
    return res;
  }
  res.ok = res.diagnostics.empty();
  return res;
}

ParseExprResult parse_expr(const std::string &text, Mode mode, const std::vector<EffectSig> &sigs) {
  ParseExprResult res;
  Lexer lex(text, &res.diagnostics);
  auto toks = lex.run();
  if (!res.diagnostics.empty()) return res;
  Parser p(toks, res.diagnostics);
  for (const auto &s : sigs)
    (s.level == Level::RunTime ? p.declared_rt : p.declared_ct).insert(s.name);
  try {
    res.expr = p.parse_expr(mode);
    if (!p.at(Tok::End)) p.fail("unexpected trailing input");
  } catch (Parser::ParseAbort &) {
    return res;
  }
  res.ok = res.diagnostics.empty();
  return res;
}

}  // namespace sled::src
