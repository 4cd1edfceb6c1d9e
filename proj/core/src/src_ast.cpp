#include "sled/src_ast.hpp"

#include <sstream>

namespace sled {

std::string format_diagnostic(const Diagnostic &d) {
  std::ostringstream os;
  switch (d.severity) {
    case Severity::Error: os << "error"; break;
    case Severity::Warning: os << "warning"; break;
    case Severity::Note: os << "note"; break;
  }
  os << " at " << d.loc.line << ":" << d.loc.column << ": " << d.message;
  if (!d.offending_vars.empty()) {
    os << " [";
    bool first = true;
    for (const auto &v : d.offending_vars) {
      if (!first) os << ", ";
      os << v;
      first = false;
    }
    os << "]";
  }
  return os.str();
}

std::string format_diagnostics(const std::vector<Diagnostic> &ds) {
  std::ostringstream os;
  for (const auto &d : ds) os << format_diagnostic(d) << "\n";
  return os.str();
}

}  // namespace sled

namespace sled::src {

VTypePtr nat_type(Level lv) {
  auto t = std::make_shared<VType>();
  t->kind = VType::Kind::Nat;
  t->level = lv;
  return t;
}

VTypePtr fun_type(Level lv, VTypePtr dom, EffectRow latent, VTypePtr cod) {
  auto t = std::make_shared<VType>();
  t->kind = VType::Kind::Fun;
  t->level = lv;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  t->latent = std::move(latent);
  return t;
}

VTypePtr cont_type(Level lv, VTypePtr dom, EffectRow latent, VTypePtr cod) {
  auto t = std::make_shared<VType>();
  t->kind = VType::Kind::Cont;
  t->level = lv;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  t->latent = std::move(latent);
  return t;
}

VTypePtr code_type(VTypePtr value, EffectRow row, std::string classifier) {
  auto t = std::make_shared<VType>();
  t->kind = VType::Kind::Code;
  t->level = Level::CompileTime;
  t->code_val = std::move(value);
  t->code_row = std::move(row);
  t->classifier = std::move(classifier);
  return t;
}

bool vtype_equal(const VTypePtr &a, const VTypePtr &b, bool with_classifiers) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->level != b->level) return false;
  switch (a->kind) {
    case VType::Kind::Nat:
      return true;
    case VType::Kind::Fun:
    case VType::Kind::Cont:
      return a->latent == b->latent && vtype_equal(a->dom, b->dom, with_classifiers) &&
             vtype_equal(a->cod, b->cod, with_classifiers);
    case VType::Kind::Code:
      if (with_classifiers && a->classifier != b->classifier) return false;
      return a->code_row == b->code_row && vtype_equal(a->code_val, b->code_val, with_classifiers);
  }
  return false;
}

ValuePtr mk_var(std::string name, SourceLoc loc) {
  auto v = std::make_shared<Value>();
  v->kind = Value::Kind::Var;
  v->name = std::move(name);
  v->loc = loc;
  return v;
}

ValuePtr mk_nat(std::uint64_t n, SourceLoc loc) {
  auto v = std::make_shared<Value>();
  v->kind = Value::Kind::Nat;
  v->nat = n;
  v->loc = loc;
  return v;
}

ValuePtr mk_lam(std::string binder, VTypePtr ann, ExprPtr body, SourceLoc loc) {
  auto v = std::make_shared<Value>();
  v->kind = Value::Kind::Lam;
  v->binder = std::move(binder);
  v->ann = std::move(ann);
  v->body = std::move(body);
  v->loc = loc;
  return v;
}

static std::shared_ptr<Expr> base_expr(Expr::Kind k, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->loc = loc;
  return e;
}

ExprPtr mk_app(ValuePtr f, ValuePtr a, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::App, loc);
  e->v1 = std::move(f);
  e->v2 = std::move(a);
  return e;
}

ExprPtr mk_return(ValuePtr v, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Return, loc);
  e->v1 = std::move(v);
  return e;
}

ExprPtr mk_do(std::string binder, VTypePtr ann, ExprPtr e1, ExprPtr e2, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Do, loc);
  e->binder = std::move(binder);
  e->ann = std::move(ann);
  e->e1 = std::move(e1);
  e->e2 = std::move(e2);
  return e;
}

ExprPtr mk_op(std::string op, ValuePtr v, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Op, loc);
  e->op_name = std::move(op);
  e->v1 = std::move(v);
  return e;
}

ExprPtr mk_handle(ExprPtr subject, HandlerPtr h, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Handle, loc);
  e->inner = std::move(subject);
  e->handler = std::move(h);
  return e;
}

ExprPtr mk_continue(ValuePtr k, ValuePtr v, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Continue, loc);
  e->v1 = std::move(k);
  e->v2 = std::move(v);
  return e;
}

ExprPtr mk_quote(ExprPtr inner, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Quote, loc);
  e->inner = std::move(inner);
  return e;
}

ExprPtr mk_splice(ExprPtr inner, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Splice, loc);
  e->inner = std::move(inner);
  return e;
}

ExprPtr mk_arith(ArithOp op, ValuePtr a, ValuePtr b, SourceLoc loc) {
  auto e = base_expr(Expr::Kind::Arith, loc);
  e->arith = op;
  e->v1 = std::move(a);
  e->v2 = std::move(b);
  return e;
}

bool vtype_equal_shape(const VTypePtr &a, const VTypePtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case VType::Kind::Nat:
      return true;
    case VType::Kind::Fun:
    case VType::Kind::Cont:
      return a->latent == b->latent && vtype_equal_shape(a->dom, b->dom) &&
             vtype_equal_shape(a->cod, b->cod);
    case VType::Kind::Code:
      return a->classifier == b->classifier && a->code_row == b->code_row &&
             vtype_equal_shape(a->code_val, b->code_val);
  }
  return false;
}

static bool opt_type_equal(const VTypePtr &a, const VTypePtr &b) {
  if (!a && !b) return true;
  if (!a || !b) return false;
  return vtype_equal_shape(a, b);
}

bool value_equal(const ValuePtr &a, const ValuePtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Value::Kind::Var: return a->name == b->name;
    case Value::Kind::Nat: return a->nat == b->nat;
    case Value::Kind::Lam:
      return a->binder == b->binder && opt_type_equal(a->ann, b->ann) && expr_equal(a->body, b->body);
  }
  return false;
}

bool handler_equal(const HandlerPtr &a, const HandlerPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->clauses.size() != b->clauses.size()) return false;
  for (std::size_t i = 0; i < a->clauses.size(); ++i) {
    const auto &ca = a->clauses[i];
    const auto &cb = b->clauses[i];
    if (ca.is_return != cb.is_return || ca.op_name != cb.op_name) return false;
    if (ca.x != cb.x || ca.k != cb.k) return false;
    if (!opt_type_equal(ca.x_ann, cb.x_ann) || !opt_type_equal(ca.k_ann, cb.k_ann)) return false;
    if (!expr_equal(ca.body, cb.body)) return false;
  }
  return true;
}

bool expr_equal(const ExprPtr &a, const ExprPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::App:
    case Expr::Kind::Continue:
      return value_equal(a->v1, b->v1) && value_equal(a->v2, b->v2);
    case Expr::Kind::Return:
      return value_equal(a->v1, b->v1);
    case Expr::Kind::Do:
      return a->binder == b->binder && opt_type_equal(a->ann, b->ann) && expr_equal(a->e1, b->e1) &&
             expr_equal(a->e2, b->e2);
    case Expr::Kind::Op:
      return a->op_name == b->op_name && value_equal(a->v1, b->v1);
    case Expr::Kind::Handle:
      return expr_equal(a->inner, b->inner) && handler_equal(a->handler, b->handler);
    case Expr::Kind::Quote:
    case Expr::Kind::Splice:
      return expr_equal(a->inner, b->inner);
    case Expr::Kind::Arith:
      return a->arith == b->arith && value_equal(a->v1, b->v1) && value_equal(a->v2, b->v2);
  }
  return false;
}

bool program_equal(const Program &a, const Program &b) {
  if (a.sigs.size() != b.sigs.size()) return false;
  for (std::size_t i = 0; i < a.sigs.size(); ++i) {
    const auto &sa = a.sigs[i];
    const auto &sb = b.sigs[i];
    if (sa.name != sb.name || sa.level != sb.level) return false;
    if (!vtype_equal_shape(sa.arg, sb.arg) || !vtype_equal_shape(sa.result, sb.result)) return false;
  }
  return expr_equal(a.body, b.body);
}

static void fv_value(const ValuePtr &v, std::set<std::string> &bound, std::set<std::string> &acc);

static void fv_expr(const ExprPtr &e, std::set<std::string> &bound, std::set<std::string> &acc) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::App:
    case Expr::Kind::Continue:
    case Expr::Kind::Arith:
      fv_value(e->v1, bound, acc);
      fv_value(e->v2, bound, acc);
      return;
    case Expr::Kind::Return:
    case Expr::Kind::Op:
      fv_value(e->v1, bound, acc);
      return;
    case Expr::Kind::Do: {
      fv_expr(e->e1, bound, acc);
      bool fresh = bound.insert(e->binder).second;
      fv_expr(e->e2, bound, acc);
      if (fresh) bound.erase(e->binder);
      return;
    }
    case Expr::Kind::Handle: {
      fv_expr(e->inner, bound, acc);
      for (const auto &c : e->handler->clauses) {
        std::set<std::string> inner_bound = bound;
        inner_bound.insert(c.x);
        if (!c.is_return) inner_bound.insert(c.k);
        fv_expr(c.body, inner_bound, acc);
      }
      return;
    }
    case Expr::Kind::Quote:
    case Expr::Kind::Splice:
      fv_expr(e->inner, bound, acc);
      return;
  }
}

static void fv_value(const ValuePtr &v, std::set<std::string> &bound, std::set<std::string> &acc) {
  if (!v) return;
  switch (v->kind) {
    case Value::Kind::Var:
      if (!bound.count(v->name)) acc.insert(v->name);
      return;
    case Value::Kind::Nat:
      return;
    case Value::Kind::Lam: {
      bool fresh = bound.insert(v->binder).second;
      fv_expr(v->body, bound, acc);
      if (fresh) bound.erase(v->binder);
      return;
    }
  }
}

std::set<std::string> free_vars(const ExprPtr &e) {
  std::set<std::string> bound, acc;
  fv_expr(e, bound, acc);
  return acc;
}

}  // namespace sled::src
