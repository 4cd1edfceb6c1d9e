#include "sled/print.hpp"

#include <sstream>

#include "json.hpp"

namespace sled {

using nlohmann::json;

namespace {

std::string row_text(const src::EffectRow &row) {
  std::string s = "{";
  bool first = true;
  for (const auto &op : row) {
    if (!first) s += ", ";
    s += op;
    first = false;
  }
  return s + "}";
}

}  // namespace

std::string print_type(const src::VTypePtr &t) {
  using K = src::VType::Kind;
  if (!t) return "?";
  switch (t->kind) {
    case K::Nat:
      return "Nat";
    case K::Fun:
      return "(" + print_type(t->dom) + " ->" + row_text(t->latent) + " " + print_type(t->cod) + ")";
    case K::Cont:
      return "(" + print_type(t->dom) + " =>" + row_text(t->latent) + " " + print_type(t->cod) + ")";
    case K::Code: {
      std::string s = "Code(" + print_type(t->code_val) + " ! " + row_text(t->code_row) + ")";
      if (!t->classifier.empty()) s += "@" + t->classifier;
      return s;
    }
  }
  return "?";
}

std::string print_value(const src::ValuePtr &v) {
  using K = src::Value::Kind;
  switch (v->kind) {
    case K::Var:
      return v->name;
    case K::Nat:
      return std::to_string(v->nat);
    case K::Lam: {
      std::string s = "fun (" + v->binder;
      if (v->ann) s += " : " + print_type(v->ann);
      s += ") -> " + print_expr(v->body);
      return s;
    }
  }
  return "?";
}

std::string print_expr(const src::ExprPtr &e) {
  using K = src::Expr::Kind;
  auto paren_value = [](const src::ValuePtr &v) {
    std::string s = print_value(v);
    if (v->kind == src::Value::Kind::Lam) s = "(" + s + ")";
    return s;
  };
  switch (e->kind) {
    case K::App:
      return paren_value(e->v1) + " " + paren_value(e->v2);
    case K::Return:
      return "return " + paren_value(e->v1);
    case K::Do: {
      std::string s = "do " + e->binder;
      if (e->ann) s += " : " + print_type(e->ann);
      s += " <- " + print_expr(e->e1) + " in " + print_expr(e->e2);
      return s;
    }
    case K::Op:
      return "perform " + e->op_name + "(" + print_value(e->v1) + ")";
    case K::Handle: {
      std::string s = "handle (" + print_expr(e->inner) + ") with { ";
      bool first = true;
      for (const auto &c : e->handler->clauses) {
        if (!first) s += " ; ";
        first = false;
        if (c.is_return) {
          s += "return (" + c.x;
          if (c.x_ann) s += " : " + print_type(c.x_ann);
          s += ")";
        } else {
          s += c.op_name + " (" + c.x;
          if (c.x_ann) s += " : " + print_type(c.x_ann);
          s += ", " + c.k;
          if (c.k_ann) s += " : " + print_type(c.k_ann);
          s += ")";
        }
        s += " -> " + print_expr(c.body);
      }
      return s + " }";
    }
    case K::Continue:
      return "continue " + paren_value(e->v1) + " " + paren_value(e->v2);
    case K::Quote:
      return "<< " + print_expr(e->inner) + " >>";
    case K::Splice:
      return "$( " + print_expr(e->inner) + " )";
    case K::Arith: {
      const char *op = e->arith == src::ArithOp::Plus    ? " + "
                       : e->arith == src::ArithOp::Times ? " * "
                                                         : " - ";
      return "(" + paren_value(e->v1) + op + paren_value(e->v2) + ")";
    }
  }
  return "?";
}

std::string print_source(const src::Program &p) {
  std::ostringstream os;
  for (const auto &s : p.sigs) {
    os << "effect" << (s.level == src::Level::CompileTime ? "^ " : " ") << s.name << " : "
       << print_type(s.arg) << " -> " << print_type(s.result) << "\n";
  }
  os << print_expr(p.body) << "\n";
  return os.str();
}

namespace {

std::string fparam_text(const core::FormalParam &fp, bool verbose) {
  std::string s = "α" + std::to_string(fp.id);
  if (verbose) {
    s += ":" + core::pretype_to_string(fp.pretype);
    if (!fp.classifier.empty()) s += "@" + fp.classifier;
  }
  return s;
}

std::string core_handler_text(const core::CoreHandlerPtr &h, bool verbose) {
  std::string s = "{ ";
  bool first = true;
  for (const auto &c : h->clauses) {
    if (!first) s += " ; ";
    first = false;
    if (c.is_return) {
      s += "return(" + c.x + ") -> " + print_core(c.body, verbose);
    } else {
      s += c.op_name + "(" + c.x + ", " + c.k + ") -> " + print_core(c.body, verbose);
    }
  }
  return s + " }";
}

}  // namespace

std::string print_nf(const core::NfPtr &n, bool verbose) {
  using K = core::NormalForm::Kind;
  if (!n) return "?";
  switch (n->kind) {
    case K::MetaVar: return n->var;
    case K::NatLit: return std::to_string(n->nat);
    case K::Lam: return "fun " + n->var + " -> " + print_core(n->body, verbose);
    case K::Kont: return "kont " + n->var + " -> " + print_core(n->body, verbose);
    case K::AstNat: return "Nat(" + std::to_string(n->nat) + ")";
    case K::FParamV: return fparam_text(n->fparam, verbose);
    case K::AstVar: return "Var(" + print_nf(n->n1, verbose) + ")";
    case K::AstLam: return "Lam(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstApp: return "App(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstContinue:
      return "Continue(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstRet: return "Ret(" + print_nf(n->n1, verbose) + ")";
    case K::AstDo:
      return "Do(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ", " +
             print_nf(n->n3, verbose) + ")";
    case K::AstOp: return "Op[" + n->op_name + "](" + print_nf(n->n1, verbose) + ")";
    case K::AstHwith:
      return "Hwith(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstHret:
      return "Hret(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstHop:
      return "Hop[" + n->op_name + "](" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) +
             ", " + print_nf(n->n3, verbose) + ", " + print_nf(n->n4, verbose) + ")";
    case K::AstPlus:
      return "Plus(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
    case K::AstTimes:
      return "Times(" + print_nf(n->n1, verbose) + ", " + print_nf(n->n2, verbose) + ")";
  }
  return "?";
}

std::string print_core(const core::TermPtr &t, bool verbose) {
  using K = core::CoreTerm::Kind;
  if (!t) return "?";
  switch (t->kind) {
    case K::App: return "(" + print_nf(t->n1, verbose) + ") (" + print_nf(t->n2, verbose) + ")";
    case K::Return: return "return " + print_nf(t->n1, verbose);
    case K::Do:
      return "do " + t->var + " <- " + print_core(t->t1, verbose) + " in " +
             print_core(t->t2, verbose);
    case K::Op: return "perform " + t->op_name + "(" + print_nf(t->n1, verbose) + ")";
    case K::Handle:
      return "handle (" + print_core(t->t1, verbose) + ") with " +
             core_handler_text(t->handler, verbose);
    case K::Continue:
      return "continue (" + print_nf(t->n1, verbose) + ") (" + print_nf(t->n2, verbose) + ")";
    case K::Check: return "check(" + print_nf(t->n1, verbose) + ")";
    case K::CheckM: return "check_M(" + print_nf(t->n1, verbose) + ")";
    case K::Mkvar: return "mkvar(" + core::pretype_to_string(t->mk_pre) + ")";
    case K::Dlet:
      return "dlet(" + print_nf(t->n1, verbose) + ", " + print_core(t->t1, verbose) + ")";
    case K::Tls: return "tls(" + print_core(t->t1, verbose) + ")";
    case K::Err: return "err";
    case K::Arith: {
      const char *op = t->arith == src::ArithOp::Plus    ? " + "
                       : t->arith == src::ArithOp::Times ? " * "
                                                         : " - ";
      return print_nf(t->n1, verbose) + op + print_nf(t->n2, verbose);
    }
  }
  return "?";
}

namespace {

json value_json(const src::ValuePtr &v);

json expr_json(const src::ExprPtr &e) {
  using K = src::Expr::Kind;
  json j;
  switch (e->kind) {
    case K::App:
      j["tag"] = "app";
      j["children"] = {value_json(e->v1), value_json(e->v2)};
      break;
    case K::Return:
      j["tag"] = "return";
      j["children"] = {value_json(e->v1)};
      break;
    case K::Do:
      j["tag"] = "do";
      j["binder"] = e->binder;
      if (e->ann) j["ann"] = print_type(e->ann);
      j["children"] = {expr_json(e->e1), expr_json(e->e2)};
      break;
    case K::Op:
      j["tag"] = "perform";
      j["op"] = e->op_name;
      j["children"] = {value_json(e->v1)};
      break;
    case K::Handle: {
      j["tag"] = "handle";
      json clauses = json::array();
      for (const auto &c : e->handler->clauses) {
        json cj;
        cj["tag"] = c.is_return ? "return-clause" : "op-clause";
        if (!c.is_return) {
          cj["op"] = c.op_name;
          cj["k"] = c.k;
        }
        cj["x"] = c.x;
        cj["children"] = {expr_json(c.body)};
        clauses.push_back(cj);
      }
      j["children"] = {expr_json(e->inner)};
      j["clauses"] = clauses;
      break;
    }
    case K::Continue:
      j["tag"] = "continue";
      j["children"] = {value_json(e->v1), value_json(e->v2)};
      break;
    case K::Quote:
      j["tag"] = "quote";
      j["children"] = {expr_json(e->inner)};
      break;
    case K::Splice:
      j["tag"] = "splice";
      j["children"] = {expr_json(e->inner)};
      break;
    case K::Arith:
      j["tag"] = e->arith == src::ArithOp::Plus    ? "plus"
                 : e->arith == src::ArithOp::Times ? "times"
                                                   : "monus";
      j["children"] = {value_json(e->v1), value_json(e->v2)};
      break;
  }
  return j;
}

json value_json(const src::ValuePtr &v) {
  using K = src::Value::Kind;
  json j;
  switch (v->kind) {
    case K::Var:
      j["tag"] = "var";
      j["name"] = v->name;
      break;
    case K::Nat:
      j["tag"] = "nat";
      j["value"] = v->nat;
      break;
    case K::Lam:
      j["tag"] = "fun";
      j["binder"] = v->binder;
      if (v->ann) j["ann"] = print_type(v->ann);
      j["children"] = {expr_json(v->body)};
      break;
  }
  return j;
}

json nf_json(const core::NfPtr &n);

json core_json(const core::TermPtr &t) {
  using K = core::CoreTerm::Kind;
  json j;
  json kids = json::array();
  switch (t->kind) {
    case K::App: j["tag"] = "app"; kids = {nf_json(t->n1), nf_json(t->n2)}; break;
    case K::Return: j["tag"] = "return"; kids = {nf_json(t->n1)}; break;
    case K::Do:
      j["tag"] = "do";
      j["binder"] = t->var;
      kids = {core_json(t->t1), core_json(t->t2)};
      break;
    case K::Op:
      j["tag"] = "perform";
      j["op"] = t->op_name;
      kids = {nf_json(t->n1)};
      break;
    case K::Handle: {
      j["tag"] = "handle";
      json clauses = json::array();
      for (const auto &c : t->handler->clauses) {
        json cj;
        cj["tag"] = c.is_return ? "return-clause" : "op-clause";
        cj["x"] = c.x;
        if (!c.is_return) {
          cj["op"] = c.op_name;
          cj["k"] = c.k;
        }
        cj["children"] = {core_json(c.body)};
        clauses.push_back(cj);
      }
      j["clauses"] = clauses;
      kids = {core_json(t->t1)};
      break;
    }
    case K::Continue: j["tag"] = "continue"; kids = {nf_json(t->n1), nf_json(t->n2)}; break;
    case K::Check: j["tag"] = "check"; kids = {nf_json(t->n1)}; break;
    case K::CheckM: j["tag"] = "check_M"; kids = {nf_json(t->n1)}; break;
    case K::Mkvar:
      j["tag"] = "mkvar";
      j["pretype"] = core::pretype_to_string(t->mk_pre);
      break;
    case K::Dlet: j["tag"] = "dlet"; kids = {nf_json(t->n1), core_json(t->t1)}; break;
    case K::Tls: j["tag"] = "tls"; kids = {core_json(t->t1)}; break;
    case K::Err: j["tag"] = "err"; break;
    case K::Arith:
      j["tag"] = t->arith == src::ArithOp::Plus    ? "plus"
                 : t->arith == src::ArithOp::Times ? "times"
                                                   : "monus";
      kids = {nf_json(t->n1), nf_json(t->n2)};
      break;
  }
  if (!kids.empty()) j["children"] = kids;
  return j;
}

json nf_json(const core::NfPtr &n) {
  using K = core::NormalForm::Kind;
  json j;
  json kids = json::array();
  switch (n->kind) {
    case K::MetaVar: j["tag"] = "metavar"; j["name"] = n->var; break;
    case K::NatLit: j["tag"] = "nat"; j["value"] = n->nat; break;
    case K::Lam:
      j["tag"] = "fun";
      j["binder"] = n->var;
      kids = {core_json(n->body)};
      break;
    case K::Kont:
      j["tag"] = "kont";
      j["binder"] = n->var;
      kids = {core_json(n->body)};
      break;
    case K::AstNat: j["tag"] = "Nat"; j["value"] = n->nat; break;
    case K::FParamV:
      j["tag"] = "fparam";
      j["id"] = n->fparam.id;
      j["pretype"] = core::pretype_to_string(n->fparam.pretype);
      break;
    case K::AstVar: j["tag"] = "Var"; kids = {nf_json(n->n1)}; break;
    case K::AstLam: j["tag"] = "Lam"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstApp: j["tag"] = "App"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstContinue: j["tag"] = "Continue"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstRet: j["tag"] = "Ret"; kids = {nf_json(n->n1)}; break;
    case K::AstDo: j["tag"] = "Do"; kids = {nf_json(n->n1), nf_json(n->n2), nf_json(n->n3)}; break;
    case K::AstOp: j["tag"] = "Op"; j["op"] = n->op_name; kids = {nf_json(n->n1)}; break;
    case K::AstHwith: j["tag"] = "Hwith"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstHret: j["tag"] = "Hret"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstHop:
      j["tag"] = "Hop";
      j["op"] = n->op_name;
      kids = {nf_json(n->n1), nf_json(n->n2), nf_json(n->n3), nf_json(n->n4)};
      break;
    case K::AstPlus: j["tag"] = "Plus"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
    case K::AstTimes: j["tag"] = "Times"; kids = {nf_json(n->n1), nf_json(n->n2)}; break;
  }
  if (!kids.empty()) j["children"] = kids;
  return j;
}

}  // namespace

std::string structured_expr(const src::ExprPtr &e) { return expr_json(e).dump(); }

std::string structured_program(const src::Program &p) {
  json j;
  json sigs = json::array();
  for (const auto &s : p.sigs) {
    sigs.push_back({{"name", s.name},
                    {"level", s.level == src::Level::RunTime ? 0 : -1},
                    {"arg", print_type(s.arg)},
                    {"result", print_type(s.result)}});
  }
  j["sigs"] = sigs;
  j["body"] = expr_json(p.body);
  return j.dump();
}

std::string structured_core(const core::TermPtr &t) { return core_json(t).dump(); }

}  // namespace sled
