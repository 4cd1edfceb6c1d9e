#include "sled/classifier.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <optional>
#include <set>
#include <stdexcept>

#include "sled/print.hpp"

namespace sled::src {

bool entails(const ClassifierContext &ctx, const std::string &outer, const std::string &inner) {
  auto declared = [&](const std::string &g) {
    return std::find(ctx.classifiers.begin(), ctx.classifiers.end(), g) != ctx.classifiers.end();
  };
  if (!declared(outer) || !declared(inner))
    throw std::logic_error("entails: undeclared classifier (defect)");
  if (outer == inner) return true;
  std::deque<std::string> work{outer};
  std::set<std::string> seen{outer};
  while (!work.empty()) {
    std::string cur = work.front();
    work.pop_front();
    for (const auto &[a, b] : ctx.order) {
      if (a != cur || seen.count(b)) continue;
      if (b == inner) return true;
      seen.insert(b);
      work.push_back(b);
    }
  }
  return false;
}

namespace {

// Classifier entities: rigid classifiers (bottom, binder-introduced, extras)
// and unification cells (quotes, handler scopes, signature sites).
struct Entity {
  bool is_var = false;
  std::uint32_t id = 0;
  friend bool operator==(const Entity &a, const Entity &b) = default;
};

struct Rigid {
  std::string name;
  std::string src_name;  // the binder that introduced this scope, if any
  SourceLoc src_loc;
  bool has_parent = false;
  Entity parent;  // the enclosing scope at introduction time
};

struct Constraint {
  Entity a, b;  // a <= b
  bool eq = false;
  SourceLoc loc;
  std::string what;
};

// Decorated level -1 types: the plain shape plus classifier entities at Code
// positions.
struct CType;
using CTypePtr = std::shared_ptr<const CType>;

struct CType {
  enum class Kind { Nat, Fun, Cont, Code };
  Kind kind = Kind::Nat;
  CTypePtr dom, cod;
  EffectRow latent;
  VTypePtr payload;  // Code payload (level 0, untagged)
  EffectRow row;
  Entity cls;
};

CTypePtr c_nat() {
  auto t = std::make_shared<CType>();
  t->kind = CType::Kind::Nat;
  return t;
}

CTypePtr c_fun(CTypePtr dom, EffectRow latent, CTypePtr cod, bool cont = false) {
  auto t = std::make_shared<CType>();
  t->kind = cont ? CType::Kind::Cont : CType::Kind::Fun;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  t->latent = std::move(latent);
  return t;
}

CTypePtr c_code(VTypePtr payload, EffectRow row, Entity cls) {
  auto t = std::make_shared<CType>();
  t->kind = CType::Kind::Code;
  t->payload = std::move(payload);
  t->row = std::move(row);
  t->cls = cls;
  return t;
}

struct CheckFail {
  Diagnostic diag;
};

[[noreturn]] void fail(SourceLoc loc, const std::string &msg, std::vector<std::string> vars = {}) {
  throw CheckFail{{Severity::Error, msg, loc, std::move(vars)}};
}

struct Solver {
  std::vector<Rigid> rigids;            // rigid 0 is bottom
  std::vector<std::uint32_t> uf;        // union-find over vars
  std::vector<std::optional<std::uint32_t>> var_rigid;  // per var root, after Eq/solve
  std::vector<Constraint> constraints;
  std::vector<std::pair<std::string, std::string>> extra_order;  // declared facts (names)
  std::map<std::string, std::uint32_t> rigid_by_name;

  Solver() { new_rigid("bot", std::nullopt); }

  Entity bottom() const { return Entity{false, 0}; }

  Entity new_rigid(const std::string &name, std::optional<Entity> parent,
                   std::string src_name = "", SourceLoc src_loc = {}) {
    Rigid r;
    r.name = name;
    r.src_name = std::move(src_name);
    r.src_loc = src_loc;
    if (parent) {
      r.has_parent = true;
      r.parent = *parent;
    }
    rigids.push_back(r);
    auto id = static_cast<std::uint32_t>(rigids.size() - 1);
    rigid_by_name.emplace(name, id);
    return Entity{false, id};
  }

  Entity new_var() {
    uf.push_back(static_cast<std::uint32_t>(uf.size()));
    var_rigid.emplace_back(std::nullopt);
    return Entity{true, static_cast<std::uint32_t>(uf.size() - 1)};
  }

  std::uint32_t find(std::uint32_t v) {
    while (uf[v] != v) {
      uf[v] = uf[uf[v]];
      v = uf[v];
    }
    return v;
  }

  void le(Entity a, Entity b, SourceLoc loc, std::string what) {
    constraints.push_back({a, b, false, loc, std::move(what)});
  }

  void eq(Entity a, Entity b, SourceLoc loc, std::string what) {
    constraints.push_back({a, b, true, loc, std::move(what)});
  }

  // -- solving ---------------------------------------------------------------

  std::vector<std::vector<std::uint32_t>> fwd;  // rigid adjacency: a -> b means a <= b

  bool reach(std::uint32_t a, std::uint32_t b) {
    if (a == b) return true;
    std::deque<std::uint32_t> work{a};
    std::set<std::uint32_t> seen{a};
    while (!work.empty()) {
      auto cur = work.front();
      work.pop_front();
      for (auto nx : fwd[cur]) {
        if (seen.count(nx)) continue;
        if (nx == b) return true;
        seen.insert(nx);
        work.push_back(nx);
      }
    }
    return false;
  }

  std::optional<std::uint32_t> entity_rigid(Entity e) {
    if (!e.is_var) return e.id;
    auto root = find(e.id);
    return var_rigid[root];
  }

  void solve_vars(std::vector<Diagnostic> &diags) {
    // Merge equalities first.
    for (const auto &c : constraints) {
      if (!c.eq) continue;
      if (c.a.is_var && c.b.is_var) {
        auto ra = find(c.a.id), rb = find(c.b.id);
        if (ra == rb) continue;
        auto bound_a = var_rigid[ra], bound_b = var_rigid[rb];
        uf[ra] = rb;
        if (bound_a && bound_b && *bound_a != *bound_b) {
          diags.push_back({Severity::Error,
                           "conflicting classifier constraints (" + rigids[*bound_a].name +
                               " vs " + rigids[*bound_b].name + "): " + c.what,
                           c.loc,
                           {}});
        }
        var_rigid[rb] = bound_a ? bound_a : bound_b;
      } else if (c.a.is_var || c.b.is_var) {
        auto v = find(c.a.is_var ? c.a.id : c.b.id);
        auto r = c.a.is_var ? c.b.id : c.a.id;
        if (var_rigid[v] && *var_rigid[v] != r) {
          diags.push_back({Severity::Error,
                           "conflicting classifier constraints (" + rigids[*var_rigid[v]].name +
                               " vs " + rigids[r].name + "): " + c.what,
                           c.loc,
                           {}});
        }
        var_rigid[v] = r;
      } else if (c.a.id != c.b.id) {
        diags.push_back({Severity::Error,
                         "distinct classifiers " + rigids[c.a.id].name + " and " +
                             rigids[c.b.id].name + " cannot be identified: " + c.what,
                         c.loc,
                         {}});
      }
    }
    if (!diags.empty()) return;

    // Lower bounds per variable class.
    std::set<std::uint32_t> roots;
    for (std::uint32_t v = 0; v < uf.size(); ++v) roots.insert(find(v));
    std::map<std::uint32_t, std::vector<Entity>> lowers;
    for (const auto &c : constraints) {
      if (c.eq) continue;
      if (c.b.is_var) lowers[find(c.b.id)].push_back(c.a);
    }

    // Resolve repeatedly: a class is ready when every lower entity and every
    // var on the ancestor chains of its rigid lowers is resolved (the class
    // itself may appear on its own chains).
    auto chain_vars = [&](std::uint32_t rigid, std::uint32_t self,
                          std::set<std::uint32_t> &out) {
      std::set<std::uint32_t> seen_rigids;
      std::uint32_t cur = rigid;
      while (seen_rigids.insert(cur).second) {
        const Rigid &r = rigids[cur];
        if (!r.has_parent) break;
        if (r.parent.is_var) {
          auto root = find(r.parent.id);
          if (root != self && !var_rigid[root]) out.insert(root);
          if (!var_rigid[root]) break;
          cur = *var_rigid[root];
        } else {
          cur = r.parent.id;
        }
      }
    };

    for (;;) {
      bool progress = false;
      bool all_done = true;
      for (auto root : roots) {
        if (var_rigid[root]) continue;
        all_done = false;
        std::set<std::uint32_t> pending;
        bool ready = true;
        for (const auto &l : lowers[root]) {
          if (l.is_var) {
            auto lr = find(l.id);
            if (lr != root && !var_rigid[lr]) {
              ready = false;
              break;
            }
          } else {
            chain_vars(l.id, root, pending);
          }
        }
        if (!ready || !pending.empty()) continue;
        resolve_class(root, lowers[root]);
        progress = true;
      }
      if (all_done) break;
      if (!progress) {
        // Cyclic dependencies: bind every remaining class to bottom's side of
        // its first rigid lower, or bottom.
        for (auto root : roots) {
          if (var_rigid[root]) continue;
          std::uint32_t pick = 0;
          for (const auto &l : lowers[root]) {
            if (!l.is_var) {
              pick = l.id;
              break;
            }
            auto lr = find(l.id);
            if (var_rigid[lr]) {
              pick = *var_rigid[lr];
              break;
            }
          }
          var_rigid[root] = pick;
        }
        break;
      }
    }

    build_order();

    // A handler or quote scope that can only be solved by a classifier
    // introduced inside itself is ill-founded: the fragment's binder lives
    // inside the very computation whose scope it would have to escape to.
    for (auto root : roots) {
      if (!var_rigid[root]) continue;
      std::uint32_t cur = *var_rigid[root];
      std::set<std::uint32_t> seen;
      while (seen.insert(cur).second) {
        const Rigid &r = rigids[cur];
        if (!r.has_parent) break;
        if (r.parent.is_var && find(r.parent.id) == root) {
          const Rigid &leaf = rigids[*var_rigid[root]];
          std::vector<std::string> vars;
          std::string who = leaf.src_name.empty()
                                ? "scope " + leaf.name
                                : "the scope of '" + leaf.src_name + "' (" + leaf.name + ")";
          if (!leaf.src_name.empty()) vars.push_back(leaf.src_name);
          diags.push_back({Severity::Error,
                           "classifier escape: " + who +
                               " is introduced inside the computation whose scope it would "
                               "have to escape to",
                           leaf.src_loc, vars});
          break;
        }
        auto p = entity_rigid(r.parent);
        if (!p) break;
        cur = *p;
      }
    }
    if (!diags.empty()) return;

    // Verify every ordering constraint under the resolved assignment.
    for (const auto &c : constraints) {
      if (c.eq) continue;
      auto ra = entity_rigid(c.a);
      auto rb = entity_rigid(c.b);
      if (!ra || !rb) continue;
      if (!reach(*ra, *rb)) {
        std::string who = rigids[*ra].src_name.empty()
                              ? "scope " + rigids[*ra].name
                              : "the scope of '" + rigids[*ra].src_name + "' (" +
                                    rigids[*ra].name + ")";
        std::vector<std::string> vars;
        if (!rigids[*ra].src_name.empty()) vars.push_back(rigids[*ra].src_name);
        diags.push_back({Severity::Error,
                         "classifier escape: " + who + " is not enclosed by scope " +
                             rigids[*rb].name + " (" + c.what + ")",
                         c.loc, vars});
      }
    }
  }

  void resolve_class(std::uint32_t root, const std::vector<Entity> &lower_entities) {
    // Collect resolved rigid lower bounds.
    std::set<std::uint32_t> lows;
    for (const auto &l : lower_entities) {
      if (l.is_var) {
        auto lr = find(l.id);
        if (lr == root) continue;
        if (var_rigid[lr]) lows.insert(*var_rigid[lr]);
      } else {
        lows.insert(l.id);
      }
    }
    if (lows.empty()) {
      var_rigid[root] = 0;  // bottom
      return;
    }
    build_order();
    // Tightest candidate: a rigid reachable from every lower bound; prefer
    // one of the bounds themselves, else search all rigids.
    std::optional<std::uint32_t> best;
    auto admissible = [&](std::uint32_t c) {
      for (auto l : lows)
        if (!reach(l, c)) return false;
      return true;
    };
    for (auto cand : lows) {
      if (!admissible(cand)) continue;
      if (!best || reach(cand, *best)) best = cand;
    }
    if (!best) {
      for (std::uint32_t c = 0; c < rigids.size(); ++c) {
        if (!admissible(c)) continue;
        if (!best || reach(c, *best)) best = c;
      }
    }
    // If no rigid sits above every lower bound, pick the first bound; the
    // verification pass will report the escape with a precise message.
    var_rigid[root] = best ? *best : *lows.begin();
  }

  void build_order() {
    fwd.assign(rigids.size(), {});
    for (std::uint32_t i = 0; i < rigids.size(); ++i) {
      const Rigid &r = rigids[i];
      if (!r.has_parent) continue;
      auto p = entity_rigid(r.parent);
      if (p && *p != i) fwd[*p].push_back(i);
    }
    for (const auto &[a, b] : extra_order) {
      auto ia = rigid_by_name.find(a);
      auto ib = rigid_by_name.find(b);
      if (ia != rigid_by_name.end() && ib != rigid_by_name.end())
        fwd[ia->second].push_back(ib->second);
    }
  }
};

struct ClassifierChecker {
  Solver solver;
  std::map<std::string, Entity> sig_cells;  // signature-site classifier names
  std::map<std::string, std::pair<VTypePtr, VTypePtr>> ct_sigs;  // plain types
  std::map<std::string, Entity> extra_rigids;
  ClassifierResult *result = nullptr;
  int splice_count = 0;
  int fresh_names = 0;

  struct Binding {
    bool level0 = false;
    VTypePtr plain;   // level 0
    Entity cls;       // level 0 classifier
    CTypePtr ctype;   // level -1
  };
  std::vector<std::pair<std::string, Binding>> ctx;

  std::string fresh_rigid_name() { return "g" + std::to_string(++fresh_names); }

  Entity intro_binder(const void *node, Entity current, const std::string &src_name = "",
                      SourceLoc loc = {}) {
    Entity g = solver.new_rigid(fresh_rigid_name(), current, src_name, loc);
    result->introduced.push_back(solver.rigids[g.id].name);
    if (node) result->tags[node] = solver.rigids[g.id].name;
    return g;
  }

  const Binding &lookup(const std::string &name, SourceLoc loc, bool want_level0) {
    for (auto it = ctx.rbegin(); it != ctx.rend(); ++it) {
      if (it->first != name) continue;
      if (it->second.level0 != want_level0)
        fail(loc, "variable '" + name + "' used at the wrong level", {name});
      return it->second;
    }
    fail(loc, "unbound variable '" + name + "'", {name});
  }

  // Signature types to decorated types; named tags are signature cells or
  // bottom, untagged Code positions get a fresh cell per signature.
  CTypePtr sig_ctype(const VTypePtr &t, std::map<std::string, Entity> &local_cells) {
    switch (t->kind) {
      case VType::Kind::Nat:
        return c_nat();
      case VType::Kind::Fun:
      case VType::Kind::Cont:
        return c_fun(sig_ctype(t->dom, local_cells), t->latent, sig_ctype(t->cod, local_cells),
                     t->kind == VType::Kind::Cont);
      case VType::Kind::Code: {
        Entity cls;
        if (t->classifier.empty()) {
          cls = solver.new_var();
        } else if (t->classifier == "bot") {
          cls = solver.bottom();
        } else {
          auto it = local_cells.find(t->classifier);
          if (it == local_cells.end())
            it = local_cells.emplace(t->classifier, solver.new_var()).first;
          cls = it->second;
        }
        return c_code(t->code_val, t->code_row, cls);
      }
    }
    fail({}, "malformed signature type");
  }

  // Annotation types inside the program: named tags refer to signature cells,
  // bottom, or extra declared classifiers; untagged Code gets a fresh cell.
  CTypePtr ann_ctype(const VTypePtr &t, SourceLoc loc) {
    switch (t->kind) {
      case VType::Kind::Nat:
        return c_nat();
      case VType::Kind::Fun:
      case VType::Kind::Cont:
        return c_fun(ann_ctype(t->dom, loc), t->latent, ann_ctype(t->cod, loc),
                     t->kind == VType::Kind::Cont);
      case VType::Kind::Code: {
        Entity cls;
        if (t->classifier.empty()) {
          cls = solver.new_var();
        } else if (t->classifier == "bot") {
          cls = solver.bottom();
        } else if (auto it = sig_cells.find(t->classifier); it != sig_cells.end()) {
          cls = it->second;
        } else if (auto it2 = extra_rigids.find(t->classifier); it2 != extra_rigids.end()) {
          cls = it2->second;
        } else {
          fail(loc, "unknown classifier '" + t->classifier + "' in annotation");
        }
        return c_code(t->code_val, t->code_row, cls);
      }
    }
    fail(loc, "malformed annotation");
  }

  // Relates an actual type to an expected one. Code classifiers at the top
  // may be widened (outer scopes embed in inner ones); nested occurrences
  // must coincide.
  void match(const CTypePtr &actual, const CTypePtr &expected, bool top, SourceLoc loc,
             const std::string &what) {
    if (actual->kind != expected->kind)
      fail(loc, "type shape mismatch in " + what);
    switch (actual->kind) {
      case CType::Kind::Nat:
        return;
      case CType::Kind::Fun:
      case CType::Kind::Cont:
        match(actual->dom, expected->dom, false, loc, what);
        match(actual->cod, expected->cod, false, loc, what);
        return;
      case CType::Kind::Code:
        if (top)
          solver.le(actual->cls, expected->cls, loc, what);
        else
          solver.eq(actual->cls, expected->cls, loc, what);
        return;
    }
  }

  // -- compile/quote side ------------------------------------------------------

  void walk_value_cq(const ValuePtr &v, Entity current) {
    switch (v->kind) {
      case Value::Kind::Var: {
        const Binding &b = lookup(v->name, v->loc, true);
        solver.le(b.cls, current, v->loc,
                  "use of variable '" + v->name + "' in a quoted scope");
        return;
      }
      case Value::Kind::Nat:
        return;
      case Value::Kind::Lam: {
        Entity g = intro_binder(v.get(), current, v->binder, v->loc);
        ctx.push_back({v->binder, {true, v->ann, g, nullptr}});
        walk_expr_cq(v->body, g);
        ctx.pop_back();
        return;
      }
    }
  }

  void walk_expr_cq(const ExprPtr &e, Entity current) {
    using K = Expr::Kind;
    switch (e->kind) {
      case K::App:
      case K::Continue:
      case K::Arith:
        walk_value_cq(e->v1, current);
        walk_value_cq(e->v2, current);
        return;
      case K::Return:
      case K::Op:
        walk_value_cq(e->v1, current);
        return;
      case K::Do: {
        walk_expr_cq(e->e1, current);
        Entity g = intro_binder(e.get(), current, e->binder, e->loc);
        ctx.push_back({e->binder, {true, e->ann, g, nullptr}});
        walk_expr_cq(e->e2, g);
        ctx.pop_back();
        return;
      }
      case K::Handle: {
        walk_expr_cq(e->inner, current);
        for (const auto &c : e->handler->clauses) {
          Entity g = intro_binder(&c, current, c.x, c.loc);
          ctx.push_back({c.x, {true, c.x_ann, g, nullptr}});
          if (!c.is_return) ctx.push_back({c.k, {true, c.k_ann, g, nullptr}});
          walk_expr_cq(c.body, g);
          if (!c.is_return) ctx.pop_back();
          ctx.pop_back();
        }
        return;
      }
      case K::Quote:
        fail(e->loc, "quote in compile/quote mode");
      case K::Splice: {
        CTypePtr inner = walk_expr_s(e->inner);
        if (inner->kind != CType::Kind::Code) fail(e->loc, "splice of a non-Code value");
        solver.le(inner->cls, current, e->loc, "splicing code into the current scope");
        return;
      }
    }
  }

  // -- splice side --------------------------------------------------------------

  CTypePtr walk_value_s(const ValuePtr &v) {
    switch (v->kind) {
      case Value::Kind::Var:
        return lookup(v->name, v->loc, false).ctype;
      case Value::Kind::Nat:
        return c_nat();
      case Value::Kind::Lam: {
        CTypePtr dom = ann_ctype(v->ann, v->loc);
        ctx.push_back({v->binder, {false, nullptr, {}, dom}});
        CTypePtr body = walk_expr_s(v->body);
        ctx.pop_back();
        return c_fun(dom, {}, body);
      }
    }
    fail(v->loc, "malformed value");
  }

  CTypePtr walk_expr_s(const ExprPtr &e) {
    using K = Expr::Kind;
    switch (e->kind) {
      case K::App: {
        CTypePtr f = walk_value_s(e->v1);
        CTypePtr a = walk_value_s(e->v2);
        if (f->kind != CType::Kind::Fun) fail(e->loc, "application of a non-function");
        match(a, f->dom, true, e->loc, "function argument");
        return f->cod;
      }
      case K::Return:
        return walk_value_s(e->v1);
      case K::Do: {
        CTypePtr t1 = walk_expr_s(e->e1);
        ctx.push_back({e->binder, {false, nullptr, {}, t1}});
        CTypePtr t2 = walk_expr_s(e->e2);
        ctx.pop_back();
        return t2;
      }
      case K::Op: {
        auto it = ct_sigs.find(e->op_name);
        if (it == ct_sigs.end()) fail(e->loc, "undeclared compile-time operation " + e->op_name);
        CTypePtr arg_expected = instantiate_sig(it->second.first, e->op_name);
        CTypePtr res = instantiate_sig(it->second.second, e->op_name);
        if (res->kind != CType::Kind::Code)
          fail(e->loc, "compile-time operation '" + e->op_name +
                           "' must return classifier-tagged Code in classifier mode");
        CTypePtr arg = walk_value_s(e->v1);
        match(arg, arg_expected, true, e->loc, "operation argument of '" + e->op_name + "'");
        return res;
      }
      case K::Handle: {
        CTypePtr subj = walk_expr_s(e->inner);
        if (subj->kind != CType::Kind::Code)
          fail(e->loc,
               "classifier mode restricts handlers to Code-typed compile-time computations");
        Entity scope = solver.new_var();
        solver.eq(subj->cls, scope, e->loc, "handled computation shares the handler scope");
        CTypePtr out;
        for (const auto &c : e->handler->clauses) {
          if (c.is_return) {
            CTypePtr xt = c_code(subj->payload, subj->row, scope);
            ctx.push_back({c.x, {false, nullptr, {}, xt}});
            CTypePtr body = walk_expr_s(c.body);
            if (body->kind != CType::Kind::Code)
              fail(c.loc, "handler clauses must produce Code in classifier mode");
            solver.le(body->cls, scope, c.loc, "return clause result stays in the handler scope");
            out = c_code(body->payload, body->row, scope);
            ctx.pop_back();
          }
        }
        if (!out) fail(e->loc, "handler without return clause");
        for (const auto &c : e->handler->clauses) {
          if (c.is_return) continue;
          auto it = ct_sigs.find(c.op_name);
          if (it == ct_sigs.end()) fail(c.loc, "undeclared operation " + c.op_name);
          CTypePtr res = instantiate_sig(it->second.second, c.op_name);
          if (res->kind != CType::Kind::Code)
            fail(c.loc, "compile-time operation '" + c.op_name +
                            "' must return classifier-tagged Code in classifier mode");
          // the handler fixes one scope: the signature's classifier is the
          // handler's scope
          solver.eq(res->cls, scope, c.loc,
                    "handler clause for '" + c.op_name + "' fixes the operation's scope");
          CTypePtr xt = instantiate_sig(it->second.first, c.op_name);
          CTypePtr kt = c_fun(c_code(res->payload, res->row, scope), {},
                              c_code(out->payload, out->row, scope), true);
          ctx.push_back({c.x, {false, nullptr, {}, xt}});
          ctx.push_back({c.k, {false, nullptr, {}, kt}});
          CTypePtr body = walk_expr_s(c.body);
          if (body->kind != CType::Kind::Code)
            fail(c.loc, "handler clauses must produce Code in classifier mode");
          solver.le(body->cls, scope, c.loc, "clause result stays in the handler scope");
          ctx.pop_back();
          ctx.pop_back();
        }
        return out;
      }
      case K::Continue: {
        CTypePtr k = walk_value_s(e->v1);
        if (k->kind != CType::Kind::Cont) fail(e->loc, "continue of a non-continuation");
        if (k->dom->kind != CType::Kind::Code || k->cod->kind != CType::Kind::Code)
          fail(e->loc, "classifier mode restricts continuations to Code types");
        CTypePtr a = walk_value_s(e->v2);
        match(a, k->dom, true, e->loc, "continuation argument");
        return k->cod;
      }
      case K::Quote: {
        Entity q = solver.new_var();
        walk_expr_cq(e->inner, q);
        // payload plain type: reconstruct from nothing — carried by caller
        // contexts through annotations; the payload is only compared for
        // shape, which the plain checker has already verified.
        return c_code(nullptr, {}, q);
      }
      case K::Splice:
        fail(e->loc, "splice inside a splice body");
      case K::Arith: {
        walk_value_s(e->v1);
        walk_value_s(e->v2);
        return c_nat();
      }
    }
    fail(e->loc, "malformed expression");
  }

  std::map<std::string, std::map<std::string, Entity>> sig_instances;

  CTypePtr instantiate_sig(const VTypePtr &t, const std::string &op) {
    return sig_ctype_with(t, sig_instances[op]);
  }

  CTypePtr sig_ctype_with(const VTypePtr &t, std::map<std::string, Entity> &cells) {
    return sig_ctype(t, cells);
  }

  int count_top_splices(const ExprPtr &e) {
    using K = Expr::Kind;
    switch (e->kind) {
      case K::Splice:
        return 1;
      case K::Do:
        return count_top_splices(e->e1) + count_top_splices(e->e2);
      case K::Handle: {
        int n = count_top_splices(e->inner);
        for (const auto &c : e->handler->clauses) n += count_top_splices(c.body);
        return n;
      }
      case K::App:
      case K::Continue:
      case K::Arith:
      case K::Return:
      case K::Op: {
        int n = 0;
        for (const auto &v : {e->v1, e->v2})
          if (v && v->kind == Value::Kind::Lam) n += count_top_splices(v->body);
        return n;
      }
      case K::Quote:
        return 0;  // different mode below
    }
    return 0;
  }
};

}  // namespace

ClassifierResult check_classifiers_with(const Program &annotated, const ClassifierContext &extra) {
  ClassifierResult out;
  ClassifierChecker ck;
  ck.result = &out;
  try {
    // Declared extras (weakening experiments).
    for (const auto &g : extra.classifiers) {
      if (g == "bot") continue;
      ck.extra_rigids.emplace(g, ck.solver.new_rigid(g, std::nullopt));
    }
    ck.solver.extra_order = extra.order;
    for (const auto &[name, ty, cls] : extra.level0_vars) {
      auto it = ck.extra_rigids.find(cls);
      Entity e = cls == "bot" ? ck.solver.bottom()
                              : (it != ck.extra_rigids.end()
                                     ? it->second
                                     : ck.extra_rigids.emplace(cls, ck.solver.new_rigid(cls, std::nullopt))
                                           .first->second);
      ck.ctx.push_back({name, {true, ty, e, nullptr}});
    }

    // Signatures: compile-time results must be Code with a classifier.
    for (const auto &s : annotated.sigs) {
      if (s.level != Level::CompileTime) continue;
      ck.ct_sigs[s.name] = {s.arg, s.result};
      if (s.result->kind != VType::Kind::Code || s.result->classifier.empty())
        fail(s.loc, "in classifier mode, compile-time operation '" + s.name +
                        "' must be declared with a classifier-tagged Code result");
    }
    for (const auto &[name, ty] : extra.levelm1_vars)
      ck.ctx.push_back({name, {false, nullptr, {}, ck.ann_ctype(ty, SourceLoc{})}});

    int splices = ck.count_top_splices(annotated.body);
    if (splices > 1)
      fail(annotated.body->loc,
           "classifier mode supports a single top-level splice per program");

    ck.walk_expr_cq(annotated.body, ck.solver.bottom());
    ck.solver.solve_vars(out.diagnostics);
    out.ok = out.diagnostics.empty();
  } catch (CheckFail &f) {
    out.diagnostics.push_back(f.diag);
    out.ok = false;
  }
  return out;
}

ClassifierResult check_classifiers(const Program &annotated) {
  return check_classifiers_with(annotated, {});
}

}  // namespace sled::src
