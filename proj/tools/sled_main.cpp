#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sled/classifier.hpp"
#include "sled/elaborate.hpp"
#include "sled/harness.hpp"
#include "sled/machine.hpp"
#include "sled/parse.hpp"
#include "sled/print.hpp"
#include "sled/typeck.hpp"

#ifndef SLED_LISTINGS_DIR
#define SLED_LISTINGS_DIR "listings"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitScopeError = 2;
constexpr int kExitStaticError = 3;
constexpr int kExitUnhandled = 4;
constexpr int kExitFuel = 5;
constexpr int kExitUsage = 64;

using nlohmann::json;

struct Loaded {
  sled::src::CheckedProgram checked;
};

int load_program(const std::string &path, Loaded &out) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return kExitUsage;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  auto parsed = sled::src::parse_program(ss.str());
  if (!parsed.ok) {
    std::cerr << sled::format_diagnostics(parsed.diagnostics);
    return kExitStaticError;
  }
  out.checked = sled::src::typecheck_program(parsed.program);
  if (!out.checked.ok) {
    std::cerr << sled::format_diagnostics(out.checked.diagnostics);
    return kExitStaticError;
  }
  return kExitOk;
}

sled::CheckKind parse_kind(const std::string &k) {
  if (k == "naive") return sled::CheckKind::Naive;
  if (k == "lazy") return sled::CheckKind::Lazy;
  if (k == "eager") return sled::CheckKind::Eager;
  return sled::CheckKind::C4C;
}

const char *outcome_name(const sled::core::Outcome &o) {
  using K = sled::core::Outcome::Kind;
  switch (o.kind) {
    case K::Value: return "value";
    case K::ScopeError: return "scope-error";
    case K::Unhandled: return "unhandled";
    case K::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

int outcome_exit(const sled::core::Outcome &o) {
  using K = sled::core::Outcome::Kind;
  switch (o.kind) {
    case K::Value: return kExitOk;
    case K::ScopeError: return kExitScopeError;
    case K::Unhandled: return kExitUnhandled;
    case K::FuelExhausted: return kExitFuel;
  }
  return kExitUsage;
}

void print_outcome(const sled::core::Outcome &o, bool structured, bool verbose) {
  using K = sled::core::Outcome::Kind;
  if (structured) {
    json j;
    j["outcome"] = outcome_name(o);
    j["steps"] = o.steps;
    if (o.kind == K::Value) j["value"] = sled::print_nf(o.value, verbose);
    if (o.kind == K::ScopeError) {
      json vars = json::array();
      for (const auto &fp : o.diag.offending) vars.push_back("α" + std::to_string(fp.id));
      j["offending"] = vars;
      j["frame_depth"] = o.diag.frame_depth;
      j["mark"] = o.diag.mark ? json(*o.diag.mark) : json("top");
    }
    if (o.kind == K::Unhandled) j["op"] = o.op;
    std::cout << j.dump() << "\n";
    return;
  }
  switch (o.kind) {
    case K::Value:
      std::cout << sled::print_nf(o.value, verbose) << "\n";
      break;
    case K::ScopeError: {
      std::cout << "scope extrusion error";
      if (!o.diag.offending.empty()) {
        std::cout << ": offending";
        for (const auto &fp : o.diag.offending) std::cout << " α" << fp.id;
      }
      std::cout << " (frame depth " << o.diag.frame_depth << ", mark "
                << (o.diag.mark ? std::to_string(*o.diag.mark) : std::string("top")) << ", via "
                << (o.diag.was_check_m ? "check_M" : "check") << ")\n";
      break;
    }
    case K::Unhandled:
      std::cout << "unhandled effect: " << o.op << "\n";
      break;
    case K::FuelExhausted:
      std::cout << "fuel exhausted after " << o.steps << " steps\n";
      break;
  }
}

char verdict(const sled::core::Outcome &o) {
  return sled::outcome_accepts(o) ? 'Y' : 'N';
}

struct MatrixLine {
  std::string name;
  char lazy, eager, c4c, classifiers;
};

int matrix_for_files(const std::vector<std::string> &files, std::uint64_t fuel,
                     std::vector<MatrixLine> &lines) {
  for (const auto &f : files) {
    Loaded l;
    int rc = load_program(f, l);
    if (rc != kExitOk) return rc;
    auto oc = sled::compare_checks(l.checked.program, fuel);
    std::string name = f;
    if (auto pos = name.find_last_of('/'); pos != std::string::npos) name = name.substr(pos + 1);
    if (auto pos = name.rfind(".sl"); pos != std::string::npos) name = name.substr(0, pos);
    lines.push_back({name, verdict(oc.lazy), verdict(oc.eager), verdict(oc.c4c),
                     oc.classifier_accepted ? 'Y' : 'N'});
  }
  return kExitOk;
}

void print_matrix(const std::vector<MatrixLine> &lines, bool structured) {
  if (structured) {
    for (const auto &l : lines) {
      for (auto [check, v] : std::vector<std::pair<std::string, char>>{
               {"lazy", l.lazy}, {"eager", l.eager}, {"c4c", l.c4c}, {"classifiers", l.classifiers}}) {
        json j;
        j["listing"] = l.name;
        j["check"] = check;
        j["outcome"] = std::string(1, v);
        std::cout << j.dump() << "\n";
      }
    }
    return;
  }
  std::size_t width = 8;
  for (const auto &l : lines) width = std::max(width, l.name.size());
  auto pad = [&](const std::string &s) {
    std::cout << s << std::string(width + 2 - s.size(), ' ');
  };
  pad("listing");
  std::cout << "lazy eager c4c classifiers\n";
  for (const auto &l : lines) {
    pad(l.name);
    std::cout << l.lazy << "    " << l.eager << "     " << l.c4c << "   " << l.classifiers << "\n";
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"staged effect-handler calculus with scope extrusion checks"};
  app.require_subcommand(1);

  std::string kind = "naive";
  std::string static_check;
  std::string format = "text";
  std::uint64_t fuel = sled::core::kDefaultFuel;
  bool trace = false;
  bool verbose = false;
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  int size = 12;
  std::string listings_dir = SLED_LISTINGS_DIR;

  auto add_common = [&](CLI::App *cmd, bool many_inputs) {
    cmd->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));
    if (many_inputs)
      cmd->add_option("files", inputs)->required();
    return cmd;
  };

  auto *tc = app.add_subcommand("typecheck", "type check a program");
  add_common(tc, true);
  tc->add_option("--static", static_check)->check(CLI::IsMember({"classifiers"}));

  auto *el = app.add_subcommand("elaborate", "elaborate a program to the core language");
  add_common(el, true);
  el->add_option("--kind", kind)->check(CLI::IsMember({"naive", "lazy", "eager", "c4c"}));

  auto *rn = app.add_subcommand("run", "elaborate and execute one program");
  add_common(rn, true);
  rn->add_option("--kind", kind)->check(CLI::IsMember({"naive", "lazy", "eager", "c4c"}));
  rn->add_option("--fuel", fuel);
  rn->add_flag("--trace", trace);
  rn->add_flag("--verbose", verbose);

  auto *mx = app.add_subcommand("matrix", "run every check over the given programs");
  add_common(mx, true);
  mx->add_option("--fuel", fuel);

  auto *cp = app.add_subcommand("corpus", "run the bundled corpus against the golden grid");
  cp->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));
  cp->add_option("--dir", listings_dir);
  cp->add_option("--fuel", fuel);

  auto *gn = app.add_subcommand("gen", "generate a random well-typed program");
  gn->add_option("--seed", seed);
  gn->add_option("--size", size);
  gn->add_option("--format", format)->check(CLI::IsMember({"text", "structured"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (tc->parsed()) {
      for (const auto &f : inputs) {
        Loaded l;
        int rc = load_program(f, l);
        if (rc != kExitOk) return rc;
        if (static_check == "classifiers") {
          auto cr = sled::src::check_classifiers(l.checked.program);
          if (!cr.ok) {
            std::cerr << sled::format_diagnostics(cr.diagnostics);
            return kExitStaticError;
          }
        }
        if (format == "structured") {
          json j;
          j["file"] = f;
          j["type"] = sled::print_type(l.checked.type);
          std::cout << j.dump() << "\n";
        } else {
          std::cout << f << ": " << sled::print_type(l.checked.type) << " ! {};{}\n";
        }
      }
      return kExitOk;
    }

    if (el->parsed()) {
      for (const auto &f : inputs) {
        Loaded l;
        int rc = load_program(f, l);
        if (rc != kExitOk) return rc;
        auto t = sled::elaborate(l.checked.program, parse_kind(kind));
        if (format == "structured")
          std::cout << sled::structured_core(t) << "\n";
        else
          std::cout << sled::print_core(t) << "\n";
      }
      return kExitOk;
    }

    if (rn->parsed()) {
      if (inputs.size() != 1) {
        std::cerr << "error: run takes exactly one input file\n";
        return kExitUsage;
      }
      Loaded l;
      int rc = load_program(inputs[0], l);
      if (rc != kExitOk) return rc;
      auto t = sled::elaborate(l.checked.program, parse_kind(kind));
      auto res = sled::core::run(t, fuel, trace);
      if (trace)
        for (const auto &rec : res.trace) std::cout << sled::core::trace_line(rec) << "\n";
      print_outcome(res.outcome, format == "structured", verbose);
      return outcome_exit(res.outcome);
    }

    if (mx->parsed()) {
      std::vector<MatrixLine> lines;
      int rc = matrix_for_files(inputs, fuel, lines);
      if (rc != kExitOk) return rc;
      print_matrix(lines, format == "structured");
      return kExitOk;
    }

    if (cp->parsed()) {
      const std::vector<std::string> corpus = {
          "discarded", "safe_resume", "eager_false_positive", "c4c_false_positive",
          "classifier_safe", "staged_identity", "accumulator"};
      std::vector<std::string> files;
      for (const auto &n : corpus) files.push_back(listings_dir + "/" + n + ".sl");
      std::vector<MatrixLine> lines;
      int rc = matrix_for_files(files, fuel, lines);
      if (rc != kExitOk) return rc;
      print_matrix(lines, format == "structured");
      std::ifstream golden(listings_dir + "/golden_matrix.txt");
      if (!golden) {
        std::cerr << "error: missing golden grid at " << listings_dir << "/golden_matrix.txt\n";
        return kExitUsage;
      }
      bool all_ok = true;
      std::string name, a, b, c, d;
      std::size_t i = 0;
      while (golden >> name >> a >> b >> c >> d) {
        if (i >= lines.size()) break;
        const auto &l = lines[i++];
        std::string got = std::string(1, l.lazy) + b.substr(1, 0);
        if (name != l.name || a[0] != l.lazy || b[0] != l.eager || c[0] != l.c4c ||
            d[0] != l.classifiers) {
          all_ok = false;
          std::cout << "MISMATCH " << name << ": expected " << a << " " << b << " " << c << " "
                    << d << ", got " << l.lazy << " " << l.eager << " " << l.c4c << " "
                    << l.classifiers << "\n";
        }
      }
      if (i != lines.size()) all_ok = false;
      std::cout << (all_ok ? "corpus grid matches golden\n" : "corpus grid DIFFERS from golden\n");
      return all_ok ? kExitOk : 1;
    }

    if (gn->parsed()) {
      auto p = sled::gen_program(seed, size);
      if (format == "structured")
        std::cout << sled::structured_program(p) << "\n";
      else
        std::cout << sled::print_source(p);
      return kExitOk;
    }
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 70;
  }
  return kExitUsage;
}
