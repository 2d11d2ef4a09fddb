// Command-line front end. Parses flags (plus an optional JSON config
// file; flags override file values), builds a JSON configuration, and
// hands it to the shared-library C interface.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "stabfem.h"

using nlohmann::json;

namespace {

struct FlagSet {
  std::string config_path;
  std::string problem, mesh, stab, vstab, case_id, out_path, levels;
  double mu = 0.0, delta0_p = 0.0, delta0_v = 0.0;
  int n = 0, k = 0, samples = 0;
  std::uint64_t seed = 0;
  bool no_timestamp = false;
};

void add_common_flags(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.config_path, "JSON config file (flags override it)");
  app->add_option("--problem", f.problem, "stokes|gstokes|oseen|nse");
  app->add_option("--mu", f.mu, "viscosity (> 0)");
  app->add_option("--n", f.n, "unit-square subdivisions");
  app->add_option("--mesh", f.mesh, "mesh file path (exclusive with --n)");
  app->add_option("--k", f.k, "polynomial degree, 1 or 2");
  app->add_option("--stab", f.stab, "pressure stabilization: none|bp|bh|lps");
  app->add_option("--vstab", f.vstab, "velocity stabilization: none|lps|supg");
  app->add_option("--delta0-p", f.delta0_p, "pressure stabilization weight");
  app->add_option("--delta0-v", f.delta0_v, "velocity stabilization weight");
  app->add_option("--case", f.case_id, "manufactured case id or 'cavity'");
  app->add_option("--levels", f.levels, "comma-separated mesh levels");
  app->add_option("--samples", f.samples, "random sample count");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--out", f.out_path, "output file (default stdout)");
  app->add_flag("--no-timestamp", f.no_timestamp, "omit timestamps from reports");
}

int build_config(const CLI::App* app, const FlagSet& f, json& cfg, std::string& out_path) {
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      std::cerr << "error: cannot open config file '" << f.config_path << "'\n";
      return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      cfg = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      std::cerr << "error: config file: " << e.what() << '\n';
      return 2;
    }
    if (!cfg.is_object()) {
      std::cerr << "error: config file must hold a JSON object\n";
      return 2;
    }
  }
  if (cfg.contains("out")) {
    out_path = cfg["out"].get<std::string>();
    cfg.erase("out");
  }

  auto set = [&](const char* flag, const char* key, const json& v) {
    if (app->count(flag)) cfg[key] = v;
  };
  set("--problem", "problem", f.problem);
  set("--mu", "mu", f.mu);
  set("--n", "n", f.n);
  set("--mesh", "mesh", f.mesh);
  set("--k", "k", f.k);
  set("--stab", "stab", f.stab);
  set("--vstab", "vstab", f.vstab);
  set("--delta0-p", "delta0_p", f.delta0_p);
  set("--delta0-v", "delta0_v", f.delta0_v);
  set("--case", "case", f.case_id);
  set("--samples", "samples", f.samples);
  set("--seed", "seed", f.seed);
  if (app->count("--no-timestamp")) cfg["no_timestamp"] = true;
  if (app->count("--out")) out_path = f.out_path;
  if (app->count("--levels")) {
    std::vector<int> levels;
    std::stringstream ss(f.levels);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        levels.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        std::cerr << "error: --levels expects comma-separated integers\n";
        return 2;
      }
    }
    cfg["levels"] = levels;
  }
  return 0;
}

int run_subcommand(const std::string& name, const CLI::App* app, const FlagSet& f) {
  json cfg = json::object();
  std::string out_path;
  if (int rc = build_config(app, f, cfg, out_path); rc != 0) return rc;

  char* report = nullptr;
  stabfem_status st = stabfem_run(name.c_str(), cfg.dump().c_str(), &report);
  if (st == STABFEM_BAD_CONFIG || st == STABFEM_SOLVER_ERROR || st == STABFEM_INTERNAL_ERROR) {
    std::cerr << "error: " << stabfem_last_error() << '\n';
    stabfem_string_free(report);
    return 2;
  }
  if (report) {
    if (out_path.empty()) {
      std::cout << report;
    } else {
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << "error: cannot open output file '" << out_path << "'\n";
        stabfem_string_free(report);
        return 2;
      }
      out << report;
    }
    stabfem_string_free(report);
  }
  return st == STABFEM_OK ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized equal-order finite elements for incompressible flow"};
  app.require_subcommand(1);

  const char* names[] = {"solve", "infsup", "coercivity", "signcheck", "convergence", "check"};
  const char* descs[] = {"solve one problem and report the iteration log",
                         "estimate the stabilized inf-sup constant",
                         "verify the linear mapped coercivity bound",
                         "verify the nonlinear sign condition on sampled spheres",
                         "run a mesh-refinement error study (CSV)",
                         "run the full property suite"};
  std::vector<FlagSet> flags(6);
  std::vector<CLI::App*> subs(6);
  for (int i = 0; i < 6; ++i) {
    subs[i] = app.add_subcommand(names[i], descs[i]);
    add_common_flags(subs[i], flags[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 6; ++i)
    if (subs[i]->parsed()) return run_subcommand(names[i], subs[i], flags[i]);
  return 2;
}
