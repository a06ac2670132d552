#include "mflab/admissibility.hpp"
#include "mflab/config.hpp"
#include "mflab/energy.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/harness.hpp"
#include "mflab/io.hpp"
#include "mflab/pde.hpp"
#include "mflab/sde.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mflab;

namespace {

enum Exit { kPass = 0, kFail = 1, kInconclusive = 2, kError = 3 };

struct Run {
  std::string command;
  Config cfg;
  Provenance prov;
  fs::path dir;
  int threads = 1;
  std::vector<std::pair<std::string, Verdict>> criteria;

  void criterion(const std::string& name, Verdict v, const std::string& detail) {
    criteria.emplace_back(name, v);
    std::printf("[%s] %s: %s\n", to_string(v), name.c_str(), detail.c_str());
  }
  void criterion(const std::string& name, bool ok, const std::string& detail) {
    criterion(name, ok ? Verdict::Pass : Verdict::Fail, detail);
  }

  int exit_code() const {
    bool inconclusive = false;
    for (const auto& [name, v] : criteria) {
      if (v == Verdict::Fail) return kFail;
      inconclusive = inconclusive || v == Verdict::Inconclusive;
    }
    return inconclusive ? kInconclusive : kPass;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int simulate_sde(Run& r) {
  const auto spec = r.cfg.spec();
  const auto M = r.cfg.flow();
  const auto law = make_initial_law(r.cfg.initial);
  const auto st = ensemble(sde_config(r.cfg), law, spec, M, r.cfg.sde.runs, SeedPlan{r.cfg.seed, 1}, r.threads,
                           /*store_positions=*/true);
  std::string cols = "run,t,particle";
  for (int a = 1; a <= spec.d; ++a) cols += ",x" + std::to_string(a);
  CsvWriter pos(r.prov, cols);
  for (std::size_t k = 0; k < st.records.size(); ++k)
    for (const auto& s : st.records[k].snapshots)
      for (std::size_t i = 0; i < st.records[k].N; ++i) {
        std::ostringstream line;
        line.precision(17);
        line << k << ',' << s.t << ',' << i;
        for (int a = 0; a < spec.d; ++a) line << ',' << s.positions[i * spec.d + a];
        pos.raw_row(line.str());
      }
  pos.save(r.dir / "positions.csv");
  CsvWriter traj(r.prov, "run,seed,t,I_N,H_N,min_dist");
  for (std::size_t k = 0; k < st.records.size(); ++k)
    for (const auto& s : st.records[k].snapshots)
      traj.row(k, st.records[k].seed, s.t, s.diag.I_N, s.diag.H_N, s.diag.min_dist);
  traj.save(r.dir / "trajectories.csv");
  CsvWriter ev(r.prov, "run,step,t,eps_old,eps_new,min_dist");
  for (std::size_t k = 0; k < st.records.size(); ++k)
    for (const auto& e : st.records[k].events) ev.row(k, e.step, e.t, e.eps_old, e.eps_new, e.min_dist);
  ev.save(r.dir / "truncation_events.csv");
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : st.snapshots)
    snaps.push_back({{"t", s.t}, {"I_N", to_json(s.I_N)}, {"H_N", to_json(s.H_N)}, {"min_dist", to_json(s.min_dist)}});
  write_json(r.dir / "summary.json",
             {{"runs_requested", st.runs_requested}, {"runs_ok", st.runs_ok}, {"failures", st.failures},
              {"failure_messages", st.failure_messages}, {"snapshots", snaps},
              {"min_dist_log10_histogram", {{"edges", st.histogram_edges}, {"counts", st.histogram_counts}}},
              {"collision_deltas", st.collision_deltas}, {"collision_fractions", st.collision_fractions},
              {"truncation_activation_fraction", st.truncation_activation_fraction}},
             r.prov);
  r.criterion("runs completed", st.failures == 0,
              std::to_string(st.runs_ok) + "/" + std::to_string(st.runs_requested) + " runs ok");
  if (st.runs_ok > 0) {
    bool mono = true;
    for (std::size_t k = 1; k < st.collision_fractions.size(); ++k)
      mono = mono && st.collision_fractions[k] <= st.collision_fractions[k - 1];
    r.criterion("collision fractions nonincreasing in delta", mono,
                "fraction(min_dist<1e-4) = " + fmt("%.4f", st.collision_fractions.back()));
  }
  return r.exit_code();
}

int solve_pde(Run& r) {
  const auto spec = r.cfg.spec();
  auto pc = pde_config(r.cfg);
  const auto mu0 = make_initial_law(r.cfg.initial).on_grid(r.cfg.geometry());
  const auto series = solve(mu0, pc, spec, r.cfg.flow());
  write_density_series(series, r.dir, r.prov);
  CsvWriter steps(r.prov, "step,t,mass,l1,l1_5,l2,l4,linf,min");
  for (std::size_t k = 0; k < series.steps.size(); ++k) {
    const auto& d = series.steps[k];
    steps.row(k, d.t, d.mass, d.l1, d.l1_5, d.l2, d.l4, d.linf, d.min_value);
  }
  steps.save(r.dir / "steps.csv");
  const auto cons = conservation_check(series);
  r.criterion("mass conservation", cons.max_mass_drift <= 1e-10, "relative drift " + fmt("%.3e", cons.max_mass_drift));
  double worst = 0.0;
  for (double v : cons.max_step_increase) worst = std::max(worst, v);
  r.criterion("Lp norms nonincreasing per step", worst <= 1e-6, "largest relative step increase " + fmt("%.3e", worst));
  return r.exit_code();
}

int modulated_energy_cmd(Run& r) {
  const auto spec = r.cfg.spec();
  const auto law = make_initial_law(r.cfg.initial);
  const auto ps = init_particles(law, r.cfg.sde.N, r.cfg.seed, spec.d, r.cfg.sde.eps0);
  const auto mu = law.on_grid(r.cfg.geometry());
  const MeanFieldData data(mu, spec, r.cfg.mode());
  EnergyOptions opt;
  opt.eta = r.cfg.energy.eta;
  opt.sobolev = r.cfg.energy.sobolev;
  const auto rep = modulated_energy(ps, data, opt);
  const double lap = laplacian_interaction(ps, data);
  auto j = to_json(rep);
  j["laplacian_interaction"] = lap;
  write_json(r.dir / "modulated_energy.json", j, r.prov);
  CsvWriter csv(r.prov, energy_csv_header());
  csv.raw_row(energy_csv_row(rep));
  csv.save(r.dir / "modulated_energy.csv");
  r.criterion("component additivity", rep.F_N == rep.particle_particle + rep.cross + rep.mu_mu,
              "F_N = " + fmt("%.10g", rep.F_N));
  if (rep.sobolev_computed)
    r.criterion("sobolev surrogate nonnegative", rep.sobolev_surrogate >= 0.0, fmt("%.6g", rep.sobolev_surrogate));
  return r.exit_code();
}

int converge(Run& r) {
  const auto plan = experiment_plan(r.cfg, r.threads);
  const auto rep = convergence_study(plan);
  write_json(r.dir / "rate_report.json", to_json(rep), r.prov);
  CsvWriter csv(r.prov, "N,t,runs_ok,E_F,se_F,E_absF,se_absF");
  for (const auto& row : rep.rows)
    for (const auto& e : row.profile) csv.row(row.N, e.t, row.runs_ok, e.F.mean, e.F.se, e.absF.mean, e.absF.se);
  csv.save(r.dir / "rate_profile.csv");
  std::size_t failures = 0;
  for (const auto& row : rep.rows) failures += row.failures;
  if (failures) std::printf("note: %zu failed runs excluded\n", failures);
  if (plan.dt_gate)
    r.criterion("dt gate (halving dt moves E|F_N^T| by < 1 SE)", rep.gate.pass ? Verdict::Pass : Verdict::Inconclusive,
                "change " + fmt("%.3e", rep.gate.change) + " vs SE " + fmt("%.3e", rep.gate.abs_half.se));
  r.criterion("fitted rate beta > " + fmt("%g", rep.beta_floor) + " with R^2 >= " + fmt("%g", rep.r2_floor), rep.verdict,
              "beta = " + fmt("%.4f", rep.beta_hat) + ", R^2 = " + fmt("%.4f", rep.fit.r2));
  return r.exit_code();
}

int decay(Run& r) {
  auto plan = experiment_plan(r.cfg, r.threads);
  plan.T = r.cfg.pde.T;
  plan.pde_dt = r.cfg.pde.dt;
  plan.snapshot_times = r.cfg.pde.snapshot_times;
  plan.check_times.clear();
  if (plan.snapshot_times.empty())
    for (int k = 1; k <= 20; ++k) plan.snapshot_times.push_back(plan.T * k / 20.0);
  std::vector<DecayCase> cases;
  for (const auto& name : r.cfg.decay.cases) {
    const int d = r.cfg.d;
    cases.push_back({name, name == "zero" ? FlowMatrix::zero(d)
                                          : (name == "gradient" ? FlowMatrix::gradient(d) : FlowMatrix::conservative(d))});
  }
  const auto rep = decay_study(plan, cases, r.cfg.decay.pairs, r.cfg.decay.threshold);
  write_json(r.dir / "decay_report.json", to_json(rep), r.prov);
  CsvWriter csv(r.prov, "case,p,q,t,norm_q,bound,ratio");
  for (std::size_t i = 0; i < rep.cases.size(); ++i)
    for (const auto& b : rep.bounds[i])
      for (const auto& e : b.entries) csv.row(rep.cases[i], b.p, b.q, e.t, e.norm_q, e.bound, e.ratio);
  csv.save(r.dir / "decay_ratios.csv");
  r.criterion("decay ratios <= " + fmt("%g", rep.threshold), rep.pass, "max ratio " + fmt("%.6f", rep.max_ratio));
  return r.exit_code();
}

int ito_balance(Run& r) {
  const auto plan = experiment_plan(r.cfg, r.threads);
  const auto rep = ito_balance_study(plan);
  write_json(r.dir / "ito_balance.json", to_json(rep), r.prov);
  CsvWriter csv(r.prov, "t,lhs,se_lhs,rhs,se_rhs,diff,se_diff,margin_se");
  for (const auto& x : rep.rows)
    csv.row(x.t, x.lhs.mean, x.lhs.se, x.rhs.mean, x.rhs.se, x.diff.mean, x.diff.se, x.margin_se);
  csv.save(r.dir / "ito_balance.csv");
  for (const auto& x : rep.rows)
    r.criterion("Ito balance at t=" + fmt("%g", x.t) + " (LHS <= RHS + 3 SE)", x.pass,
                "margin " + fmt("%.2f", x.margin_se) + " SE");
  if (rep.rows.empty()) r.criterion("Ito balance", false, "fewer than two successful runs");
  return r.exit_code();
}

int check_assumptions(Run& r) {
  const auto spec = r.cfg.spec();
  const auto sample = dyadic_sample(spec.d, r.cfg.assumptions.samples, r.cfg.seed);
  const auto rep = check_admissible(spec, r.cfg.flow(), sample, r.cfg.assumptions.r0);
  write_json(r.dir / "assumptions.json", {{"entries", to_json(rep)}, {"all_pass", rep.all_pass()}}, r.prov);
  for (const auto& e : rep.entries)
    r.criterion(e.assumption, e.pass, "fitted constant " + fmt("%.4g", e.fitted_constant));
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field particle/PDE laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int threads = 0;
  const std::vector<std::string> names{"simulate-sde", "solve-pde",  "modulated-energy", "converge",
                                       "decay",        "ito-balance", "check-assumptions"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file (empty file means defaults)");
    sub->add_option("--seed", seed, "base seed override");
    sub->add_option("--out", out, "output root; each run writes to a run-scoped subdirectory");
    sub->add_option("--threads", threads, "worker threads (default: THREADS or all cores)")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kError;
  }
  Run r;
  r.command = app.get_subcommands().front()->get_name();
  try {
    r.cfg = config_path.empty() ? parse_config(nlohmann::json::object()) : parse_config_file(config_path);
    if (seed) r.cfg.seed = *seed;
    r.threads = threads > 0 ? threads : default_threads();
    r.prov = {config_hash(r.cfg), r.cfg.seed};
    r.dir = fs::path(out) / (r.command + "-" + r.prov.config_hash + "-seed" + std::to_string(r.cfg.seed));
    fs::create_directories(r.dir);
    write_json(r.dir / "config.json", echo(r.cfg), r.prov);
    int code = kError;
    if (r.command == "simulate-sde") code = simulate_sde(r);
    else if (r.command == "solve-pde") code = solve_pde(r);
    else if (r.command == "modulated-energy") code = modulated_energy_cmd(r);
    else if (r.command == "converge") code = converge(r);
    else if (r.command == "decay") code = decay(r);
    else if (r.command == "ito-balance") code = ito_balance(r);
    else if (r.command == "check-assumptions") code = check_assumptions(r);
    std::printf("%s: %s (output %s)\n", r.command.c_str(),
                code == kPass ? "pass" : (code == kFail ? "fail" : "inconclusive"), r.dir.string().c_str());
    return code;
  } catch (const std::exception& e) {
    const nlohmann::json err{{"error",
                              {{"subcommand", r.command},
                               {"type", dynamic_cast<const ConfigError*>(&e) ? "config" : "runtime"},
                               {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    if (!r.dir.empty()) {
      try {
        write_text(r.dir / "error.json", err.dump(2) + "\n");
      } catch (...) {
      }
    }
    return kError;
  }
}
