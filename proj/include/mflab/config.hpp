#pragma once

#include "mflab/convolution.hpp"
#include "mflab/flow_matrix.hpp"
#include "mflab/harness.hpp"
#include "mflab/initial_law.hpp"
#include "mflab/io.hpp"
#include "mflab/pde.hpp"
#include "mflab/potentials.hpp"
#include "mflab/sde.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mflab {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Config {
  int d = 3;
  std::string kernel = "riesz";  // riesz | log
  double s = 0.5;
  double sigma = 1.0;
  std::vector<std::vector<double>> M;  // resolved rows; default -I
  int n = 64;
  double L = 16.0;
  std::string kernel_mode = "free_space";  // free_space | periodic
  nlohmann::json initial;                  // canonical initial-law object
  std::uint64_t seed = 1;

  struct Sde {
    std::size_t N = 64;
    double dt = 1e-3;
    double T = 1.0;
    double eps0 = 1e-3;
    std::string eps_policy = "halve";  // halve | fixed
    std::vector<double> snapshot_times;
    std::size_t runs = 1;
  } sde;

  struct Pde {
    double dt = 0.0;  // resolved from the CFL limit when absent
    double T = 1.0;
    double dealias = 2.0 / 3.0;
    double cfl = 0.5;
    std::vector<double> snapshot_times;
  } pde;

  struct Study {
    std::vector<std::size_t> N_values{32, 64, 128, 256};
    std::size_t runs = 100;
    std::uint64_t seed_stride = 1;
    double T = 1.0;
    double sde_dt = 0.005;
    double pde_dt = 0.05;
    std::vector<double> snapshot_times;
    bool dt_gate = true;
    std::size_t gate_runs = 30;
    double fit_time = -1.0;
    std::size_t fit_min_N = 0;
    std::vector<double> check_times{0.25, 0.5, 1.0};  // {T/4, T/2, T} unless given
    double quadrature_dt = 0.05;
    std::size_t ito_N = 128;
  } study;

  struct Energy {
    std::optional<double> eta;
    bool sobolev = true;
  } energy;

  struct Decay {
    std::vector<std::string> cases{"zero", "gradient", "conservative"};
    std::vector<std::pair<double, double>> pairs{{1.0, INFINITY}, {1.0, 2.0}, {2.0, INFINITY}};
    double threshold = 1.02;
  } decay;

  struct Assumptions {
    int samples = 2000;
    double r0 = 0.5;
  } assumptions;

  PotentialSpec spec() const { return kernel == "log" ? PotentialSpec::log(d) : PotentialSpec::riesz(s, d); }
  FlowMatrix flow() const { return FlowMatrix::from_rows(M); }
  GridGeometry geometry() const { return {n, L}; }
  KernelMode mode() const { return kernel_mode == "periodic" ? KernelMode::Periodic : KernelMode::FreeSpace; }
};

namespace detail {

class JsonReader {
 public:
  static void keys(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError("config: unknown key '" + join(path, it.key()) + "'");
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

  template <class Pred>
  static double number(const nlohmann::json& j, const std::string& path, const char* key, double def, Pred ok,
                       const char* constraint) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError("config: '" + join(path, key) + "' must be a number");
    const double x = v.get<double>();
    if (!ok(x)) throw ConfigError("config: '" + join(path, key) + "' violates " + constraint);
    return x;
  }

  static std::uint64_t integer(const nlohmann::json& j, const std::string& path, const char* key, std::uint64_t def,
                               std::uint64_t lo, const char* constraint) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("config: '" + join(path, key) + "' must be a nonnegative integer");
    const auto x = v.get<std::uint64_t>();
    if (x < lo) throw ConfigError("config: '" + join(path, key) + "' violates " + constraint);
    return x;
  }

  static bool boolean(const nlohmann::json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) throw ConfigError("config: '" + join(path, key) + "' must be a boolean");
    return j.at(key).get<bool>();
  }

  static std::string choice(const nlohmann::json& j, const std::string& path, const char* key, const std::string& def,
                            std::initializer_list<const char*> options) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) throw ConfigError("config: '" + join(path, key) + "' must be a string");
    const auto v = j.at(key).get<std::string>();
    for (const char* o : options)
      if (v == o) return v;
    std::string list;
    for (const char* o : options) list += std::string(list.empty() ? "" : "|") + o;
    throw ConfigError("config: '" + join(path, key) + "' must be one of " + list);
  }

  static std::vector<double> times(const nlohmann::json& j, const std::string& path, const char* key,
                                   std::vector<double> def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError("config: '" + join(path, key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number() || x.get<double>() < 0.0)
        throw ConfigError("config: '" + join(path, key) + "' entries must be numbers >= 0");
      out.push_back(x.get<double>());
    }
    return out;
  }
};

inline double norm_exponent(const nlohmann::json& x, const std::string& where) {
  if (x.is_string() && x.get<std::string>() == "inf") return INFINITY;
  if (x.is_number() && x.get<double>() >= 1.0) return x.get<double>();
  throw ConfigError("config: '" + where + "' entries must be numbers >= 1 or \"inf\"");
}

inline nlohmann::json norm_json(double p) { return std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p); }

inline nlohmann::json parse_initial(const nlohmann::json& j, int d) {
  using R = JsonReader;
  const std::string path = "initial";
  if (!j.is_object()) throw ConfigError("config: 'initial' must be an object");
  const auto kind = R::choice(j, path, "kind", "gaussian", {"gaussian", "mixture", "ball"});
  auto vec = [&](const nlohmann::json& o, const std::string& p) {
    std::vector<double> m;
    if (!o.contains("mean")) return std::vector<double>(d, 0.0);
    if (!o.at("mean").is_array() || o.at("mean").size() != static_cast<std::size_t>(d))
      throw ConfigError("config: '" + p + ".mean' must be an array of length d");
    for (const auto& x : o.at("mean")) {
      if (!x.is_number()) throw ConfigError("config: '" + p + ".mean' entries must be numbers");
      m.push_back(x.get<double>());
    }
    return m;
  };
  auto positive = [](double x) { return x > 0.0; };
  if (kind == "gaussian") {
    R::keys(j, path, {"kind", "variance", "mean"});
    return {{"kind", kind}, {"variance", R::number(j, path, "variance", 1.0, positive, "variance > 0")},
            {"mean", vec(j, path)}};
  }
  if (kind == "ball") {
    R::keys(j, path, {"kind", "radius"});
    return {{"kind", kind}, {"radius", R::number(j, path, "radius", 1.0, positive, "radius > 0")}};
  }
  R::keys(j, path, {"kind", "components"});
  if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty())
    throw ConfigError("config: 'initial.components' must be a nonempty array");
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t i = 0; i < j.at("components").size(); ++i) {
    const auto& c = j.at("components")[i];
    const std::string p = path + ".components[" + std::to_string(i) + "]";
    R::keys(c, p, {"weight", "variance", "mean"});
    comps.push_back({{"weight", R::number(c, p, "weight", 1.0, [](double x) { return x >= 0.0; }, "weight >= 0")},
                     {"variance", R::number(c, p, "variance", 1.0, positive, "variance > 0")},
                     {"mean", vec(c, p)}});
  }
  return {{"kind", kind}, {"components", comps}};
}

}  // namespace detail

inline InitialLaw make_initial_law(const nlohmann::json& init) {
  const auto kind = init.at("kind").get<std::string>();
  if (kind == "gaussian") return InitialLaw::gaussian(init.at("variance"), init.at("mean").get<std::vector<double>>());
  if (kind == "ball") return InitialLaw::uniform_ball(init.at("radius"));
  std::vector<GaussianComponent> comps;
  for (const auto& c : init.at("components"))
    comps.push_back({c.at("weight").get<double>(), c.at("mean").get<std::vector<double>>(), c.at("variance").get<double>()});
  return InitialLaw::mixture(std::move(comps));
}

// Largest PDE step allowed by half the CFL limit at t = 0, capped at min(0.05, T/10).
inline double cfl_time_step(const Config& c) {
  double dt = std::min(0.05, c.pde.T > 0.0 ? c.pde.T / 10.0 : 0.05);
  const auto M = c.flow();
  if (M.is_zero() || c.d != 3) return dt;
  PdeConfig pc;
  pc.kernel = c.mode();
  const PdeSolver solver(c.geometry(), c.spec(), M, pc);
  const double umax = PdeSolver::max_speed(solver.velocity(make_initial_law(c.initial).on_grid(c.geometry()).values));
  if (umax > 0.0) dt = std::min(dt, 0.5 * c.pde.cfl * c.L / (c.n * umax));
  return dt;
}

inline Config parse_config(const nlohmann::json& j) {
  using R = detail::JsonReader;
  R::keys(j, "", {"d", "kernel", "s", "sigma", "M", "grid", "kernel_mode", "initial", "seed", "sde", "pde", "study",
                  "energy", "decay", "assumptions"});
  Config c;
  c.d = static_cast<int>(R::integer(j, "", "d", 3, 3, "d >= 3"));
  c.kernel = R::choice(j, "", "kernel", "riesz", {"riesz", "log"});
  c.s = R::number(j, "", "s", c.kernel == "log" ? 0.0 : 0.5, [](double x) { return std::isfinite(x); }, "finite s");
  if (c.kernel == "log") c.s = 0.0;
  try {
    c.spec().validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: 's' rejected: ") + e.what());
  }
  c.sigma = R::number(j, "", "sigma", 1.0, [](double x) { return x >= 0.0; }, "sigma >= 0");
  if (!j.contains("M") || (j.at("M").is_string() && j.at("M").get<std::string>() == "gradient")) {
    c.M = FlowMatrix::gradient(c.d).rows();
  } else if (j.at("M").is_string()) {
    const auto m = j.at("M").get<std::string>();
    if (m == "zero")
      c.M = FlowMatrix::zero(c.d).rows();
    else if (m == "conservative")
      c.M = FlowMatrix::conservative(c.d).rows();
    else
      throw ConfigError("config: 'M' must be a d x d array or one of gradient|zero|conservative");
  } else {
    try {
      c.M = j.at("M").get<std::vector<std::vector<double>>>();
    } catch (const std::exception&) {
      throw ConfigError("config: 'M' must be a d x d array of numbers");
    }
    if (c.M.size() != static_cast<std::size_t>(c.d)) throw ConfigError("config: 'M' must be d x d");
  }
  try {
    c.flow().validate();
    if (c.flow().dim() != c.d) throw std::invalid_argument("dimension mismatch");
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: 'M' rejected: ") + e.what());
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    R::keys(g, "grid", {"n", "L"});
    c.n = static_cast<int>(R::integer(g, "grid", "n", 64, 4, "n >= 4"));
    c.L = R::number(g, "grid", "L", 16.0, [](double x) { return x > 0.0; }, "L > 0");
  }
  try {
    c.geometry().validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: 'grid' rejected: ") + e.what());
  }
  c.kernel_mode = R::choice(j, "", "kernel_mode", "free_space", {"free_space", "periodic"});
  c.initial = detail::parse_initial(j.contains("initial") ? j.at("initial") : nlohmann::json::object(), c.d);
  c.seed = R::integer(j, "", "seed", 1, 0, "seed >= 0");

  auto pos = [](double x) { return x > 0.0; };
  auto nonneg = [](double x) { return x >= 0.0; };
  if (j.contains("sde")) {
    const auto& o = j.at("sde");
    R::keys(o, "sde", {"N", "dt", "T", "eps0", "eps_policy", "snapshot_times", "runs"});
    c.sde.N = R::integer(o, "sde", "N", c.sde.N, 2, "N >= 2");
    c.sde.dt = R::number(o, "sde", "dt", c.sde.dt, pos, "dt > 0");
    c.sde.T = R::number(o, "sde", "T", c.sde.T, nonneg, "T >= 0");
    c.sde.eps0 = R::number(o, "sde", "eps0", c.sde.eps0, pos, "eps0 > 0");
    c.sde.eps_policy = R::choice(o, "sde", "eps_policy", c.sde.eps_policy, {"halve", "fixed"});
    c.sde.snapshot_times = R::times(o, "sde", "snapshot_times", {});
    c.sde.runs = R::integer(o, "sde", "runs", c.sde.runs, 1, "runs >= 1");
  }
  for (double t : c.sde.snapshot_times)
    if (t > c.sde.T) throw ConfigError("config: 'sde.snapshot_times' entries must be <= sde.T");
  bool pde_dt_given = false;
  if (j.contains("pde")) {
    const auto& o = j.at("pde");
    R::keys(o, "pde", {"dt", "T", "dealias", "cfl", "snapshot_times"});
    pde_dt_given = o.contains("dt");
    c.pde.dt = R::number(o, "pde", "dt", 0.0, pos, "dt > 0");
    c.pde.T = R::number(o, "pde", "T", c.pde.T, nonneg, "T >= 0");
    c.pde.dealias = R::number(o, "pde", "dealias", c.pde.dealias, [](double x) { return x > 0.0 && x <= 1.0; },
                              "0 < dealias <= 1");
    c.pde.cfl = R::number(o, "pde", "cfl", c.pde.cfl, pos, "cfl > 0");
    c.pde.snapshot_times = R::times(o, "pde", "snapshot_times", {});
  }
  for (double t : c.pde.snapshot_times)
    if (t > c.pde.T) throw ConfigError("config: 'pde.snapshot_times' entries must be <= pde.T");
  if (j.contains("study")) {
    const auto& o = j.at("study");
    R::keys(o, "study", {"N_values", "runs", "seed_stride", "T", "sde_dt", "pde_dt", "snapshot_times", "dt_gate",
                         "gate_runs", "fit_time", "fit_min_N", "check_times", "quadrature_dt", "ito_N"});
    if (o.contains("N_values")) {
      c.study.N_values.clear();
      if (!o.at("N_values").is_array() || o.at("N_values").empty())
        throw ConfigError("config: 'study.N_values' must be a nonempty array");
      for (const auto& x : o.at("N_values")) {
        if (!x.is_number_integer() || x.get<long long>() < 2)
          throw ConfigError("config: 'study.N_values' entries must be integers >= 2");
        c.study.N_values.push_back(x.get<std::size_t>());
      }
    }
    c.study.runs = R::integer(o, "study", "runs", c.study.runs, 1, "runs >= 1");
    c.study.seed_stride = R::integer(o, "study", "seed_stride", c.study.seed_stride, 0, "seed_stride >= 0");
    c.study.T = R::number(o, "study", "T", c.study.T, pos, "T > 0");
    c.study.sde_dt = R::number(o, "study", "sde_dt", c.study.sde_dt, pos, "sde_dt > 0");
    c.study.pde_dt = R::number(o, "study", "pde_dt", c.study.pde_dt, pos, "pde_dt > 0");
    c.study.snapshot_times = R::times(o, "study", "snapshot_times", {});
    c.study.dt_gate = R::boolean(o, "study", "dt_gate", c.study.dt_gate);
    c.study.gate_runs = R::integer(o, "study", "gate_runs", c.study.gate_runs, 2, "gate_runs >= 2");
    c.study.fit_time = R::number(o, "study", "fit_time", c.study.fit_time, [](double x) { return std::isfinite(x); },
                                 "finite fit_time");
    c.study.fit_min_N = R::integer(o, "study", "fit_min_N", c.study.fit_min_N, 0, "fit_min_N >= 0");
    c.study.check_times = R::times(o, "study", "check_times", {0.25 * c.study.T, 0.5 * c.study.T, c.study.T});
    c.study.quadrature_dt = R::number(o, "study", "quadrature_dt", c.study.quadrature_dt, pos, "quadrature_dt > 0");
    c.study.ito_N = R::integer(o, "study", "ito_N", c.study.ito_N, 2, "ito_N >= 2");
  }
  for (double t : c.study.snapshot_times)
    if (t > c.study.T) throw ConfigError("config: 'study.snapshot_times' entries must be <= study.T");
  for (double t : c.study.check_times)
    if (t > c.study.T) throw ConfigError("config: 'study.check_times' entries must be <= study.T");
  if (j.contains("energy")) {
    const auto& o = j.at("energy");
    R::keys(o, "energy", {"eta", "sobolev"});
    if (o.contains("eta") && !o.at("eta").is_null()) c.energy.eta = R::number(o, "energy", "eta", 0.0, pos, "eta > 0");
    c.energy.sobolev = R::boolean(o, "energy", "sobolev", c.energy.sobolev);
  }
  if (j.contains("decay")) {
    const auto& o = j.at("decay");
    R::keys(o, "decay", {"cases", "pairs", "threshold"});
    if (o.contains("cases")) {
      c.decay.cases.clear();
      if (!o.at("cases").is_array() || o.at("cases").empty())
        throw ConfigError("config: 'decay.cases' must be a nonempty array");
      for (const auto& x : o.at("cases")) {
        const auto v = x.is_string() ? x.get<std::string>() : std::string();
        if (v != "zero" && v != "gradient" && v != "conservative")
          throw ConfigError("config: 'decay.cases' entries must be zero|gradient|conservative");
        c.decay.cases.push_back(v);
      }
    }
    if (o.contains("pairs")) {
      c.decay.pairs.clear();
      if (!o.at("pairs").is_array() || o.at("pairs").empty())
        throw ConfigError("config: 'decay.pairs' must be a nonempty array of [p, q]");
      for (const auto& x : o.at("pairs")) {
        if (!x.is_array() || x.size() != 2) throw ConfigError("config: 'decay.pairs' entries must be [p, q]");
        const double p = detail::norm_exponent(x[0], "decay.pairs"), q = detail::norm_exponent(x[1], "decay.pairs");
        if (p > q) throw ConfigError("config: 'decay.pairs' requires p <= q");
        c.decay.pairs.emplace_back(p, q);
      }
    }
    c.decay.threshold = R::number(o, "decay", "threshold", c.decay.threshold, pos, "threshold > 0");
  }
  if (j.contains("assumptions")) {
    const auto& o = j.at("assumptions");
    R::keys(o, "assumptions", {"samples", "r0"});
    c.assumptions.samples = static_cast<int>(R::integer(o, "assumptions", "samples", 2000, 16, "samples >= 16"));
    c.assumptions.r0 = R::number(o, "assumptions", "r0", 0.5, pos, "r0 > 0");
  }
  try {
    make_initial_law(c.initial).validate(c.d);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: 'initial' rejected: ") + e.what());
  }
  c.pde.dt = pde_dt_given ? c.pde.dt : cfl_time_step(c);
  return c;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return parse_config(nlohmann::json::object());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

// Fully resolved configuration; parse_config(echo(c)) reproduces c.
inline nlohmann::json echo(const Config& c) {
  nlohmann::json pairs = nlohmann::json::array();
  for (auto [p, q] : c.decay.pairs) pairs.push_back({detail::norm_json(p), detail::norm_json(q)});
  return {{"d", c.d},
          {"kernel", c.kernel},
          {"s", c.s},
          {"sigma", c.sigma},
          {"M", c.M},
          {"grid", {{"n", c.n}, {"L", c.L}}},
          {"kernel_mode", c.kernel_mode},
          {"initial", c.initial},
          {"seed", c.seed},
          {"sde",
           {{"N", c.sde.N}, {"dt", c.sde.dt}, {"T", c.sde.T}, {"eps0", c.sde.eps0}, {"eps_policy", c.sde.eps_policy},
            {"snapshot_times", c.sde.snapshot_times}, {"runs", c.sde.runs}}},
          {"pde",
           {{"dt", c.pde.dt}, {"T", c.pde.T}, {"dealias", c.pde.dealias}, {"cfl", c.pde.cfl},
            {"snapshot_times", c.pde.snapshot_times}}},
          {"study",
           {{"N_values", c.study.N_values}, {"runs", c.study.runs}, {"seed_stride", c.study.seed_stride},
            {"T", c.study.T}, {"sde_dt", c.study.sde_dt}, {"pde_dt", c.study.pde_dt},
            {"snapshot_times", c.study.snapshot_times}, {"dt_gate", c.study.dt_gate}, {"gate_runs", c.study.gate_runs},
            {"fit_time", c.study.fit_time}, {"fit_min_N", c.study.fit_min_N}, {"check_times", c.study.check_times},
            {"quadrature_dt", c.study.quadrature_dt}, {"ito_N", c.study.ito_N}}},
          {"energy", {{"eta", c.energy.eta ? nlohmann::json(*c.energy.eta) : nlohmann::json(nullptr)},
                      {"sobolev", c.energy.sobolev}}},
          {"decay", {{"cases", c.decay.cases}, {"pairs", pairs}, {"threshold", c.decay.threshold}}},
          {"assumptions", {{"samples", c.assumptions.samples}, {"r0", c.assumptions.r0}}}};
}

inline std::string config_hash(const Config& c) {
  const std::string text = echo(c).dump();
  return hex32(crc32_of(text.data(), text.size()));
}

inline SdeConfig sde_config(const Config& c) {
  SdeConfig s;
  s.N = c.sde.N;
  s.sigma = c.sigma;
  s.dt = c.sde.dt;
  s.T = c.sde.T;
  s.eps0 = c.sde.eps0;
  s.eps_policy = c.sde.eps_policy == "fixed" ? EpsPolicy::Fixed : EpsPolicy::HalveOnApproach;
  s.seed = c.seed;
  s.snapshot_times = c.sde.snapshot_times;
  return s;
}

inline PdeConfig pde_config(const Config& c) {
  PdeConfig p;
  p.sigma = c.sigma;
  p.dt = c.pde.dt;
  p.T = c.pde.T;
  p.dealias = c.pde.dealias;
  p.cfl = c.pde.cfl;
  p.snapshot_times = c.pde.snapshot_times;
  p.kernel = c.mode();
  return p;
}

inline ExperimentPlan experiment_plan(const Config& c, int threads) {
  ExperimentPlan p;
  p.spec = c.spec();
  p.M = c.flow();
  p.sigma = c.sigma;
  p.law = make_initial_law(c.initial);
  p.geom = c.geometry();
  p.kernel = c.mode();
  p.T = c.study.T;
  p.sde_dt = c.study.sde_dt;
  p.pde_dt = c.study.pde_dt;
  p.snapshot_times = c.study.snapshot_times;
  p.N_values = c.study.N_values;
  p.runs = c.study.runs;
  p.seeds = SeedPlan{c.seed, c.study.seed_stride};
  p.threads = threads;
  p.eps0 = c.sde.eps0;
  p.eps_policy = c.sde.eps_policy == "fixed" ? EpsPolicy::Fixed : EpsPolicy::HalveOnApproach;
  p.fit_time = c.study.fit_time;
  p.fit_min_N = c.study.fit_min_N;
  p.dt_gate = c.study.dt_gate;
  p.gate_runs = c.study.gate_runs;
  p.check_times = c.study.check_times;
  p.quadrature_dt = c.study.quadrature_dt;
  p.ito_N = c.study.ito_N;
  return p;
}

}  // namespace mflab
