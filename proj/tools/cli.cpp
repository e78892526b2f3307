#include "cli.hpp"

#include "ctrlcost/cost_lab.hpp"
#include "ctrlcost/simulator.hpp"
#include "ctrlcost/transmutation.hpp"
#include "ctrlcost/wave_control.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace ctrlcost::cli {

using nlohmann::ordered_json;

namespace {

const std::vector<KeySpec> kCommon{
    {"theta", "0", "rotation angle of the first-order system, radians"},
    {"truncation", "15", "retained modes"},
    {"precision", "extended", "standard or extended"},
    {"seed", "1", "seed for x0 = random"},
    {"out", ".", "output directory"},
};

const std::map<std::string, std::vector<KeySpec>> kCommands{
    {"heat-control",
     {{"length", "pi", "interval length L"},
      {"left", "dirichlet", "left boundary: dirichlet or neumann"},
      {"horizon", "0.5", "control time T"},
      {"x0", "e1", "initial state: e<k>, random, or comma list of a or a+bj"},
      {"weight_order", "0", "p in the weight (x(1-x))^p; 0 is the L2 min-norm control"},
      {"samples", "2000001", "control samples for the replay"},
      {"output_samples", "2001", "control samples written to control.csv"}}},
    {"wave-control",
     {{"length", "pi", "interval length L0"},
      {"horizon", "2pi", "control time, at least 2 L0"},
      {"x0", "e1", "initial state"},
      {"samples", "20001", "control samples for the spectral replay"},
      {"fd_nodes", "801", "leapfrog nodes"},
      {"output_samples", "2001", "control samples written to control.csv"}}},
    {"kernel",
     {{"length", "pi", "half-length L of (-L, L)"},
      {"horizon", "0.8", "kernel horizon T"},
      {"split", "0.5", "switch time as a fraction of T"},
      {"convention", "plus_theta", "plus_theta or minus_theta"},
      {"controlled", "0", "controlled modes per parity; 0 = automatic"},
      {"weight_order", "16", "flatness of the phase-two controls"},
      {"lift_order", "3", "lifting terms"},
      {"time_intervals", "0", "t-grid intervals; 0 = automatic"},
      {"space_intervals", "0", "s-grid intervals; 0 = automatic"},
      {"write_grid", "true", "write kernel.csv"}}},
    {"transmute",
     {{"wave_length", "pi", "first-order and wave interval length L0"},
      {"length", "2pi", "kernel half-length L, at least 2 L0"},
      {"horizon", "0.3", "control time T"},
      {"x0", "e1", "initial state"},
      {"convention", "plus_theta", "kernel phase convention"},
      {"time_intervals", "0", "kernel t-grid intervals; 0 = automatic"},
      {"space_intervals", "0", "kernel s-grid intervals; 0 = automatic"},
      {"fit_gamma", "", "gamma of a kernel cost fit; empty = measured ||k||^2"},
      {"fit_alpha", "", "alpha of a kernel cost fit"}}},
    {"cost-sweep",
     {{"length", "pi", "interval length L"},
      {"left", "dirichlet", "left boundary"},
      {"horizons", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8", "comma list of T"},
      {"tolerance", "0.01", "relative kappa change allowed under 1.5x truncation"},
      {"transmuted", "false", "also compute 2 kappa_2 ||k||^2 with the kernel on (-2L, 2L)"},
      {"rescale_sigma", "2", "compare (L, T) with (sigma L, sigma^2 T); 0 skips"}}},
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool known_key(const std::string& command, const std::string& key) {
  for (const KeySpec& k : command_keys(command))
    if (k.name == key) return true;
  return false;
}

// Strict decimal parse of the whole string.
bool plain_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [p, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

Complex<double> parse_complex(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double re = 0.0;
  if (plain_real(s, re)) return re;
  if (!s.empty() && s.back() == 'j') {
    for (std::size_t i = s.size() - 1; i-- > 1;) {
      if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
        double im = 0.0;
        const std::string a = s.substr(0, i), b = s.substr(i, s.size() - 1 - i);
        if (plain_real(a, re) && plain_real(b == "+" ? "1" : b == "-" ? "-1" : b, im)) return {re, im};
        break;
      }
    }
  }
  throw ConfigError(key + ": cannot parse complex value '" + text + "'");
}

CVector<double> parse_state(const std::string& text, int truncation, unsigned seed) {
  const std::string s = trim(text);
  CVector<double> x = CVector<double>::Zero(truncation);
  if (s == "random") {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < truncation; ++i) x(i) = n(gen);
    return x;
  }
  if (s.size() > 1 && s[0] == 'e' && s.find(',') == std::string::npos) {
    const int k = parse_int("x0", s.substr(1));
    if (k < 1 || k > truncation) throw ConfigError("x0: mode index outside 1.." + std::to_string(truncation));
    x(k - 1) = 1.0;
    return x;
  }
  std::stringstream in(s);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= truncation) throw ConfigError("x0: more coefficients than the truncation");
    x(i++) = parse_complex("x0", item);
  }
  if (i == 0) throw ConfigError("x0: empty state");
  return x;
}

// Typed view of the merged settings; every accessor validates.
struct Params {
  std::string command;
  Settings values;

  const std::string& raw(const std::string& key) const { return values.at(key); }
  double real(const std::string& key) const { return parse_real(key, raw(key)); }
  double positive(const std::string& key) const {
    const double x = real(key);
    if (!(x > 0.0)) throw ConfigError(key + ": must be positive");
    return x;
  }
  int integer(const std::string& key, int lo) const {
    const int x = parse_int(key, raw(key));
    if (x < lo) throw ConfigError(key + ": must be at least " + std::to_string(lo));
    return x;
  }
  bool flag(const std::string& key) const { return parse_bool(key, raw(key)); }
  Precision precision() const {
    try {
      return parse_precision(raw("precision"));
    } catch (const InputError& e) {
      throw ConfigError(std::string("precision: ") + e.what());
    }
  }
  LeftBoundary left() const {
    try {
      return parse_left_boundary(raw("left"));
    } catch (const InputError& e) {
      throw ConfigError(std::string("left: ") + e.what());
    }
  }
  PhaseConvention convention() const {
    try {
      return parse_phase_convention(raw("convention"));
    } catch (const InputError& e) {
      throw ConfigError(std::string("convention: ") + e.what());
    }
  }
  CVector<double> state() const {
    return parse_state(raw("x0"), integer("truncation", 1), unsigned(integer("seed", 0)));
  }
};

ordered_json header(const Params& p) {
  ordered_json h;
  h["artifact"] = kArtifact;
  h["version"] = kVersion;
  h["command"] = p.command;
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : p.values) c[k] = v;
  h["config"] = c;
  return h;
}

class Output {
 public:
  explicit Output(const Params& p) : params_(p), dir_(p.raw("out")) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("out: cannot create directory '" + dir_.string() + "'");
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir_ / name);
    if (!f) throw ComputationError("cannot write " + (dir_ / name).string());
    return f;
  }

  // CSV with a '#' header block.
  std::ofstream csv(const std::string& name) const {
    std::ofstream f = open(name);
    f << "# " << kArtifact << ' ' << kVersion << '\n' << "# command " << params_.command << '\n';
    for (const auto& [k, v] : params_.values) f << "# " << k << " = " << v << '\n';
    return f;
  }

  void json(const std::string& name, ordered_json results) const {
    ordered_json doc;
    doc["header"] = header(params_);
    doc["status"] = "ok";
    doc["results"] = std::move(results);
    open(name) << doc.dump(2) << '\n';
  }

  void error(const std::string& kind, const std::string& message, int code = 1) const {
    ordered_json doc;
    doc["header"] = header(params_);
    doc["status"] = "error";
    doc["exit_code"] = code;
    doc["kind"] = kind;
    doc["message"] = message;
    open("error.json") << doc.dump(2) << '\n';
  }

 private:
  const Params& params_;
  std::filesystem::path dir_;
};

void write_signal(std::ostream& f, const ControlSignal& u) {
  f << "t,re,im\n";
  char buf[96];
  for (int i = 0; i < u.grid.samples; ++i) {
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e\n", u.grid.at(i), u.values(i).real(), u.values(i).imag());
    f << buf;
  }
}

double imaginary_ratio(const CVector<double>& v) {
  const double top = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  return top > 0.0 ? v.imag().cwiseAbs().maxCoeff() / top : 0.0;
}

template <class R>
void heat_control(const Params& p, const Output& out) {
  const double T = p.positive("horizon");
  const ModeBasis basis = build_basis(BoundaryConfig{p.positive("length"), p.left(), p.real("theta")},
                                      p.integer("truncation", 1));
  const StateCoeffs<double> x0{basis, p.state()};
  const int samples = p.integer("samples", 2), shown = p.integer("output_samples", 2);
  const int weight = p.integer("weight_order", 0);
  validate(basis.config);

  const MomentSolution<R> sol = solve_min_norm(moment_targets<R>(x0, T, weight));
  const ControlSignal u = sample_control(sol, samples);
  const Trajectory replay = simulate_first_order(x0, u);
  const double n0 = x0.norm();

  ordered_json r;
  r["cost"] = double(control_l2_sq(sol));
  r["sampled_cost"] = l2_norm_sq(u);
  r["terminal_norm_ratio"] = n0 > 0.0 ? replay.terminal().norm() / n0 : 0.0;
  r["moment_residual"] = double(sol.residual);
  r["condition"] = double(sol.condition);
  r["rank"] = sol.rank;
  r["imaginary_ratio"] = imaginary_ratio(u.values);
  r["kappa"] = double(controllability_cost<R>(basis, T).kappa);
  std::ofstream f = out.csv("control.csv");
  write_signal(f, sample_control(sol, shown));
  out.json("report.json", r);
}

template <class R>
void wave_control(const Params& p, const Output& out) {
  const double L = p.positive("horizon");
  const BoundaryConfig cfg{p.positive("length"), LeftBoundary::dirichlet, 0.0};
  const ModeBasis basis = build_basis(cfg, p.integer("truncation", 1));
  const StateCoeffs<double> z0{basis, p.state()};
  const int samples = p.integer("samples", 2), nodes = p.integer("fd_nodes", 3);
  const int shown = p.integer("output_samples", 2);

  const WaveControl<R> w = solve_wave_control<R>(z0, L);
  const ControlSignal v = sample_wave_control(w, samples);
  const WaveTrajectoryModal tr = simulate_second_order(z0, CVector<double>::Zero(basis.truncation), v);
  const NodalWaveState fd = simulate_second_order_fd(cfg, sample_profile(z0, nodes), v);
  const double n0 = z0.norm();

  ordered_json r;
  r["cost"] = double(control_l2_sq(w.moments));
  r["kappa2"] = double(w.kappa2);
  r["terminal_energy_ratio"] = n0 > 0.0 ? wave_energy(basis, tr.terminal_z(), tr.terminal_dz()) / (n0 * n0) : 0.0;
  r["leapfrog_terminal_ratio"] = n0 > 0.0 ? l2_norm(fd.z) / n0 : 0.0;
  r["moment_residual"] = double(w.moments.residual);
  r["condition"] = double(w.moments.condition);
  std::ofstream f = out.csv("control.csv");
  write_signal(f, sample_wave_control(w, shown));
  out.json("report.json", r);
}

KernelResolution kernel_resolution(const Params& p) {
  KernelResolution res;
  res.convention = p.convention();
  res.time_intervals = p.integer("time_intervals", 0);
  res.space_intervals = p.integer("space_intervals", 0);
  if (p.values.count("controlled")) res.controlled = p.integer("controlled", 0);
  if (p.values.count("weight_order")) res.weight_order = p.integer("weight_order", 1);
  if (p.values.count("lift_order")) res.lift_order = p.integer("lift_order", 1);
  if (p.values.count("split")) res.split = p.real("split");
  return res;
}

void require_extended(const Params& p) {
  if (p.precision() != Precision::extended)
    throw ConfigError("precision: the kernel construction runs its moment problems in extended precision");
}

ordered_json diagnostics_json(const KernelDiagnostics& d) {
  ordered_json j;
  j["smoothing_modes"] = d.smoothing_modes;
  j["controlled"] = d.controlled;
  j["represented"] = d.represented;
  j["weight_order"] = d.weight_order;
  j["lift_order"] = d.lift_order;
  j["condition"] = d.condition;
  j["moment_residual"] = d.moment_residual;
  j["rank_deficit"] = d.rank_deficit;
  j["half_norm"] = d.half_norm;
  j["terminal_norm"] = d.terminal_norm;
  j["control_cost"] = d.control_cost;
  j["regime_warning"] = d.regime_warning;
  return j;
}

void kernel(const Params& p, const Output& out) {
  require_extended(p);
  const KernelResolution res = kernel_resolution(p);
  const double L = p.positive("length"), T = p.positive("horizon");
  const bool write_grid = p.flag("write_grid");
  const FundamentalKernel k(L, T, p.real("theta"), res);
  const KernelGrid g = k.sample(res.time_intervals, res.space_intervals);
  const double eps = T / 100.0;
  const Complex<double> m = kernel_pairing(k, eps, [L](double s) { return std::cos(M_PI * s / (2.0 * L)); });
  const KernelDiagnostics& d = k.diagnostics();

  ordered_json r;
  r["delta_reproduction_error"] = std::abs(m - 1.0);
  r["delta_reproduction_time"] = eps;
  r["terminal_ratio"] = d.half_norm > 0.0 ? d.terminal_norm / d.half_norm : 0.0;
  r["kernel_l2_sq"] = kernel_l2_norm_sq(g);
  r["phase_one_l2_sq"] = g.phase_one_norm_sq;
  r["time_intervals"] = int(g.t.size());
  r["space_intervals"] = int(g.s.size()) - 1;
  r["diagnostics"] = diagnostics_json(d);
  if (write_grid) {
    std::ofstream f = out.csv("kernel.csv");
    write_kernel_csv(g, f);
  }
  out.json("report.json", r);
}

void transmute_cmd(const Params& p, const Output& out) {
  require_extended(p);
  TransmutationOptions o;
  o.kernel = kernel_resolution(p);
  const std::string g = trim(p.raw("fit_gamma")), a = trim(p.raw("fit_alpha"));
  if (g.empty() != a.empty()) throw ConfigError("fit_gamma and fit_alpha must be given together");
  if (!g.empty()) o.fit = KernelCostFit{p.positive("fit_gamma"), p.real("fit_alpha")};
  const double L0 = p.positive("wave_length"), L = p.positive("length"), T = p.positive("horizon");
  if (L < 2.0 * L0 * (1.0 - 1e-12)) throw ConfigError("length: kernel half-length must be at least 2 wave_length");
  const CVector<double> x0 = p.state();

  const TransmutationRun run = transmute(x0, L0, L, T, p.real("theta"), o);
  const TransmutationReport& t = run.report;
  ordered_json r;
  r["terminal_norm_ratio"] = t.terminal_norm_ratio;
  r["weak_residual"] = t.weak_residual;
  r["control_cost"] = t.control_cost;
  r["bound_rhs"] = t.bound_rhs;
  r["bound_satisfied"] = t.bound_satisfied;
  r["direct_cost"] = t.direct_cost;
  r["kernel_l2_sq"] = t.kernel_l2_sq;
  r["wave_cost"] = t.wave_cost;
  r["half_wave_cost"] = t.half_wave_cost;
  r["cauchy_schwarz_rhs"] = t.cauchy_schwarz_rhs;
  r["kappa2"] = t.kappa2;
  r["imaginary_ratio"] = t.imaginary_ratio;
  r["transmuted_terminal_ratio"] = t.transmuted_terminal_ratio;
  r["kernel"] = diagnostics_json(t.kernel);
  std::ofstream f = out.csv("control.csv");
  write_signal(f, run.u);
  out.json("report.json", r);
}

ordered_json fit_json(const AffineFit& f) {
  ordered_json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["residual"] = f.residual;
  j["points"] = f.points;
  return j;
}

ordered_json sweep_json(const SweepResult& s) {
  ordered_json j;
  j["rows"] = int(s.rows.size());
  j["converged_rows"] = s.converged_rows;
  j["monotone"] = s.monotone;
  j["fit"] = s.fit ? fit_json(*s.fit) : ordered_json(nullptr);
  j["advisory_fit"] = fit_json(s.advisory_fit);
  j["normalized_rate"] = s.normalized_rate;
  j["band"] = {kRateBandLow, kRateBandHigh};
  j["in_band"] = s.in_band;
  ordered_json ratios = ordered_json::array();
  for (const SweepRow& r : s.rows) ratios.push_back(r.kappa_transmuted / r.kappa_direct);
  j["transmuted_over_direct"] = ratios;
  return j;
}

int cost_sweep(const Params& p, const Output& out) {
  SweepConfig c;
  c.length = p.positive("length");
  c.left = p.left();
  c.theta = p.real("theta");
  c.truncation = p.integer("truncation", 1);
  c.precision = p.precision();
  c.tolerance = p.positive("tolerance");
  c.transmuted = p.flag("transmuted");
  const std::vector<double> Ts = parse_real_list("horizons", p.raw("horizons"));
  if (Ts.size() < 3) throw ConfigError("horizons: need at least three values");
  for (double T : Ts)
    if (!(T > 0.0)) throw ConfigError("horizons: values must be positive");
  const double sigma = p.real("rescale_sigma");
  if (sigma < 0.0) throw ConfigError("rescale_sigma: must be nonnegative");

  SweepResult s;
  std::string failure;
  try {
    s = sweep(c, Ts);
  } catch (const SweepError& e) {
    s = e.result;
    failure = e.what();
  }
  ordered_json j = sweep_json(s);
  if (sigma > 0.0) {
    std::vector<double> sorted = Ts;
    std::sort(sorted.begin(), sorted.end());
    const std::vector<double> ratios = rescaling_ratios(c, sorted, sigma);
    double worst = 0.0;
    for (double r : ratios) worst = std::max(worst, std::abs(r - 1.0));
    j["rescaling"] = {{"sigma", sigma}, {"ratios", ratios}, {"max_deviation", worst}};
  }
  std::ofstream f = out.csv("sweep.csv");
  write_sweep_csv(s, f);
  if (!failure.empty()) {
    j["error"] = failure;
    ordered_json doc;
    doc["header"] = header(p);
    doc["status"] = "error";
    doc["results"] = j;
    out.open("summary.json") << doc.dump(2) << '\n';
    out.error("computation", failure);
    std::cerr << failure << '\n';
    return 1;
  }
  out.json("summary.json", j);
  return 0;
}

int dispatch(const Params& p) {
  // validate everything the command reads before any computation
  for (const KeySpec& k : command_keys(p.command)) (void)p.raw(k.name);
  if (!(std::abs(p.real("theta")) < M_PI / 2)) throw ConfigError("theta: must lie in (-pi/2, pi/2)");
  (void)p.integer("truncation", 1);
  (void)p.precision();
  (void)p.integer("seed", 0);
  if (p.values.count("x0")) (void)p.state();
  const Output out(p);
  try {
    const bool extended = p.precision() == Precision::extended;
    if (p.command == "heat-control") {
      extended ? heat_control<Extended>(p, out) : heat_control<double>(p, out);
    } else if (p.command == "wave-control") {
      extended ? wave_control<Extended>(p, out) : wave_control<double>(p, out);
    } else if (p.command == "kernel") {
      kernel(p, out);
    } else if (p.command == "transmute") {
      transmute_cmd(p, out);
    } else {
      return cost_sweep(p, out);
    }
  } catch (const InputError& e) {
    out.error("input", e.what(), 2);
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ComputationError& e) {
    out.error("computation", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

const std::vector<KeySpec>& command_keys(const std::string& command) {
  static const std::map<std::string, std::vector<KeySpec>> all = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    for (const auto& [name, keys] : kCommands) {
      std::vector<KeySpec> v = kCommon;
      v.insert(v.end(), keys.begin(), keys.end());
      m[name] = v;
    }
    return m;
  }();
  const auto it = all.find(command);
  if (it == all.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, keys] : kCommands) out.push_back(name);
  return out;
}

Settings parse_config_text(const std::string& text, const std::string& command, const std::string& origin) {
  Settings out;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    if (!known_key(command, key)) throw ConfigError(where + "unknown key '" + key + "' for " + command);
    if (!out.emplace(key, value).second) throw ConfigError(where + "repeated key '" + key + "'");
  }
  return out;
}

Settings read_config_file(const std::string& path, const std::string& command) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), command, path);
}

Settings merge_settings(const std::string& command, const Settings& file, const Settings& flags) {
  Settings out;
  for (const KeySpec& k : command_keys(command)) out[k.name] = k.fallback;
  for (const Settings* layer : {&file, &flags}) {
    for (const auto& [k, v] : *layer) {
      if (!known_key(command, k)) throw ConfigError("unknown key '" + k + "' for " + command);
      out[k] = v;
    }
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double x = 0.0;
  if (plain_real(s, x)) return x;
  const auto at = s.find("pi");
  if (at != std::string::npos) {
    std::string coef = trim(s.substr(0, at));
    if (!coef.empty() && coef.back() == '*') coef = trim(coef.substr(0, coef.size() - 1));
    std::string rest = trim(s.substr(at + 2));
    double c = 1.0, d = 1.0;
    const bool coef_ok = coef.empty() || coef == "+" || (coef == "-" && ((c = -1.0), true)) || plain_real(coef, c);
    const bool rest_ok = rest.empty() || (rest[0] == '/' && plain_real(trim(rest.substr(1)), d) && d != 0.0);
    if (coef_ok && rest_ok) return c * M_PI / d;
  }
  throw ConfigError(key + ": cannot parse real value '" + text + "'");
}

int parse_int(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  int x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(key + ": cannot parse integer '" + text + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Null controllability and transmutation pipelines"};
  app.require_subcommand(1);
  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Sub> subs;
  for (const std::string& name : command_names()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name);
    s.app->add_option("--config", s.config, "key = value configuration file");
    for (const KeySpec& k : command_keys(name)) {
      s.app->add_option("--" + dashed(k.name), s.flags[k.name], k.help + " [" + k.fallback + "]");
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    try {
      Settings given;
      for (const KeySpec& k : command_keys(name))
        if (s.app->count("--" + dashed(k.name))) given[k.name] = s.flags[k.name];
      const Settings file = s.config.empty() ? Settings{} : read_config_file(s.config, name);
      const Params p{name, merge_settings(name, file, given)};
      const auto start = std::chrono::steady_clock::now();
      const int code = dispatch(p);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << name << ": exit " << code << " after " << secs << " s\n";
      return code;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

}  // namespace ctrlcost::cli
