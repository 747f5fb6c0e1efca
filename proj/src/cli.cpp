#include "tbill/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tbill/deviations.hpp"
#include "tbill/errors.hpp"
#include "tbill/geometry.hpp"
#include "tbill/selfsim.hpp"
#include "tbill/svg.hpp"

namespace tbill {

namespace {

using Params = std::map<std::string, std::string>;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keys each command accepts, in the order they are listed in --help.
const std::map<std::string, std::vector<std::string>>& command_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"simulate", {"arcs", "tau", "x0", "nmax", "out"}},
      {"deviations", {"arcs", "tau", "x0", "nmax", "seed", "out", "samples", "n", "jobs", "measure"}},
      {"lyapunov", {"d", "nmax", "seed", "qr", "out"}},
      {"selfsim-search", {"d", "maxlen", "out"}},
      {"selfsim-verify", {"system", "aN", "tau", "x0", "nmax", "out"}},
      {"qcheck", {"arcs", "samples", "seed", "n", "out"}},
  };
  return keys;
}

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help = {
      {"arcs", "comma-separated arc lengths a_1..a_N, last one strictly largest"},
      {"tau", "chord parameter, 1 < tau < a_N"},
      {"x0", "starting arc coordinate"},
      {"nmax", "number of steps, iterates or blocks (accepts 1e6)"},
      {"seed", "64-bit seed"},
      {"out", "output directory"},
      {"samples", "ensemble size"},
      {"n", "number of sides for random polygons"},
      {"jobs", "worker threads for ensembles"},
      {"measure", "displacement or transverse"},
      {"d", "number of letters"},
      {"qr", "blocks between re-orthonormalizations"},
      {"maxlen", "longest loop to search"},
      {"system", "system descriptor written by selfsim search"},
      {"aN", "length of the longest arc"},
  };
  return help;
}

const std::string& require(const Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw UsageError("missing required parameter --" + key);
  return it->second;
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("--" + key + " expects a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("--" + key + " expects a number, got '" + s + "'");
  return v;
}

std::int64_t to_count(const std::string& key, const std::string& s, std::int64_t lo = 1) {
  double v = to_double(key, s);
  if (v != std::floor(v) || v < static_cast<double>(lo) || v > 9e18)
    throw UsageError("--" + key + " expects an integer >= " + std::to_string(lo) + ", got '" + s + "'");
  return static_cast<std::int64_t>(v);
}

std::uint64_t to_seed(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw UsageError("--seed expects a non-negative integer");
  return v;
}

std::vector<double> to_arcs(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double("arcs", item));
  if (out.size() < 5) throw UsageError("--arcs needs at least 5 values");
  return out;
}

std::string get(const Params& p, const std::string& key, const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::filesystem::path out_dir(const Params& p) {
  std::filesystem::path dir = get(p, "out", ".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

Json params_json(const Params& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p)
    if (k != "out" && k != "jobs") j[k] = v;
  return j;
}

Json header(const std::string& command, const Params& p) {
  return Json{{"format_version", kFormatVersion}, {"command", command}, {"params", params_json(p)}};
}

// ---- commands ----

Json cmd_simulate(const Params& p) {
  CyclicPolygon P = build_polygon(to_arcs(require(p, "arcs")));
  double tau = to_double("tau", require(p, "tau"));
  double x0 = to_double("x0", require(p, "x0"));
  std::int64_t n = to_count("nmax", require(p, "nmax"));
  FlippedIet phi = make_phi(P, tau);
  if (!(x0 >= 0.0 && x0 < P.circumference())) throw Error(ErrorKind::InvalidArgument, "x0 must lie in [0, 1 + a_N)");
  Trajectory tr = simulate(P, x0, tau, n);

  double x_err = 0.0, tau_drift = 0.0;
  double x = x0;
  const double L = P.circumference();
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    if (i > 0) x = phi.eval(x, static_cast<std::int64_t>(i));
    x_err = std::max(x_err, circular_distance(tr.states[i].x, x, L));
    tau_drift = std::max(tau_drift, std::abs(tr.states[i].tau - tau));
  }

  auto dir = out_dir(p);
  write_text((dir / "trajectory.csv").string(), trajectory_csv(tr));
  render_svg(P, tr, (dir / "trajectory.svg").string());
  Json rep = header("simulate", p);
  rep["steps"] = static_cast<std::int64_t>(tr.states.size()) - 1;
  rep["corner_step"] = tr.terminated_at_corner ? Json(*tr.terminated_at_corner) : Json(nullptr);
  rep["max_x_error"] = x_err;
  rep["max_tau_drift"] = tau_drift;
  return rep;
}

DeviationMeasure to_measure(const std::string& s) {
  if (s == "displacement") return DeviationMeasure::Displacement;
  if (s == "transverse") return DeviationMeasure::Transverse;
  throw UsageError("--measure must be displacement or transverse");
}

Json cmd_deviations(const Params& p) {
  DeviationMeasure measure = to_measure(get(p, "measure", "displacement"));
  std::int64_t nmax = to_count("nmax", require(p, "nmax"));
  auto dir = out_dir(p);

  if (p.count("arcs")) {
    if (p.count("samples")) throw UsageError("--samples cannot be combined with --arcs");
    CyclicPolygon P = build_polygon(to_arcs(require(p, "arcs")));
    double tau = to_double("tau", require(p, "tau"));
    double x0 = to_double("x0", require(p, "x0"));
    DeviationReport r = deviation_series(P, x0, tau, nmax, {}, measure);
    write_text((dir / "series.csv").string(), series_csv(r));
    Json rep = header("deviations", p);
    rep["measure"] = to_string(measure);
    rep.update(to_json(r));
    return rep;
  }

  std::int64_t samples = to_count("samples", require(p, "samples"));
  std::uint64_t seed = to_seed(require(p, "seed"));
  int n_sides = static_cast<int>(to_count("n", get(p, "n", "5"), 5));
  int jobs = static_cast<int>(to_count("jobs", get(p, "jobs", "1")));

  struct Member {
    double aN = 0, tau = 0, x0 = 0, exponent = 0, ci = 0, m_abs = 0, final_dev = 0;
    std::string error;
  };
  std::vector<Member> members(static_cast<std::size_t>(samples));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t i; (i = next++) < samples;) {
      Member& m = members[static_cast<std::size_t>(i)];
      SplitMix64 rng = SplitMix64::derive(seed, static_cast<std::uint64_t>(i));
      BilliardSample b = random_billiard(n_sides, rng);
      m.aN = b.polygon.longest_arc();
      m.tau = b.tau;
      m.x0 = b.x0;
      try {
        DeviationReport r = deviation_series(b.polygon, b.x0, b.tau, nmax, {}, measure);
        m.exponent = r.fitted_exponent;
        m.ci = r.ci_halfwidth;
        m.m_abs = std::abs(r.m);
        m.final_dev = r.dev_abs.back();
      } catch (const Error& e) {
        m.error = to_string(e.kind());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = "sample,aN,tau,x0,m_abs,fitted_exponent,ci,final_dev,error\n";
  std::vector<double> exps;
  Json arr = Json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Member& m = members[i];
    csv += std::to_string(i) + "," + format_double(m.aN) + "," + format_double(m.tau) + "," + format_double(m.x0) +
           "," + format_double(m.m_abs) + "," + format_double(m.exponent) + "," + format_double(m.ci) + "," +
           format_double(m.final_dev) + "," + m.error + "\n";
    if (m.error.empty() && std::isfinite(m.exponent)) exps.push_back(m.exponent);
  }
  write_text((dir / "ensemble.csv").string(), csv);
  Json rep = header("deviations", p);
  rep["measure"] = to_string(measure);
  rep["samples"] = samples;
  rep["completed"] = static_cast<std::int64_t>(exps.size());
  if (!exps.empty()) {
    std::vector<double> sorted = exps;
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = sorted.size();
    rep["median_exponent"] = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
    rep["max_exponent"] = sorted.back();
    rep["min_exponent"] = sorted.front();
  } else {
    rep["median_exponent"] = nullptr;
    rep["max_exponent"] = nullptr;
    rep["min_exponent"] = nullptr;
  }
  return rep;
}

Json cmd_lyapunov(const Params& p) {
  int d = static_cast<int>(to_count("d", get(p, "d", "4"), 4));
  std::int64_t n = to_count("nmax", require(p, "nmax"));
  std::uint64_t seed = to_seed(require(p, "seed"));
  int qr = static_cast<int>(to_count("qr", get(p, "qr", "1")));
  EstimatedSpectrum est = estimate_lyapunov_ratios(d, n, seed, qr);
  out_dir(p);
  Json rep = header("lyapunov", p);
  rep.update(to_json(est));
  return rep;
}

Json cmd_selfsim_search(const Params& p) {
  int d = static_cast<int>(to_count("d", get(p, "d", "4"), 2));
  int maxlen = static_cast<int>(to_count("maxlen", get(p, "maxlen", "12")));
  if (maxlen > 24) throw UsageError("--maxlen above 24 is not supported");
  auto loops = search_loops(reversal(d), maxlen);
  auto dir = out_dir(p);
  if (loops.empty())
    throw Error(ErrorKind::SpectralHypothesisFailed, "no loop of length <= " + std::to_string(maxlen) +
                                                         " satisfies the hypotheses");
  Json systems = Json::array();
  for (const auto& l : loops) systems.push_back(to_json(build_selfsim(l)));
  write_json((dir / "system.json").string(), systems[0]);
  Json rep = header("selfsim-search", p);
  rep["n_loops"] = static_cast<std::int64_t>(loops.size());
  rep["first"] = Json{{"steps", systems[0]["steps"]}, {"lambda1", systems[0]["lambda1"]}, {"rho", systems[0]["rho"]}};
  rep["systems"] = systems;
  return rep;
}

Json cmd_selfsim_verify(const Params& p) {
  SelfSimilarSystem sys = system_from_json(read_json(require(p, "system")));
  double aN = to_double("aN", require(p, "aN"));
  double tau = p.count("tau") ? to_double("tau", p.at("tau")) : 0.5 * (1.0 + aN);
  double x0 = to_double("x0", get(p, "x0", "0.3141"));
  std::int64_t n = to_count("nmax", require(p, "nmax"), 2);
  SandwichReport r = verify_sandwich(sys, aN, tau, x0, n);
  auto dir = out_dir(p);
  write_text((dir / "series.csv").string(), series_csv(r.series));
  Json rep = header("selfsim-verify", p);
  rep["rho"] = sys.rho;
  rep.update(to_json(r));
  return rep;
}

Json cmd_qcheck(const Params& p) {
  std::int64_t samples = to_count("samples", get(p, "samples", "100"));
  std::uint64_t seed = to_seed(get(p, "seed", "1"));
  SplitMix64 rng(seed);
  double worst = 0.0;
  int rank_lo = 1 << 30, rank_hi = 0;
  auto one = [&](const CyclicPolygon& P, double x0) {
    QDecomposition q = build_q(P);
    int r = rank_q(q);
    rank_lo = std::min(rank_lo, r);
    rank_hi = std::max(rank_hi, r);
    worst = std::max(worst, reconstruction_error(q, P, x0));
  };
  int n_sides;
  if (p.count("arcs")) {
    CyclicPolygon P = build_polygon(to_arcs(p.at("arcs")));
    n_sides = P.n_sides();
    for (std::int64_t i = 0; i < samples; ++i) one(P, rng.uniform(0.0, P.circumference()));
  } else {
    n_sides = static_cast<int>(to_count("n", get(p, "n", "5"), 5));
    for (std::int64_t i = 0; i < samples; ++i) {
      BilliardSample b = random_billiard(n_sides, rng);
      one(b.polygon, b.x0);
    }
  }
  out_dir(p);
  Json rep = header("qcheck", p);
  rep["N"] = n_sides;
  rep["samples"] = samples;
  rep["rank_min"] = rank_lo;
  rep["rank_max"] = rank_hi;
  rep["max_error"] = worst;
  rep["ok"] = worst < 1e-9;
  return rep;
}

std::string num(const Json& j) {
  if (j.is_null()) return "nan";
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  return format_double(j.get<double>());
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("params.", 0) == 0) key = key.substr(7);
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::string summary_line(const Json& r) {
  const std::string cmd = r.at("command").get<std::string>();
  std::string s = cmd;
  if (cmd == "simulate") {
    s += " steps=" + num(r["steps"]) + " corner=" + num(r["corner_step"]) + " max_x_error=" + num(r["max_x_error"]) +
         " max_tau_drift=" + num(r["max_tau_drift"]);
  } else if (cmd == "deviations" && r.contains("fitted_exponent")) {
    s += " measure=" + r["measure"].get<std::string>() + " fitted_exponent=" + num(r["fitted_exponent"]) +
         " ci=" + num(r["ci"]) + " |m|=" + num(r["m_abs"]);
  } else if (cmd == "deviations") {
    s += " measure=" + r["measure"].get<std::string>() + " completed=" + num(r["completed"]) + "/" +
         num(r["samples"]) + " median_exponent=" + num(r["median_exponent"]) + " max_exponent=" +
         num(r["max_exponent"]);
  } else if (cmd == "lyapunov") {
    s += " theta=" + num(r["theta_hat"][0]) + "," + num(r["theta_hat"][1]) + "," + num(r["theta_hat"][2]) +
         " ratio2=" + num(r["ratio2"]) + "+-" + num(r["ratio2_halfwidth"]) + " ratio3=" + num(r["ratio3"]);
  } else if (cmd == "selfsim-search") {
    s += " loops=" + num(r["n_loops"]) + " lambda1=" + num(r["first"]["lambda1"]) + " rho=" + num(r["first"]["rho"]);
  } else if (cmd == "selfsim-verify") {
    s += " rho=" + num(r["rho"]) + " C1=" + num(r["C1"]) + " C2=" + num(r["C2"]) +
         " upper_ok=" + (r["upper_ok"].get<bool>() ? "true" : "false") +
         " lower_ok=" + (r["lower_ok"].get<bool>() ? "true" : "false") + " fitted_exponent=" +
         num(r["fitted_exponent"]);
  } else if (cmd == "qcheck") {
    s += " N=" + num(r["N"]) + " rank=" + num(r["rank_min"]) +
         (r["rank_min"] == r["rank_max"] ? "" : ".." + num(r["rank_max"])) + " max_error=" + num(r["max_error"]);
  }
  return s;
}

int run_cli(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = raw;
  if (args.size() >= 2 && args[0] == "selfsim" && (args[1] == "search" || args[1] == "verify")) {
    args[0] = "selfsim-" + args[1];
    args.erase(args.begin() + 1);
  }

  CLI::App app{"Tiling billiards in cyclic polygons: trajectories, interval exchanges and deviation rates", "tbill"};
  std::string config_path;
  app.add_option("--config", config_path, "flat key=value file; flags override it");
  app.require_subcommand(0, 1);
  app.fallthrough(false);

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  for (const auto& [cmd, keys] : command_keys()) {
    CLI::App* sub = app.add_subcommand(cmd, "run " + cmd);
    subs[cmd] = sub;
    for (const auto& k : keys)
      opts[cmd][k] = sub->add_option("--" + k, flag_values[cmd][k], key_help().at(k));
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    Params params;
    std::string command;
    if (!config_path.empty()) {
      params = parse_config(read_text(config_path));
      if (params.count("format_version") && params["format_version"] != std::to_string(kFormatVersion))
        throw UsageError("unsupported config format_version " + params["format_version"]);
      params.erase("format_version");
      if (params.count("command")) {
        command = params["command"];
        if (command == "selfsim search" || command == "selfsim verify") command[7] = '-';
        params.erase("command");
      }
    }
    for (const auto& [cmd, sub] : subs)
      if (sub->parsed()) {
        if (!command.empty() && command != cmd)
          throw UsageError("config names command '" + command + "' but '" + cmd + "' was given");
        command = cmd;
      }
    if (command.empty()) throw UsageError("no command given; try --help");
    auto keys_it = command_keys().find(command);
    if (keys_it == command_keys().end()) throw UsageError("unknown command '" + command + "'");
    std::set<std::string> allowed(keys_it->second.begin(), keys_it->second.end());
    for (const auto& [k, v] : params)
      if (!allowed.count(k)) throw UsageError("unknown key '" + k + "' for " + command);
    for (const auto& [k, opt] : opts[command])
      if (opt->count() > 0) params[k] = flag_values[command][k];

    Json rep;
    if (command == "simulate") rep = cmd_simulate(params);
    else if (command == "deviations") rep = cmd_deviations(params);
    else if (command == "lyapunov") rep = cmd_lyapunov(params);
    else if (command == "selfsim-search") rep = cmd_selfsim_search(params);
    else if (command == "selfsim-verify") rep = cmd_selfsim_verify(params);
    else rep = cmd_qcheck(params);

    std::filesystem::path dir = get(params, "out", ".");
    write_json((dir / "report.json").string(), rep);
    out << summary_line(Json::parse(rep.dump())) << "\n";
    if (command == "qcheck" && !rep["ok"].get<bool>()) return 1;
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_hypothesis_failure() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tbill
