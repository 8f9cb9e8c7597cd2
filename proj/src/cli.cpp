#include "snkf/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "snkf/alloc.hpp"
#include "snkf/asymptotics.hpp"
#include "snkf/experiments.hpp"
#include "snkf/kalman.hpp"
#include "snkf/nocsi.hpp"
#include "snkf/scenario_io.hpp"

namespace snkf::cli {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> repro_comments(const std::vector<std::string>& args,
                                        std::uint64_t seed) {
  std::string cmd = "snkf";
  for (const auto& a : args) cmd += " " + a;
  std::ostringstream hash;
  hash << "0x" << std::hex << fnv1a(cmd);
  return {std::string("snkf ") + kVersion, "command: " + cmd, "seed: " + std::to_string(seed),
          "config_hash: " + hash.str()};
}

std::vector<int> parse_m_grid(const std::string& text) {
  int lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !is.eof() || lo < 1 ||
      hi < lo || step < 1)
    throw DomainError("--m-grid expects a:b:step with 1 <= a <= b and step >= 1");
  std::vector<int> g;
  for (int m = lo; m <= hi; m += step) g.push_back(m);
  return g;
}

alloc::Constraint parse_constraint(const std::string& text) {
  if (text.size() < 3 || text[1] != '=')
    throw DomainError("--constraint expects D=<value> or P=<value>");
  double v = 0.0;
  try {
    v = std::stod(text.substr(2));
  } catch (const std::exception&) {
    throw DomainError("--constraint expects a numeric value");
  }
  if (text[0] == 'D') return alloc::Constraint::covariance(v);
  if (text[0] == 'P') return alloc::Constraint::budget(v);
  throw DomainError("--constraint expects D=<value> or P=<value>");
}

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw DomainError("--alpha expects a comma-separated list");
  return out;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write: " + path);
  f << text;
}

struct Options {
  std::string scenario_path;
  std::string stats_path;
  std::string experiment;
  std::string scheme = "mac";
  std::string csi = "full";
  std::string constraint;
  std::string m_grid;
  std::string alpha;
  std::string scaling = "inv-sqrt-m";
  std::string out_path;
  int realizations = 0;
  int steps = 100;
  std::uint64_t seed = 1;
};

Scheme parse_scheme(const std::string& s) {
  if (s == "mac") return Scheme::multi_access;
  if (s == "orth") return Scheme::orthogonal;
  throw DomainError("--scheme expects mac or orth");
}

int cmd_reproduce(const Options& opt, const std::vector<std::string>& args, std::ostream& out) {
  if (opt.experiment.empty()) throw DomainError("reproduce requires --experiment fig1..fig6");
  expt::Config cfg;
  if (!opt.m_grid.empty()) cfg.m_grid = parse_m_grid(opt.m_grid);
  cfg.realizations = opt.realizations;
  cfg.steps = opt.steps == 100 ? 0 : opt.steps;  // keep experiment defaults unless overridden
  cfg.seed = opt.seed;
  auto datasets = expt::reproduce(opt.experiment, cfg);
  const auto comments = repro_comments(args, opt.seed);
  for (auto& d : datasets)
    d.table.comments.insert(d.table.comments.begin(), comments.begin(), comments.end());

  if (opt.out_path.empty() || opt.out_path == "-") {
    for (const auto& d : datasets) out << d.table.to_string();
    return 0;
  }
  std::filesystem::create_directories(opt.out_path);
  for (const auto& d : datasets) {
    const auto path = std::filesystem::path(opt.out_path) / (d.name + ".csv");
    std::ofstream f(path);
    if (!f) throw DomainError("cannot write: " + path.string());
    d.table.write(f);
    out << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_steady_state(const Options& opt, const std::vector<std::string>& args,
                     std::ostream& out) {
  const Scenario sc = io::load_scenario(opt.scenario_path);
  const Scheme scheme = parse_scheme(opt.scheme);
  Amplification alphas = opt.alpha.empty()
                             ? Amplification::uniform(sc.sensors.size(), 1.0)
                             : Amplification{parse_alphas(opt.alpha)};
  const auto d = scheme == Scheme::multi_access
                     ? kalman::mac_snr(alphas, sc.channels, sc.sensors, sc.noise)
                     : kalman::orth_snr(alphas, sc.channels, sc.sensors, sc.noise);
  csv::Table t;
  t.comments = repro_comments(args, opt.seed);
  t.columns = {"scheme", "S", "P_inf"};
  t.add_row({opt.scheme, csv::format_double(d.snr),
             csv::format_double(kalman::steady_state_from_snr(d.snr, sc.model))});
  write_text(opt.out_path, t.to_string(), out);
  return 0;
}

int cmd_asymptotics(const Options& opt, const std::vector<std::string>& args, std::ostream& out) {
  const Scenario sc = io::load_scenario(opt.scenario_path);
  const Scheme scheme = parse_scheme(opt.scheme);
  asympt::Scaling scaling;
  if (opt.scaling == "none")
    scaling = asympt::Scaling::none;
  else if (opt.scaling == "inv-sqrt-m")
    scaling = asympt::Scaling::inv_sqrt_m;
  else
    throw DomainError("--scaling expects none or inv-sqrt-m");

  // Symmetric parameters from the first sensor and channel.
  asympt::SymmetricParams p;
  p.c = sc.sensors[0].c;
  p.sigma_v2 = sc.sensors[0].sigma_v2;
  p.h = sc.channels.magnitudes()[0];
  p.model = sc.model;
  p.sigma_n2 = sc.noise.sigma_n2;

  const std::vector<int> grid =
      opt.m_grid.empty() ? std::vector<int>{10, 20, 50, 100, 200, 500, 1000}
                         : parse_m_grid(opt.m_grid);
  csv::Table t;
  t.comments = repro_comments(args, opt.seed);
  t.comments.push_back("symmetric parameters from sensor 0 and channel 0");
  t.columns = {"M", "curve", "value", "stderr"};
  for (int m : grid)
    t.add_row({std::to_string(m), "exact",
               csv::format_double(asympt::exact_symmetric_p_inf(m, p, scheme, scaling)), "0"});
  for (int m : grid) {
    double approx;
    if (scheme == Scheme::orthogonal && scaling == asympt::Scaling::inv_sqrt_m)
      approx = asympt::orth_scaled_limit(p).at(m);
    else if (scheme == Scheme::multi_access && scaling == asympt::Scaling::none)
      approx = asympt::mac_noscale(m, p);
    else
      approx = asympt::orth_noscale(m, p);  // shared expression with mac_scaled
    t.add_row({std::to_string(m), "approx", csv::format_double(approx), "0"});
  }
  write_text(opt.out_path, t.to_string(), out);
  return 0;
}

int cmd_allocate(const Options& opt, std::ostream& out) {
  if (opt.constraint.empty()) throw DomainError("allocate requires --constraint D=<v>|P=<v>");
  const Scenario sc = io::load_scenario(opt.scenario_path);
  const auto problem = alloc::build_static_problem(sc.model, sc.sensors, sc.channels, sc.noise,
                                                   parse_constraint(opt.constraint),
                                                   parse_scheme(opt.scheme));
  const auto solution = alloc::solve(problem);
  write_text(opt.out_path, io::solution_to_json(solution), out);
  return 0;
}

int cmd_simulate(const Options& opt, const std::vector<std::string>& args, std::ostream& out) {
  const Scenario sc = io::load_scenario(opt.scenario_path);
  const Scheme scheme = parse_scheme(opt.scheme);
  const std::vector<double> alphas = opt.alpha.empty()
                                         ? std::vector<double>(sc.sensors.size(), 1.0)
                                         : parse_alphas(opt.alpha);
  std::ostringstream body;
  if (opt.csi == "full") {
    kalman::FilterOptions fo;
    fo.steps = opt.steps;
    fo.seed = opt.seed;
    fo.scheme = scheme;
    const auto trace =
        kalman::run_filter(sc, kalman::AmplificationSchedule(Amplification{alphas}), fo);
    trace.write_csv(body);
  } else if (opt.csi == "none") {
    if (opt.stats_path.empty())
      throw DomainError("simulate --csi none requires --stats FILE");
    const auto stats = io::load_statistics(opt.stats_path);
    if (stats.size() != sc.sensors.size())
      throw DomainError("statistics size does not match the scenario sensor count");
    const auto trace = nocsi::simulate_nocsi(sc.model, sc.sensors, sc.noise, stats, alphas,
                                             opt.steps, opt.seed, std::nullopt, scheme);
    std::vector<double> powers(sc.sensors.size());
    for (std::size_t i = 0; i < powers.size(); ++i)
      powers[i] = transmit_power(alphas[i], sc.sensors[i], sc.model);
    body << "k,x_hat,P";
    for (std::size_t i = 1; i <= powers.size(); ++i) body << ",gamma_" << i;
    body << "\n";
    for (std::size_t k = 0; k < trace.p.size(); ++k) {
      body << k << ',' << csv::format_double(trace.x_hat[k]) << ','
           << csv::format_double(trace.p[k]);
      for (double g : powers) body << ',' << csv::format_double(g);
      body << "\n";
    }
  } else {
    throw DomainError("--csi expects full or none");
  }
  std::ostringstream full;
  for (const auto& c : repro_comments(args, opt.seed)) full << "# " << c << "\n";
  full << body.str();
  write_text(opt.out_path, full.str(), out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kalman filtering over amplify-and-forward sensor networks"};
  app.set_version_flag("--version", std::string("snkf ") + kVersion);
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario_path, "scenario JSON file");
    sub->add_option("--stats", opt.stats_path, "channel statistics JSON file");
    sub->add_option("--experiment", opt.experiment, "experiment id (fig1..fig6)");
    sub->add_option("--scheme", opt.scheme, "mac|orth");
    sub->add_option("--csi", opt.csi, "full|none");
    sub->add_option("--constraint", opt.constraint, "D=<v>|P=<v>");
    sub->add_option("--m-grid", opt.m_grid, "a:b:step");
    sub->add_option("--realizations", opt.realizations, "Monte Carlo realizations");
    sub->add_option("--steps", opt.steps, "time steps");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--out", opt.out_path, "output path ('-' = stdout)");
    sub->add_option("--alpha", opt.alpha, "comma-separated amplifications");
    sub->add_option("--scaling", opt.scaling, "none|inv-sqrt-m");
  };
  auto* reproduce = app.add_subcommand("reproduce", "rebuild an experiment dataset");
  auto* steady = app.add_subcommand("steady-state", "steady-state covariance of a scenario");
  auto* asym = app.add_subcommand("asymptotics", "exact vs approximate covariance over M");
  auto* allocate = app.add_subcommand("allocate", "solve the static power allocation");
  auto* simulate = app.add_subcommand("simulate", "simulate the filter on a scenario");
  for (auto* sub : {reproduce, steady, asym, allocate, simulate}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help / --version
      std::ostringstream os;
      const int code = app.exit(e, os, os);
      out << os.str();
      return code;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (reproduce->parsed()) return cmd_reproduce(opt, args, out);
    if (steady->parsed()) return cmd_steady_state(opt, args, out);
    if (asym->parsed()) return cmd_asymptotics(opt, args, out);
    if (allocate->parsed()) return cmd_allocate(opt, out);
    if (simulate->parsed()) return cmd_simulate(opt, args, out);
    err << "error: no command\n";
    return 2;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace snkf::cli
