// Command-line front end: solve, batch, verify, reduce.
//
// Exit codes: 0 ok, 2 parse/input error, 3 degenerate channels,
// 4 infeasible / no feasible branch / failed check, 5 internal error.

#include "twr/io.hpp"
#include "twr/physical.hpp"
#include "twr/realify.hpp"
#include "twr/reduction.hpp"
#include "twr/solver.hpp"
#include "twr/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using twr::io::json;

enum ExitCode : int { kOk = 0, kParse = 2, kDegenerate = 3, kInfeasible = 4, kInternal = 5 };

struct CommonFlags {
  std::optional<int> steps;
  std::optional<double> corr_tol;
  std::optional<double> lambda_tol;
  std::optional<int> max_newton;
  std::optional<int> starts;
  std::optional<std::uint64_t> seed;
  bool verify = false;
  bool timing = false;
  std::string format;
};

void add_solver_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--steps", f.steps, "RK4 steps from w=0 to w=1 (default 100)")
      ->check(CLI::PositiveNumber);
  app->add_option("--corr-tol", f.corr_tol, "Newton correction tolerance (default 1e-10)")
      ->check(CLI::PositiveNumber);
  app->add_option("--lambda-tol", f.lambda_tol, "Multiplier sign tolerance (default 1e-8)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--max-newton", f.max_newton, "Newton iterations per step (default 10)")
      ->check(CLI::PositiveNumber);
  app->add_option("--starts", f.starts, "Oracle starts (default 32)")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "Seed for oracle starts and channel draws (default 0)");
  app->add_flag("--verify", f.verify, "Compare against the multi-start oracle");
  app->add_flag("--timing", f.timing, "Include wall-clock time (output is then not reproducible)");
}

twr::SolveConfig solve_config(const twr::io::RunConfig& file, const CommonFlags& f) {
  twr::SolveConfig cfg;
  auto pick = [](const auto& flag, const auto& from_file, auto& target) {
    if (flag) {
      target = *flag;
    } else if (from_file) {
      target = *from_file;
    }
  };
  pick(f.steps, file.steps, cfg.homotopy.steps);
  pick(f.corr_tol, file.corr_tol, cfg.homotopy.corr_tol);
  pick(f.lambda_tol, file.lambda_tol, cfg.homotopy.lambda_tol);
  pick(f.max_newton, file.max_newton, cfg.homotopy.max_newton);
  pick(f.starts, file.starts, cfg.oracle_starts);
  pick(f.seed, file.seed, cfg.oracle_seed);
  return cfg;
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

int exit_code_of(twr::ErrorKind kind) {
  switch (kind) {
    case twr::ErrorKind::DegenerateChannels: return kDegenerate;
    case twr::ErrorKind::InvalidInput:
    case twr::ErrorKind::DimensionMismatch: return kParse;
    case twr::ErrorKind::NoFeasibleBranch:
    case twr::ErrorKind::BranchFailed:
    case twr::ErrorKind::OracleNoFeasiblePoint:
    case twr::ErrorKind::NotOnConstraintSurface: return kInfeasible;
    default: return kInternal;
  }
}

// Fills oracle_power / oracle_gap on the record.
void attach_oracle(twr::io::ResultRecord& rec, const twr::ReducedProblem& red,
                   const twr::SolveConfig& cfg) {
  twr::Tolerances tol;
  tol.run_oracle = true;
  tol.oracle_starts = cfg.oracle_starts;
  tol.oracle_seed = cfg.oracle_seed;
  const twr::CheckSummary s = twr::check_solution(
      rec.a, std::pair{rec.lambda1, rec.lambda2}, red.coef, tol);
  rec.oracle_power = s.oracle_power;
  rec.oracle_gap = s.oracle_gap;
}

struct Solved {
  twr::io::ResultRecord record;
  bool feasible = false;
};

Solved solve_one(const twr::ReducedProblem& red, const twr::PhysicalProblem* prob,
                 const twr::SolveConfig& cfg, const CommonFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  twr::SolveReport rep = twr::solve(red, cfg);
  if (prob) twr::attach_physical(rep, red, *prob);
  const auto t1 = std::chrono::steady_clock::now();
  Solved out{twr::io::make_record(rep, red), rep.has_solution && rep.status == twr::SolveStatus::Ok};
  if (f.verify && rep.has_solution) attach_oracle(out.record, red, cfg);
  if (f.timing) out.record.wall_time = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

int cmd_solve(const std::string& path, const CommonFlags& f) {
  const twr::io::InstanceFile inst = twr::io::parse_instance(twr::io::read_text(path));
  const twr::SolveConfig cfg = solve_config(inst.config, f);
  const twr::ReducedProblem red =
      inst.is_physical() ? twr::reduce(*inst.physical) : *inst.reduced;
  Solved s = solve_one(red, inst.is_physical() ? &*inst.physical : nullptr, cfg, f);
  s.record.id = inst.id;
  if (f.format == "csv") {
    const double g1 = inst.is_physical() ? inst.physical->gamma1 : 0.0;
    const double g2 = inst.is_physical() ? inst.physical->gamma2 : 0.0;
    std::cout << twr::io::csv_header() << '\n' << twr::io::csv_row(s.record, g1, g2, 0) << '\n';
  } else {
    std::cout << twr::io::record_json(s.record).dump(2) << '\n';
  }
  return s.feasible ? kOk : kInfeasible;
}

// "1,2,4" or "0dB,3dB"; values are stored linear.
std::vector<double> parse_gamma_sweep(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw twr::io::ParseError("empty entry in --gamma");
    item = item.substr(first, last - first + 1);
    bool db = false;
    if (item.size() > 2 && (item.ends_with("dB") || item.ends_with("db"))) {
      db = true;
      item.resize(item.size() - 2);
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) {
      throw twr::io::ParseError("--gamma: cannot parse '" + item + "'");
    }
    v = db ? twr::db_to_linear(v) : v;
    if (!(v > 0.0)) throw twr::io::ParseError("--gamma: targets must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw twr::io::ParseError("--gamma: no targets");
  return out;
}

struct BatchFlags {
  std::uint64_t count = 10;
  int antennas = 4;
  std::string gamma = "1";
  double power = 1.0;
  double relay_noise = 1.0;
  double noise = 1.0;
};

int cmd_batch(const BatchFlags& b, const CommonFlags& f) {
  const std::vector<double> gammas = parse_gamma_sweep(b.gamma);
  const std::uint64_t seed = f.seed.value_or(0);
  const twr::SolveConfig cfg = solve_config({}, f);
  const bool csv = f.format != "json";
  json records = json::array();
  json summaries = json::array();
  if (csv) std::cout << twr::io::csv_header() << '\n';

  for (const double gamma : gammas) {
    twr::ChannelEnsemble ens;
    ens.antennas = b.antennas;
    ens.p1 = ens.p2 = b.power;
    ens.sigmaR2 = b.relay_noise;
    ens.sigma1_2 = ens.sigma2_2 = b.noise;
    ens.gamma1 = ens.gamma2 = gamma;
    double watts_sum = 0.0;
    std::uint64_t solved = 0;
    std::uint64_t failures = 0;
    for (std::uint64_t j = 0; j < b.count; ++j) {
      // The same channels are reused at every target.
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)};
      std::mt19937_64 rng(seq);
      const twr::PhysicalProblem prob = twr::random_channels(rng, ens);
      twr::io::ResultRecord rec;
      try {
        const twr::ReducedProblem red = twr::reduce(prob);
        Solved s = solve_one(red, &prob, cfg, f);
        rec = std::move(s.record);
        if (s.feasible) {
          watts_sum += rec.power_watts;
          ++solved;
        } else {
          ++failures;
        }
      } catch (const twr::Error& e) {
        rec.status = e.kind() == twr::ErrorKind::DegenerateChannels ? "degenerate" : "error";
        rec.warnings.push_back(e.what());
        ++failures;
      }
      rec.seed = seed;
      rec.id = std::to_string(j);
      if (csv) {
        std::cout << twr::io::csv_row(rec, gamma, gamma, j) << '\n';
      } else {
        json row = twr::io::record_json(rec);
        row["gamma1"] = gamma;
        row["gamma2"] = gamma;
        records.push_back(std::move(row));
      }
    }
    const double mean = solved ? watts_sum / static_cast<double>(solved) : 0.0;
    if (csv) {
      std::cout << "summary," << twr::io::csv_number(gamma) << ',' << twr::io::csv_number(gamma)
                << ',' << b.count << ',' << seed << ",failures=" << failures << ",,,"
                << twr::io::csv_number(mean) << ",,,,,,,,\n";
    } else {
      summaries.push_back({{"gamma1", gamma},
                           {"gamma2", gamma},
                           {"count", b.count},
                           {"solved", solved},
                           {"failures", failures},
                           {"mean_power_watts", mean}});
    }
  }
  if (!csv) {
    std::cout << json{{"version", twr::io::kSchemaVersion},
                      {"seed", seed},
                      {"records", records},
                      {"summary", summaries}}
                     .dump(2)
              << '\n';
  }
  return kOk;
}

int cmd_verify(const std::string& instance_path, const std::string& solution_path,
               const CommonFlags& f) {
  const twr::io::InstanceFile inst = twr::io::parse_instance(twr::io::read_text(instance_path));
  const twr::io::SolutionFile sol =
      twr::io::solution_from(twr::io::parse_json(twr::io::read_text(solution_path)));
  const twr::SolveConfig cfg = solve_config(inst.config, f);
  const twr::ReducedProblem red =
      inst.is_physical() ? twr::reduce(*inst.physical) : *inst.reduced;

  twr::Tolerances tol;
  tol.run_oracle = f.verify;
  tol.oracle_starts = cfg.oracle_starts;
  tol.oracle_seed = cfg.oracle_seed;

  json extra = json::object();
  twr::Vec4 a;
  std::optional<std::pair<double, double>> multipliers;
  if (sol.lambda1 && sol.lambda2) multipliers = std::pair{*sol.lambda1, *sol.lambda2};
  if (sol.complex) {
    const twr::QuadForms forms = twr::QuadForms::at(red.coef, 1.0);
    const double f1 = sol.complex->form(forms.Q1);
    const double f2 = sol.complex->form(forms.Q2);
    const double input_power = sol.complex->form(forms.M);
    twr::RealifyResult rr;
    if (std::abs(f1 - 1.0) <= twr::kSurfaceTol && std::abs(f2 - 1.0) <= twr::kSurfaceTol) {
      rr = twr::realify(*sol.complex, red);
    } else {
      rr = twr::realify_single_active(
          *sol.complex, red, std::abs(f1 - 1.0) <= std::abs(f2 - 1.0) ? twr::Terminal::One
                                                                      : twr::Terminal::Two);
    }
    a = rr.a;
    extra["realified"] = {{"gamma_x", rr.gamma_x},
                          {"gamma_y", rr.gamma_y},
                          {"theta", rr.theta},
                          {"case", std::string(twr::to_string(rr.kind))},
                          {"input_power", input_power},
                          {"output_power", forms.power(rr.a)},
                          {"a", twr::io::detail::vec_json(rr.a)}};
  } else {
    a = *sol.real;
  }

  const twr::CheckSummary summary = twr::check_solution(a, multipliers, red.coef, tol);
  if (f.format == "csv") {
    std::cout << "name,passed,value,threshold\n";
    for (const auto& c : summary.criteria) {
      std::cout << c.name << ',' << (c.passed ? "true" : "false") << ','
                << twr::io::csv_number(c.value) << ',' << twr::io::csv_number(c.threshold)
                << '\n';
    }
  } else {
    json out = twr::io::summary_json(summary);
    out.update(extra);
    std::cout << out.dump(2) << '\n';
  }
  return summary.all_passed() ? kOk : kInfeasible;
}

int cmd_reduce(const std::string& path) {
  const twr::io::InstanceFile inst = twr::io::parse_instance(twr::io::read_text(path));
  twr::io::InstanceFile out;
  out.id = inst.id;
  out.config = inst.config;
  if (inst.is_physical()) {
    twr::ReducedProblem red = twr::reduce(*inst.physical);
    red.lift.reset();
    out.reduced = red;
  } else {
    out.reduced = inst.reduced;
  }
  std::cout << twr::io::instance_json(out).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-power two-way relay beamforming solver"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string instance = "-";
  std::string solution;
  BatchFlags batch;

  auto* solve = app.add_subcommand("solve", "Solve one instance (JSON file or - for stdin)");
  solve->add_option("instance", instance, "Instance file")->capture_default_str();
  add_solver_flags(solve, flags);
  std::string solve_format = "json";
  solve->add_option("--format", solve_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* bat = app.add_subcommand("batch", "Monte Carlo sweep over SINR targets (CSV rows)");
  add_solver_flags(bat, flags);
  bat->add_option("--count", batch.count, "Channel draws per target")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bat->add_option("--antennas,-M", batch.antennas, "Relay antennas")
      ->check(CLI::Range(2, 256))
      ->capture_default_str();
  bat->add_option("--gamma", batch.gamma, "Targets, e.g. 1,2,4 or 0dB,3dB")->capture_default_str();
  bat->add_option("--power", batch.power, "Terminal transmit power")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bat->add_option("--relay-noise", batch.relay_noise, "Relay noise variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bat->add_option("--noise", batch.noise, "Terminal noise variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  std::string batch_format = "csv";
  bat->add_option("--format", batch_format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* ver = app.add_subcommand("verify", "Check a solution file against an instance");
  ver->add_option("instance", instance, "Instance file")->required();
  ver->add_option("solution", solution, "Solution file")->required();
  add_solver_flags(ver, flags);
  std::string verify_format = "json";
  ver->add_option("--format", verify_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* red = app.add_subcommand("reduce", "Print the reduced instance for a physical one");
  red->add_option("instance", instance, "Instance file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  flags.format = *bat ? batch_format : *ver ? verify_format : solve_format;

  try {
    if (*solve) return cmd_solve(instance, flags);
    if (*bat) return cmd_batch(batch, flags);
    if (*ver) return cmd_verify(instance, solution, flags);
    if (*red) return cmd_reduce(instance);
  } catch (const twr::io::ParseError& e) {
    print_error("ParseError", e.what());
    return kParse;
  } catch (const twr::Error& e) {
    print_error(std::string(twr::to_string(e.kind())), e.what());
    return exit_code_of(e.kind());
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kInternal;
  }
  return kInternal;
}
