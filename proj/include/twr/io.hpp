#pragma once

// JSON instance / result / solution files and CSV formatting.
//
// Instance file (version 1):
//   {"version": 1, "kind": "reduced", "id": "...",
//    "coefficients": {"r":1, "q1":0, "q2":0, "c1":1, "c2":1, "d1":0, "d2":0},
//    "config": {"steps":100, "corr_tol":1e-10, "lambda_tol":1e-8,
//               "max_newton":10, "starts":32, "seed":0}}
//   {"version": 1, "kind": "physical",
//    "physical": {"h1": [[re, im], ...], "h2": [[re, im], ...],
//                 "p1":1, "p2":1, "sigma_r2":1, "sigma1_2":1, "sigma2_2":1,
//                 "gamma1":1, "gamma2":1}}
// "id" and "config" are optional; so is "scale" for reduced instances.
//
// Solution file: any object with "a" holding either 4 reals (vec of the real
// 2x2 matrix) or 4 [re, im] pairs, plus optional "lambda1"/"lambda2". Result
// records written by the solver qualify.

#include "twr/error.hpp"
#include "twr/physical.hpp"
#include "twr/quadforms.hpp"
#include "twr/realify.hpp"
#include "twr/reduction.hpp"
#include "twr/solver.hpp"
#include "twr/verify.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twr::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed input: bad JSON, missing or mistyped fields, unknown version.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<int> steps;
  std::optional<double> corr_tol;
  std::optional<double> lambda_tol;
  std::optional<int> max_newton;
  std::optional<int> starts;
  std::optional<std::uint64_t> seed;

  bool operator==(const RunConfig&) const = default;
};

struct InstanceFile {
  std::string id;
  std::optional<PhysicalProblem> physical;
  /// Set for reduced instances.
  std::optional<ReducedProblem> reduced;
  RunConfig config;

  bool is_physical() const { return physical.has_value(); }
};

namespace detail {

inline const json& field(const json& obj, const std::string& name, const std::string& path) {
  if (!obj.is_object()) throw ParseError("field '" + path + "': expected an object");
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError("field '" + path + "." + name + "': missing");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError("field '" + path + "': expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError("field '" + path + "': not finite");
  return x;
}

inline double number_field(const json& obj, const std::string& name, const std::string& path) {
  return number(field(obj, name, path), path + "." + name);
}

inline cplx complex_value(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) {
    throw ParseError("field '" + path + "': expected [re, im]");
  }
  return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
}

inline CVec complex_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    throw ParseError("field '" + path + "': expected a non-empty array of [re, im]");
  }
  CVec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) {
    out(static_cast<Eigen::Index>(j)) =
        complex_value(v[j], path + "[" + std::to_string(j) + "]");
  }
  return out;
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json complex_vector_json(const CVec& v) {
  json out = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) out.push_back(complex_json(v(j)));
  return out;
}

inline json complex_matrix_json(const CMat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline CMat complex_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ParseError("field '" + path + "': expected rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  CMat out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const CVec row = complex_vector(v[static_cast<std::size_t>(r)], rp);
    if (r == 0) out.resize(rows, row.size());
    if (row.size() != out.cols()) throw ParseError("field '" + rp + "': ragged matrix");
    out.row(r) = row.transpose();
  }
  return out;
}

inline json vec_json(const Vec4& a) { return json::array({a(0), a(1), a(2), a(3)}); }

inline Vec4 vec4(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 4) throw ParseError("field '" + path + "': expected 4 numbers");
  Vec4 out;
  for (int j = 0; j < 4; ++j) out(j) = number(v[j], path + "[" + std::to_string(j) + "]");
  return out;
}

inline void check_version(const json& doc) {
  const json& v = field(doc, "version", "");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw ParseError("field 'version': expected " + std::to_string(kSchemaVersion));
  }
}

}  // namespace detail

/// Parses JSON text; syntax errors carry line and column.
inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::istream* in = nullptr;
  std::ifstream file;
  if (path == "-") {
    in = &std::cin;
  } else {
    file.open(path);
    if (!file) throw ParseError("cannot open '" + path + "'");
    in = &file;
  }
  return {std::istreambuf_iterator<char>(*in), std::istreambuf_iterator<char>()};
}

inline json coefficients_json(const Coefficients& k) {
  return {{"r", k.r},   {"q1", k.q1}, {"q2", k.q2}, {"c1", k.c1},
          {"c2", k.c2}, {"d1", k.d1}, {"d2", k.d2}};
}

inline Coefficients coefficients_from(const json& obj, const std::string& path) {
  Coefficients k;
  k.r = detail::number_field(obj, "r", path);
  k.q1 = detail::number_field(obj, "q1", path);
  k.q2 = detail::number_field(obj, "q2", path);
  k.c1 = detail::number_field(obj, "c1", path);
  k.c2 = detail::number_field(obj, "c2", path);
  k.d1 = detail::number_field(obj, "d1", path);
  k.d2 = detail::number_field(obj, "d2", path);
  return k;
}

inline json physical_json(const PhysicalProblem& p) {
  return {{"h1", detail::complex_vector_json(p.h1)},
          {"h2", detail::complex_vector_json(p.h2)},
          {"p1", p.p1},
          {"p2", p.p2},
          {"sigma_r2", p.sigmaR2},
          {"sigma1_2", p.sigma1_2},
          {"sigma2_2", p.sigma2_2},
          {"gamma1", p.gamma1},
          {"gamma2", p.gamma2}};
}

inline PhysicalProblem physical_from(const json& obj, const std::string& path) {
  PhysicalProblem p;
  p.h1 = detail::complex_vector(detail::field(obj, "h1", path), path + ".h1");
  p.h2 = detail::complex_vector(detail::field(obj, "h2", path), path + ".h2");
  if (p.h1.size() != p.h2.size()) {
    throw ParseError("field '" + path + ".h2': length differs from h1");
  }
  p.p1 = detail::number_field(obj, "p1", path);
  p.p2 = detail::number_field(obj, "p2", path);
  p.sigmaR2 = detail::number_field(obj, "sigma_r2", path);
  p.sigma1_2 = detail::number_field(obj, "sigma1_2", path);
  p.sigma2_2 = detail::number_field(obj, "sigma2_2", path);
  p.gamma1 = detail::number_field(obj, "gamma1", path);
  p.gamma2 = detail::number_field(obj, "gamma2", path);
  return p;
}

inline json config_json(const RunConfig& c) {
  json out = json::object();
  if (c.steps) out["steps"] = *c.steps;
  if (c.corr_tol) out["corr_tol"] = *c.corr_tol;
  if (c.lambda_tol) out["lambda_tol"] = *c.lambda_tol;
  if (c.max_newton) out["max_newton"] = *c.max_newton;
  if (c.starts) out["starts"] = *c.starts;
  if (c.seed) out["seed"] = *c.seed;
  return out;
}

inline RunConfig config_from(const json& obj) {
  RunConfig c;
  if (!obj.is_object()) throw ParseError("field 'config': expected an object");
  auto integer = [&](const char* name) -> std::optional<std::int64_t> {
    const auto it = obj.find(name);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_number_integer()) {
      throw ParseError(std::string("field 'config.") + name + "': expected an integer");
    }
    return it->get<std::int64_t>();
  };
  auto real = [&](const char* name) -> std::optional<double> {
    const auto it = obj.find(name);
    if (it == obj.end()) return std::nullopt;
    return detail::number(*it, std::string("config.") + name);
  };
  if (auto v = integer("steps")) c.steps = static_cast<int>(*v);
  c.corr_tol = real("corr_tol");
  c.lambda_tol = real("lambda_tol");
  if (auto v = integer("max_newton")) c.max_newton = static_cast<int>(*v);
  if (auto v = integer("starts")) c.starts = static_cast<int>(*v);
  if (const auto it = obj.find("seed"); it != obj.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      throw ParseError("field 'config.seed': expected a non-negative integer");
    }
    c.seed = it->get<std::uint64_t>();
  }
  return c;
}

inline json instance_json(const InstanceFile& inst) {
  json out = {{"version", kSchemaVersion}};
  if (!inst.id.empty()) out["id"] = inst.id;
  if (inst.physical) {
    out["kind"] = "physical";
    out["physical"] = physical_json(*inst.physical);
  } else if (inst.reduced) {
    out["kind"] = "reduced";
    out["coefficients"] = coefficients_json(inst.reduced->coef);
    if (inst.reduced->scale != 1.0) out["scale"] = inst.reduced->scale;
  }
  const json cfg = config_json(inst.config);
  if (!cfg.empty()) out["config"] = cfg;
  return out;
}

inline InstanceFile instance_from(const json& doc) {
  detail::check_version(doc);
  InstanceFile inst;
  if (const auto it = doc.find("id"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("field 'id': expected a string");
    inst.id = it->get<std::string>();
  }
  const json& kind = detail::field(doc, "kind", "");
  if (kind == "reduced") {
    ReducedProblem red;
    red.coef = coefficients_from(detail::field(doc, "coefficients", ""), "coefficients");
    if (const auto it = doc.find("scale"); it != doc.end()) red.scale = detail::number(*it, "scale");
    inst.reduced = red;
  } else if (kind == "physical") {
    inst.physical = physical_from(detail::field(doc, "physical", ""), "physical");
  } else {
    throw ParseError("field 'kind': expected \"reduced\" or \"physical\"");
  }
  if (const auto it = doc.find("config"); it != doc.end()) inst.config = config_from(*it);
  return inst;
}

inline InstanceFile parse_instance(const std::string& text) {
  return instance_from(parse_json(text));
}

/// A solution to be checked: real, or complex (routed through realify).
struct SolutionFile {
  std::optional<Vec4> real;
  std::optional<ComplexCandidate> complex;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
};

inline SolutionFile solution_from(const json& doc) {
  SolutionFile sol;
  const json& a = detail::field(doc, "a", "");
  if (!a.is_array() || a.size() != 4) throw ParseError("field 'a': expected 4 entries");
  if (a[0].is_array()) {
    ComplexCandidate c;
    for (int j = 0; j < 4; ++j) {
      const cplx z = detail::complex_value(a[j], "a[" + std::to_string(j) + "]");
      c.x(j) = z.real();
      c.y(j) = z.imag();
    }
    sol.complex = c;
  } else {
    sol.real = detail::vec4(a, "a");
  }
  if (const auto it = doc.find("lambda1"); it != doc.end()) sol.lambda1 = detail::number(*it, "lambda1");
  if (const auto it = doc.find("lambda2"); it != doc.end()) sol.lambda2 = detail::number(*it, "lambda2");
  return sol;
}

struct BranchRecord {
  int sign = +1;
  bool succeeded = false;
  std::string failure;
  int steps = 0;
  int step_halvings = 0;
  int newton_iterations = 0;
  double min_abs_det = 0.0;
  double max_correction = 0.0;
  int lambda_sign_violations = 0;
  double power = 0.0;

  bool operator==(const BranchRecord&) const = default;
};

/// One solved instance, as written by `solve` and `batch --format json`.
struct ResultRecord {
  std::string id;
  std::optional<std::uint64_t> seed;
  std::string kind = "reduced";
  std::string status = "ok";
  std::string chosen = "none";
  Coefficients coefficients;
  double scale = 1.0;
  Vec4 a = Vec4::Zero();
  double power = 0.0;
  double power_watts = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double kkt_residual = 0.0;
  std::optional<double> sinr1;
  std::optional<double> sinr2;
  std::optional<CMat> beamformer;
  std::vector<BranchRecord> branches;
  std::vector<std::string> warnings;
  bool oracle_fallback = false;
  std::optional<double> oracle_power;
  std::optional<double> oracle_gap;
  std::optional<double> wall_time;

  bool operator==(const ResultRecord& o) const {
    const bool beam_eq = beamformer.has_value() == o.beamformer.has_value() &&
                         (!beamformer || (beamformer->rows() == o.beamformer->rows() &&
                                          beamformer->cols() == o.beamformer->cols() &&
                                          *beamformer == *o.beamformer));
    return id == o.id && seed == o.seed && kind == o.kind && status == o.status &&
           chosen == o.chosen && coefficients == o.coefficients && scale == o.scale &&
           a == o.a && power == o.power && power_watts == o.power_watts && f1 == o.f1 &&
           f2 == o.f2 && lambda1 == o.lambda1 && lambda2 == o.lambda2 &&
           kkt_residual == o.kkt_residual && sinr1 == o.sinr1 && sinr2 == o.sinr2 &&
           beam_eq && branches == o.branches && warnings == o.warnings &&
           oracle_fallback == o.oracle_fallback && oracle_power == o.oracle_power &&
           oracle_gap == o.oracle_gap && wall_time == o.wall_time;
  }
};

inline std::string status_string(const SolveReport& rep) {
  if (!rep.has_solution) return "failed";
  return rep.status == SolveStatus::Ok ? "ok" : "no_feasible_branch";
}

inline ResultRecord make_record(const SolveReport& rep, const ReducedProblem& red) {
  ResultRecord rec;
  rec.status = status_string(rep);
  rec.chosen = std::string(to_string(rep.chosen));
  rec.coefficients = red.coef;
  rec.scale = red.scale;
  rec.a = rep.a;
  rec.power = rep.power;
  rec.power_watts = rep.power_watts;
  rec.f1 = rep.f1;
  rec.f2 = rep.f2;
  rec.lambda1 = rep.lambda1;
  rec.lambda2 = rep.lambda2;
  rec.kkt_residual = rep.kkt_residual;
  if (rep.physical) {
    rec.kind = "physical";
    rec.power_watts = rep.physical->power_watts;
    rec.sinr1 = rep.physical->sinr1;
    rec.sinr2 = rep.physical->sinr2;
    rec.beamformer = rep.physical->beamformer;
  }
  for (const auto& b : rep.branches) {
    if (!b) continue;
    BranchRecord br;
    br.sign = b->sign_choice;
    br.succeeded = b->succeeded;
    br.failure = b->failure;
    br.steps = b->diag.steps;
    br.step_halvings = b->diag.step_halvings;
    br.newton_iterations = b->diag.newton_iterations;
    br.min_abs_det = std::isfinite(b->diag.min_abs_det) ? b->diag.min_abs_det : 0.0;
    br.max_correction = b->diag.max_correction;
    br.lambda_sign_violations = b->diag.lambda_sign_violations;
    br.power = b->diag.trace.empty() ? 0.0 : b->diag.trace.back().power;
    rec.branches.push_back(std::move(br));
  }
  rec.warnings = rep.warnings;
  rec.oracle_fallback = rep.oracle_fallback;
  return rec;
}

inline json record_json(const ResultRecord& r) {
  json out = {{"version", kSchemaVersion},
              {"kind", r.kind},
              {"status", r.status},
              {"chosen", r.chosen},
              {"coefficients", coefficients_json(r.coefficients)},
              {"scale", r.scale},
              {"a", detail::vec_json(r.a)},
              {"power", r.power},
              {"power_watts", r.power_watts},
              {"f1", r.f1},
              {"f2", r.f2},
              {"lambda1", r.lambda1},
              {"lambda2", r.lambda2},
              {"kkt_residual", r.kkt_residual},
              {"oracle_fallback", r.oracle_fallback},
              {"warnings", r.warnings}};
  if (!r.id.empty()) out["id"] = r.id;
  if (r.seed) out["seed"] = *r.seed;
  if (r.sinr1) out["sinr1"] = *r.sinr1;
  if (r.sinr2) out["sinr2"] = *r.sinr2;
  if (r.beamformer) out["beamformer"] = detail::complex_matrix_json(*r.beamformer);
  json branches = json::array();
  for (const auto& b : r.branches) {
    branches.push_back({{"sign", b.sign},
                        {"succeeded", b.succeeded},
                        {"failure", b.failure},
                        {"steps", b.steps},
                        {"step_halvings", b.step_halvings},
                        {"newton_iterations", b.newton_iterations},
                        {"min_abs_det", b.min_abs_det},
                        {"max_correction", b.max_correction},
                        {"lambda_sign_violations", b.lambda_sign_violations},
                        {"power", b.power}});
  }
  out["branches"] = std::move(branches);
  if (r.oracle_power) out["oracle_power"] = *r.oracle_power;
  if (r.oracle_gap) out["oracle_gap"] = *r.oracle_gap;
  if (r.wall_time) out["wall_time"] = *r.wall_time;
  return out;
}

inline ResultRecord record_from(const json& doc) {
  detail::check_version(doc);
  ResultRecord r;
  auto str = [&](const char* name) {
    const json& v = detail::field(doc, name, "");
    if (!v.is_string()) throw ParseError(std::string("field '") + name + "': expected a string");
    return v.get<std::string>();
  };
  auto num = [&](const char* name) { return detail::number_field(doc, name, ""); };
  auto opt_num = [&](const char* name) -> std::optional<double> {
    const auto it = doc.find(name);
    if (it == doc.end()) return std::nullopt;
    return detail::number(*it, name);
  };
  if (doc.contains("id")) r.id = str("id");
  if (const auto it = doc.find("seed"); it != doc.end()) r.seed = it->get<std::uint64_t>();
  r.kind = str("kind");
  r.status = str("status");
  r.chosen = str("chosen");
  r.coefficients = coefficients_from(detail::field(doc, "coefficients", ""), "coefficients");
  r.scale = num("scale");
  r.a = detail::vec4(detail::field(doc, "a", ""), "a");
  r.power = num("power");
  r.power_watts = num("power_watts");
  r.f1 = num("f1");
  r.f2 = num("f2");
  r.lambda1 = num("lambda1");
  r.lambda2 = num("lambda2");
  r.kkt_residual = num("kkt_residual");
  r.oracle_fallback = detail::field(doc, "oracle_fallback", "").get<bool>();
  r.warnings = detail::field(doc, "warnings", "").get<std::vector<std::string>>();
  r.sinr1 = opt_num("sinr1");
  r.sinr2 = opt_num("sinr2");
  if (const auto it = doc.find("beamformer"); it != doc.end()) {
    r.beamformer = detail::complex_matrix(*it, "beamformer");
  }
  for (const auto& b : detail::field(doc, "branches", "")) {
    BranchRecord br;
    br.sign = b.at("sign").get<int>();
    br.succeeded = b.at("succeeded").get<bool>();
    br.failure = b.at("failure").get<std::string>();
    br.steps = b.at("steps").get<int>();
    br.step_halvings = b.at("step_halvings").get<int>();
    br.newton_iterations = b.at("newton_iterations").get<int>();
    br.min_abs_det = b.at("min_abs_det").get<double>();
    br.max_correction = b.at("max_correction").get<double>();
    br.lambda_sign_violations = b.at("lambda_sign_violations").get<int>();
    br.power = b.at("power").get<double>();
    r.branches.push_back(std::move(br));
  }
  r.oracle_power = opt_num("oracle_power");
  r.oracle_gap = opt_num("oracle_gap");
  r.wall_time = opt_num("wall_time");
  return r;
}

inline json summary_json(const CheckSummary& s) {
  json criteria = json::array();
  for (const auto& c : s.criteria) {
    criteria.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}});
  }
  json out = {{"version", kSchemaVersion},
              {"passed", s.all_passed()},
              {"power", s.power},
              {"f1", s.f1},
              {"f2", s.f2},
              {"lambda1", s.lambda1},
              {"lambda2", s.lambda2},
              {"multipliers_estimated", s.multipliers_estimated},
              {"criteria", std::move(criteria)}};
  if (s.oracle_power) out["oracle_power"] = *s.oracle_power;
  if (s.oracle_gap) out["oracle_gap"] = *s.oracle_gap;
  return out;
}

/// Round-trip decimal with 17 significant digits.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_optional(const std::optional<double>& v) {
  return v ? csv_number(*v) : std::string();
}

/// Column order for per-instance CSV rows.
inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "row",    "gamma1", "gamma2",  "instance", "seed",  "status", "chosen",
      "power",  "power_watts", "sinr1", "sinr2", "f1",    "f2",     "lambda1",
      "lambda2", "kkt_residual", "oracle_gap"};
  return cols;
}

inline std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

inline std::string csv_row(const ResultRecord& r, double gamma1, double gamma2,
                           std::uint64_t instance) {
  std::ostringstream os;
  os << "data," << csv_number(gamma1) << ',' << csv_number(gamma2) << ',' << instance << ','
     << (r.seed ? std::to_string(*r.seed) : std::string()) << ',' << r.status << ','
     << r.chosen << ',' << csv_number(r.power) << ',' << csv_number(r.power_watts) << ','
     << csv_optional(r.sinr1) << ',' << csv_optional(r.sinr2) << ',' << csv_number(r.f1)
     << ',' << csv_number(r.f2) << ',' << csv_number(r.lambda1) << ','
     << csv_number(r.lambda2) << ',' << csv_number(r.kkt_residual) << ','
     << csv_optional(r.oracle_gap);
  return os.str();
}

}  // namespace twr::io
