// Copyright 2026 The cbfqp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cbfqp/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "cbfqp/acc.hpp"
#include "cbfqp/errors.hpp"
#include "cbfqp/lk.hpp"
#include "cbfqp/verification.hpp"
#include "json.hpp"

#ifndef CBFQP_DEFAULT_FIXTURE_DIR
#define CBFQP_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace cbfqp::io {
namespace {

using Entry = ScenarioFile::Entry;

const std::set<std::string> kSections = {"system",     "params", "initial",
                                         "exogenous",  "sim",    "monitors",
                                         "controller", "verify"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string where(const std::string& source, int line) {
  return line > 0 ? source + ":" + std::to_string(line) + ": " : source + ": ";
}

double parse_number(const std::string& text, const std::string& source,
                    int line, const std::string& key) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ConfigError(where(source, line) + "'" + key +
                      "' expects a number, got '" + t + "'");
  }
  return v;
}

std::vector<double> parse_list(const Entry& e, const std::string& source) {
  std::vector<double> out;
  for (const std::string& part : split(e.value, ',')) {
    out.push_back(parse_number(part, source, e.line, e.key));
  }
  return out;
}

// Reads the keys of one section against an allow-list.
class SectionReader {
 public:
  SectionReader(const ScenarioFile& file, std::string section,
                std::set<std::string> allowed)
      : file_(file), section_(std::move(section)) {
    for (const Entry& e : file.section(section_)) {
      if (!allowed.count(e.key)) {
        std::string keys;
        for (const auto& k : allowed) keys += (keys.empty() ? "" : ", ") + k;
        throw ConfigError(where(file.source(), e.line) + "unknown key '" +
                          e.key + "' in [" + section_ + "]" +
                          (keys.empty() ? "" : " (allowed: " + keys + ")"));
      }
    }
  }

  std::optional<Entry> get(const std::string& key) const {
    return file_.find(section_, key);
  }
  double number(const std::string& key, double fallback) const {
    auto e = get(key);
    return e ? parse_number(e->value, file_.source(), e->line, key) : fallback;
  }
  double required(const std::string& key) const {
    auto e = get(key);
    if (!e) {
      throw ConfigError(where(file_.source(), 0) + "missing '" + key +
                        "' in [" + section_ + "]");
    }
    return parse_number(e->value, file_.source(), e->line, key);
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    auto e = get(key);
    return e ? e->value : fallback;
  }
  std::vector<double> list(const std::string& key,
                           std::vector<double> fallback) const {
    auto e = get(key);
    return e ? parse_list(*e, file_.source()) : fallback;
  }

 private:
  const ScenarioFile& file_;
  std::string section_;
};

struct ParamSlot {
  const char* name;
  double* slot;
};

void read_params(const ScenarioFile& file, const std::vector<ParamSlot>& slots,
                 const std::set<std::string>& unpublished,
                 std::vector<std::string>& notices) {
  std::set<std::string> allowed;
  for (const auto& s : slots) allowed.insert(s.name);
  SectionReader reader(file, "params", allowed);
  std::string defaulted;
  for (const auto& s : slots) {
    if (reader.get(s.name)) {
      *s.slot = reader.number(s.name, *s.slot);
    } else {
      std::ostringstream os;
      os << s.name << "=" << *s.slot;
      if (unpublished.count(s.name)) os << " (assumed)";
      defaulted += (defaulted.empty() ? "" : ", ") + os.str();
    }
  }
  if (!defaulted.empty()) {
    notices.push_back("defaulted parameters: " + defaulted);
  }
}

struct SimSettings {
  double horizon;
  double dt;
  double dt_max;
};

SimSettings read_sim(const ScenarioFile& file) {
  SectionReader sim(file, "sim", {"horizon", "dt", "dt_max"});
  return {sim.required("horizon"), sim.number("dt", 1e-3),
          sim.number("dt_max", 0.1)};
}

// Threshold for a monitor entry: a number, or "auto" resolved by the caller.
double monitor_threshold(const Entry& e, const std::string& source,
                         double auto_value) {
  if (trim(e.value) == "auto") return auto_value;
  return parse_number(e.value, source, e.line, e.key);
}

double state_tolerance(double h0) { return -1e-6 * (1.0 + std::abs(h0)); }

std::string fixture_id(const ScenarioFile& file) {
  if (auto id = file.find("system", "id")) return id->value;
  return std::filesystem::path(file.source()).stem().string();
}

// ---------------------------------------------------------------- acc

BuiltScenario build_acc(const ScenarioFile& file) {
  BuiltScenario out;
  acc::AccParams p;
  read_params(file,
              {{"M", &p.M},           {"f0", &p.f0},
               {"f1", &p.f1},         {"f2", &p.f2},
               {"v_d", &p.v_d},       {"tau_d", &p.tau_d},
               {"a_f", &p.a_f},       {"a_f_prime", &p.a_f_prime},
               {"a_l", &p.a_l},       {"a_l_prime", &p.a_l_prime},
               {"g", &p.g},           {"c", &p.c},
               {"gamma", &p.gamma},   {"p_sc", &p.p_sc}},
              {"a_l", "a_l_prime"}, out.notices);
  try {
    p.validate();
  } catch (const ConstructionError& e) {
    throw ConfigError(where(file.source(), 0) + e.what());
  }

  SectionReader init(file, "initial", {"v_f", "v_l", "D"});
  Vector x0(3);
  x0 << init.required("v_f"), init.required("v_l"), init.required("D");

  SectionReader ctl(file, "controller", {"level", "variant", "barrier"});
  const std::string level = ctl.text("level", "basic");
  const std::string variant = ctl.text("variant", "optimal");
  const std::string barrier = ctl.text("barrier", "log");
  acc::AccLevel lvl;
  if (level == "basic") lvl = acc::AccLevel::kBasic;
  else if (level == "force") lvl = acc::AccLevel::kForce;
  else throw ConfigError(where(file.source(), ctl.get("level")->line) +
                         "level must be basic or force");
  acc::MarginVariant var;
  if (variant == "optimal") var = acc::MarginVariant::kOptimal;
  else if (variant == "conservative") var = acc::MarginVariant::kConservative;
  else throw ConfigError(where(file.source(), ctl.get("variant")->line) +
                         "variant must be optimal or conservative");
  acc::BarrierKind kind;
  if (barrier == "log") kind = acc::BarrierKind::kLog;
  else if (barrier == "inverse") kind = acc::BarrierKind::kInverse;
  else if (barrier == "zeroing") kind = acc::BarrierKind::kZeroing;
  else throw ConfigError(where(file.source(), ctl.get("barrier")->line) +
                         "barrier must be log, inverse or zeroing");

  SectionReader exo(file, "exogenous", {"segment"});
  std::vector<ExogenousProfile::Segment> segs;
  for (const Entry& e : file.section("exogenous")) {
    const auto v = parse_list(e, file.source());
    if (v.size() != 2) {
      throw ConfigError(where(file.source(), e.line) +
                        "segment expects 't_start, a_L'");
    }
    segs.push_back({v[0], Vector::Constant(1, v[1])});
  }

  const SimSettings sim = read_sim(file);
  Scenario& sc = out.scenario;
  sc.id = fixture_id(file);
  try {
    sc.controller = control_law(acc::acc_qp_spec(p, lvl, var, kind));
    sc.exogenous = ExogenousProfile(std::move(segs));
  } catch (const ConstructionError& e) {
    throw ConfigError(where(file.source(), 0) + e.what());
  }
  sc.system = acc::acc_dynamics(p);
  sc.x0 = x0;
  sc.horizon = sim.horizon;
  sc.dt = sim.dt;
  sc.dt_max = sim.dt_max;
  sc.exogenous_bounds = std::make_pair(Vector::Constant(1, -p.a_l * p.g),
                                       Vector::Constant(1, p.a_l_prime * p.g));
  sc.state_names = {"v_f", "v_l", "D"};
  sc.input_names = {"u"};

  SectionReader mon(file, "monitors",
                    {"headway", "force_optimal", "force_conservative",
                     "input_bound"});
  for (const Entry& e : file.section("monitors")) {
    Monitor m;
    m.name = e.key;
    if (e.key == "headway" || e.key == "force_optimal" ||
        e.key == "force_conservative") {
      const ScalarField h =
          e.key == "headway"
              ? acc::headway_field(p)
              : acc::force_field(p, e.key == "force_optimal"
                                        ? acc::MarginVariant::kOptimal
                                        : acc::MarginVariant::kConservative);
      m.value = [h](const Vector& x, const Vector&, const Vector&) {
        return h.value(x);
      };
      m.threshold = monitor_threshold(e, file.source(),
                                      state_tolerance(h.value(x0)));
    } else {
      const double lo = -p.a_f * p.M * p.g;
      const double hi = p.a_f_prime * p.M * p.g;
      m.value = [lo, hi](const Vector&, const Vector& u, const Vector&) {
        return std::min(u[0] - lo, hi - u[0]);
      };
      m.threshold = monitor_threshold(e, file.source(), -1e-6);
    }
    sc.monitors.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- lk

BuiltScenario build_lk(const ScenarioFile& file) {
  BuiltScenario out;
  lk::LkParams p;
  read_params(file,
              {{"M", &p.M},         {"I_z", &p.I_z},     {"a", &p.a},
               {"b", &p.b},         {"C_f", &p.C_f},     {"C_r", &p.C_r},
               {"v0", &p.v0},       {"y_max", &p.y_max}, {"a_max", &p.a_max},
               {"gamma", &p.gamma}, {"p_sc", &p.p_sc},   {"lqr_R", &p.lqr_R},
               {"K_p", &p.K_p},     {"K_d", &p.K_d}},
              {}, out.notices);
  try {
    p.validate();
  } catch (const ConstructionError& e) {
    throw ConfigError(where(file.source(), 0) + e.what());
  }

  SectionReader init(file, "initial", {"y", "nu", "psi", "r"});
  Vector x0(4);
  x0 << init.number("y", 0.0), init.number("nu", 0.0), init.number("psi", 0.0),
      init.number("r", 0.0);

  SectionReader ctl(file, "controller", {"barrier"});
  const std::string barrier = ctl.text("barrier", "log");
  lk::LkBarrierKind kind;
  if (barrier == "log") kind = lk::LkBarrierKind::kLog;
  else if (barrier == "zeroing") kind = lk::LkBarrierKind::kZeroing;
  else throw ConfigError(where(file.source(), ctl.get("barrier")->line) +
                         "barrier must be log or zeroing");
  SectionReader exo(file, "exogenous", {"segment", "curve"});
  std::vector<ExogenousProfile::Segment> segs;
  for (const Entry& e : file.section("exogenous")) {
    const auto v = parse_list(e, file.source());
    if (v.size() != 2) {
      throw ConfigError(where(file.source(), e.line) + e.key +
                        " expects two comma-separated numbers");
    }
    double r_d = v[1];
    if (e.key == "curve") {
      // Radius of curvature; 0 or inf means a straight section.
      r_d = (v[1] == 0.0 || std::isinf(v[1])) ? 0.0 : p.v0 / v[1];
    }
    segs.push_back({v[0], Vector::Constant(1, r_d)});
  }

  const SimSettings sim = read_sim(file);
  Scenario& sc = out.scenario;
  sc.id = fixture_id(file);
  try {
    sc.controller = control_law(lk::lk_qp_spec(p, kind));
    sc.exogenous = ExogenousProfile(std::move(segs));
  } catch (const ConstructionError& e) {
    throw ConfigError(where(file.source(), 0) + e.what());
  }
  sc.system = lk::lk_dynamics(p);
  sc.x0 = x0;
  sc.horizon = sim.horizon;
  sc.dt = sim.dt;
  sc.dt_max = sim.dt_max;
  sc.state_names = {"y", "nu", "psi", "r"};
  sc.input_names = {"u"};

  SectionReader mon(file, "monitors", {"lateral", "lateral_accel", "barrier"});
  for (const Entry& e : file.section("monitors")) {
    Monitor m;
    m.name = e.key;
    if (e.key == "lateral") {
      m.value = [p](const Vector& x, const Vector&, const Vector&) {
        return p.y_max - std::abs(x[lk::kY]);
      };
      m.threshold = monitor_threshold(e, file.source(), -1e-3);
    } else if (e.key == "lateral_accel") {
      m.value = [p](const Vector& x, const Vector& u, const Vector& w) {
        return p.a_max - std::abs(lk::lateral_acceleration(p, x, u[0], w[0]));
      };
      m.threshold = monitor_threshold(e, file.source(), -1e-6);
    } else {
      const ScalarField h = lk::lk_barrier_field(p);
      m.value = [h](const Vector& x, const Vector&, const Vector&) {
        return h.value(x);
      };
      m.threshold = monitor_threshold(e, file.source(),
                                      state_tolerance(h.value(x0)));
    }
    sc.monitors.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- verify

std::string fmt_num(double v) {
  std::ostringstream os;
  os << std::setprecision(8) << v;
  return os.str();
}

VerifyReport verify_decay(const ScenarioFile& file) {
  VerifyReport rep;
  rep.id = fixture_id(file);
  SectionReader params(file, "params", {"rate"});
  const double rate = params.number("rate", 1.0);
  SectionReader v(file, "verify",
                  {"k", "lower", "upper", "samples", "seed", "r_grid"});
  const int k = static_cast<int>(v.number("k", 1));
  const double lo = v.number("lower", 0.01);
  const double hi = v.number("upper", 1.0);
  SamplingOptions opt;
  opt.samples = static_cast<int>(v.number("samples", 10000));
  opt.seed = static_cast<std::uint64_t>(v.number("seed", 1));
  const std::vector<double> r_grid = v.list("r_grid", {0.0, 0.25, 0.5, 1.0});
  if (!(lo > 0.0) || !(hi > lo)) {
    throw ConfigError(where(file.source(), 0) + "need 0 < lower < upper");
  }

  const ControlAffineSystem sys(
      "decay", 1, 1, 0,
      [rate](const Vector& x, const Vector&) -> Vector { return -rate * x; },
      [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); });
  const ScalarField h = ScalarField::closed_form(
      "x", [](const Vector& x) { return x[0]; },
      [](const Vector&) { return Vector::Ones(1); });

  const GammaEstimate g = estimate_contractivity_gamma(
      sys, h, k, [lo, hi](std::mt19937_64& rng) {
        return Vector::Constant(1, std::uniform_real_distribution<>(lo, hi)(rng));
      },
      Vector(), opt);
  const SafeSetDescriptor set(h, [hi](std::mt19937_64& rng) {
    return Vector::Constant(1, std::uniform_real_distribution<>(-hi, hi)(rng));
  });
  const auto alpha = estimate_zbf_alpha(sys, set, r_grid, Vector(), opt);

  std::ostringstream os;
  nlohmann::json j;
  j["fixture"] = rep.id;
  j["gamma"] = {{"k", k}, {"estimate", g.gamma}, {"samples", g.samples}};
  os << "fixture " << rep.id << ": x' = -" << rate << " x, h = x\n";
  os << "gamma_hat (k = " << k << ", region [" << lo << ", " << hi
     << "]) = " << fmt_num(g.gamma) << " over " << g.samples << " samples\n";
  os << "r            alpha_hat     inf L_f h     samples\n";
  for (const auto& a : alpha) {
    os << std::left << std::setw(13) << fmt_num(a.r) << std::setw(14)
       << fmt_num(a.alpha) << std::setw(14) << fmt_num(a.lower_envelope)
       << a.slice_samples << "\n";
    j["alpha"].push_back({{"r", a.r},
                          {"alpha", a.alpha},
                          {"lower_envelope", a.lower_envelope},
                          {"samples", a.slice_samples}});
  }
  rep.text = os.str();
  rep.json = j.dump(2);
  return rep;
}

VerifyReport verify_remark9(const ScenarioFile& file) {
  VerifyReport rep;
  rep.id = fixture_id(file);
  SectionReader params(file, "params", {});
  SectionReader v(file, "verify", {"r", "radii", "samples", "seed"});
  const double r = v.number("r", 2.0);
  const std::vector<double> radii = v.list("radii", {1.0, 10.0, 100.0, 1000.0});
  SamplingOptions opt;
  opt.samples = static_cast<int>(v.number("samples", 10000));
  opt.seed = static_cast<std::uint64_t>(v.number("seed", 1));

  // x1' = -x2 / 2, x2' = 1 - x1^3, h = x2 - x1^2, so L_f h = x1 h + 1.
  const ControlAffineSystem sys(
      "remark9", 2, 1, 0,
      [](const Vector& x, const Vector&) -> Vector {
        Vector dx(2);
        dx << -0.5 * x[1], 1.0 - x[0] * x[0] * x[0];
        return dx;
      },
      [](const Vector&) -> Matrix { return Matrix::Zero(2, 1); });
  const ScalarField h = ScalarField::closed_form(
      "x2 - x1^2", [](const Vector& x) { return x[1] - x[0] * x[0]; },
      [](const Vector& x) {
        Vector g(2);
        g << -2.0 * x[0], 1.0;
        return g;
      });

  std::ostringstream os;
  nlohmann::json j;
  j["fixture"] = rep.id;
  j["r"] = r;
  os << "fixture " << rep.id << ": slice 0 <= h <= " << r << "\n";
  os << "radius       inf L_f h     alpha_hat     samples\n";
  std::vector<double> envelope;
  for (double R : radii) {
    // Parameterized by (x1, level): x = (x1, x1^2 + s).
    const SafeSetDescriptor set(h, [R, r](std::mt19937_64& rng) {
      const double x1 = std::uniform_real_distribution<>(-R, R)(rng);
      const double s = std::uniform_real_distribution<>(-1.0, r + 1.0)(rng);
      Vector x(2);
      x << x1, x1 * x1 + s;
      return x;
    });
    SamplingOptions o = opt;
    o.shell_samples = 0;
    const auto est = estimate_zbf_alpha(sys, set, {r}, Vector(), o).front();
    envelope.push_back(est.lower_envelope);
    os << std::left << std::setw(13) << fmt_num(R) << std::setw(14)
       << fmt_num(est.lower_envelope) << std::setw(14) << fmt_num(est.alpha)
       << est.slice_samples << "\n";
    j["rows"].push_back({{"radius", R},
                         {"lower_envelope", est.lower_envelope},
                         {"alpha", est.alpha},
                         {"samples", est.slice_samples}});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < envelope.size(); ++i) {
    decreasing = decreasing && envelope[i] < envelope[i - 1];
  }
  if (decreasing && envelope.size() > 1) {
    rep.warnings.push_back(
        "inf L_f h on the slice decreases without bound as the sampling "
        "region grows: no finite alpha certifies h as a zeroing barrier");
  }
  j["diverging"] = decreasing && envelope.size() > 1;
  rep.text = os.str();
  rep.json = j.dump(2);
  return rep;
}

VerifyReport verify_comparison(const ScenarioFile& file) {
  VerifyReport rep;
  rep.id = fixture_id(file);
  SectionReader params(file, "params", {});
  SectionReader v(file, "verify", {"alpha", "y0", "t_end", "points"});
  const std::string name = v.text("alpha", "linear");
  const std::vector<double> y0s = v.list("y0", {0.1, 1.0, 10.0});
  const double t_end = v.number("t_end", 10.0);
  const int points = static_cast<int>(v.number("points", 101));
  if (points < 2 || !(t_end > 0.0)) {
    throw ConfigError(where(file.source(), 0) + "need points >= 2, t_end > 0");
  }

  std::optional<ClassKFunction> alpha;
  if (name == "linear") alpha = ClassKFunction::linear(1.0);
  else if (name == "square") alpha = ClassKFunction::power(1.0, 2.0);
  else if (name == "atan")
    alpha = ClassKFunction::custom("atan", [](double s) { return std::atan(s); },
                                   true);
  else throw ConfigError(where(file.source(), v.get("alpha")->line) +
                         "alpha must be linear, square or atan");

  std::vector<double> times;
  for (int i = 0; i < points; ++i) times.push_back(t_end * i / (points - 1));

  std::ostringstream os;
  nlohmann::json j;
  j["fixture"] = rep.id;
  j["alpha"] = name;
  os << "fixture " << rep.id << ": z' = -alpha(z) z^2 with alpha = " << name
     << ", y = 1 / z\n";
  os << "y0           y(t_end)      max |y - sqrt(2t + y0^2)|  monotone\n";
  for (double y0 : y0s) {
    const auto ys = comparison_ode_trajectory(*alpha, y0, times);
    double err = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      err = std::max(err, std::abs(ys[i] - std::sqrt(2.0 * times[i] + y0 * y0)));
      if (i > 0 && ys[i] < ys[i - 1]) monotone = false;
      if (!(ys[i] >= y0) || !std::isfinite(ys[i])) monotone = false;
    }
    const bool closed_form = name == "linear";
    os << std::left << std::setw(13) << fmt_num(y0) << std::setw(14)
       << fmt_num(ys.back()) << std::setw(27)
       << (closed_form ? fmt_num(err) : std::string("-"))
       << (monotone ? "yes" : "no") << "\n";
    nlohmann::json row = {{"y0", y0}, {"y_end", ys.back()}, {"monotone", monotone}};
    if (closed_form) row["max_error"] = err;
    j["rows"].push_back(row);
    if (!monotone) rep.warnings.push_back("solution not monotone for y0 = " + fmt_num(y0));
  }
  rep.text = os.str();
  rep.json = j.dump(2);
  return rep;
}

// ---------------------------------------------------------------- csv

void write_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

// ---------------------------------------------------------------- file

ScenarioFile ScenarioFile::parse(std::istream& in, const std::string& source) {
  ScenarioFile file;
  file.source_ = source;
  std::string raw;
  std::string current;
  std::set<std::pair<std::string, std::string>> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw ConfigError(where(source, line) + "unterminated section header");
      }
      current = trim(text.substr(1, text.size() - 2));
      if (!kSections.count(current)) {
        throw ConfigError(where(source, line) + "unknown section [" + current + "]");
      }
      file.sections_[current];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where(source, line) + "expected 'key = value'");
    }
    if (current.empty()) {
      throw ConfigError(where(source, line) + "entry before any [section]");
    }
    Entry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(where(source, line) + "empty key");
    if (current != "exogenous" && !seen.insert({current, e.key}).second) {
      throw ConfigError(where(source, line) + "duplicate key '" + e.key + "'");
    }
    file.sections_[current].push_back(std::move(e));
  }
  if (!file.find("system", "type")) {
    throw ConfigError(where(source, 0) + "missing 'type' in [system]");
  }
  return file;
}

ScenarioFile ScenarioFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  return parse(in, path);
}

const std::vector<Entry>& ScenarioFile::section(const std::string& name) const {
  static const std::vector<Entry> kEmpty;
  auto it = sections_.find(name);
  return it == sections_.end() ? kEmpty : it->second;
}

std::optional<Entry> ScenarioFile::find(const std::string& sec,
                                        const std::string& key) const {
  for (const Entry& e : section(sec)) {
    if (e.key == key) return e;
  }
  return std::nullopt;
}

std::string ScenarioFile::system_type() const {
  auto e = find("system", "type");
  return e ? e->value : "";
}

void ScenarioFile::set(const std::string& sec, const std::string& key,
                       const std::string& value) {
  if (!kSections.count(sec)) {
    throw ConfigError("override: unknown section '" + sec + "'");
  }
  auto& entries = sections_[sec];
  for (Entry& e : entries) {
    if (e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  }
  entries.push_back({key, value, 0});
}

void ScenarioFile::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    set(key.substr(0, dot), key.substr(dot + 1), value);
    return;
  }
  std::vector<std::string> holders;
  for (const auto& [name, entries] : sections_) {
    if (name == "exogenous") continue;
    for (const Entry& e : entries) {
      if (e.key == key) holders.push_back(name);
    }
  }
  if (holders.size() > 1) {
    throw ConfigError("override '" + key + "' is ambiguous; use section.key");
  }
  set(holders.empty() ? "params" : holders.front(), key, value);
}

FixtureKind fixture_kind(const ScenarioFile& file) {
  const std::string t = file.system_type();
  if (t == "acc" || t == "lk") return FixtureKind::kSimulation;
  if (t == "decay" || t == "remark9" || t == "comparison_ode") {
    return FixtureKind::kVerification;
  }
  throw ConfigError(where(file.source(), file.find("system", "type")->line) +
                    "unknown system type '" + t + "'");
}

BuiltScenario build_scenario(const ScenarioFile& file) {
  SectionReader sys(file, "system", {"type", "id"});
  if (fixture_kind(file) != FixtureKind::kSimulation) {
    throw ConfigError(where(file.source(), 0) + "'" + file.system_type() +
                      "' is a verification fixture; use the verify command");
  }
  SectionReader ver(file, "verify", {});
  BuiltScenario out =
      file.system_type() == "acc" ? build_acc(file) : build_lk(file);
  out.scenario.validate();
  return out;
}

VerifyReport run_verification(const ScenarioFile& file) {
  SectionReader sys(file, "system", {"type", "id"});
  if (fixture_kind(file) != FixtureKind::kVerification) {
    throw ConfigError(where(file.source(), 0) + "'" + file.system_type() +
                      "' has no sampling certificates; use the run command");
  }
  for (const char* s : {"initial", "exogenous", "controller", "sim", "monitors"}) {
    SectionReader none(file, s, {});
  }
  const std::string t = file.system_type();
  if (t == "decay") return verify_decay(file);
  if (t == "remark9") return verify_remark9(file);
  return verify_comparison(file);
}

// ---------------------------------------------------------------- csv

void write_csv(const Trajectory& traj, std::ostream& out) {
  out << "t";
  for (const auto& n : traj.state_names) out << ',' << n;
  for (const auto& n : traj.input_names) out << ',' << n;
  out << ",delta";
  for (const auto& n : traj.monitor_names) out << ',' << n;
  out << ",qp_status,active_set\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    write_double(out, traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) {
      out << ',';
      write_double(out, traj.states[k][i]);
    }
    for (Eigen::Index i = 0; i < traj.inputs[k].size(); ++i) {
      out << ',';
      write_double(out, traj.inputs[k][i]);
    }
    out << ',';
    write_double(out, traj.deltas[k]);
    for (double v : traj.monitor_values[k]) {
      out << ',';
      write_double(out, v);
    }
    out << ',' << traj.qp_status[k] << ',';
    for (std::size_t i = 0; i < traj.active_sets[k].size(); ++i) {
      out << (i ? ";" : "") << traj.active_sets[k][i];
    }
    out << '\n';
  }
}

int CsvTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> CsvTable::series(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw ConfigError("CSV has no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV: empty input");
  // Keep empty trailing fields (an empty active set).
  auto fields = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  const auto header = fields(line);
  int status_col = -1;
  int active_col = -1;
  std::vector<int> numeric;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "qp_status") status_col = static_cast<int>(i);
    else if (header[i] == "active_set") active_col = static_cast<int>(i);
    else {
      table.columns.push_back(header[i]);
      numeric.push_back(static_cast<int>(i));
    }
  }
  if (table.column("t") != 0) throw ConfigError("CSV: first column must be t");
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = fields(line);
    if (f.size() != header.size()) {
      throw ConfigError("CSV row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " fields");
    }
    std::vector<double> values;
    for (int i : numeric) {
      char* end = nullptr;
      const double v = std::strtod(f[i].c_str(), &end);
      if (f[i].empty() || *end != '\0') {
        throw ConfigError("CSV row " + std::to_string(row) + ": bad number '" +
                          f[i] + "'");
      }
      values.push_back(v);
    }
    table.rows.push_back(std::move(values));
    table.qp_status.push_back(status_col >= 0 ? f[status_col] : "");
    table.active_set.push_back(active_col >= 0 ? f[active_col] : "");
  }
  return table;
}

CsvTable to_table(const Trajectory& traj) {
  std::stringstream ss;
  write_csv(traj, ss);
  return read_csv(ss);
}

// ---------------------------------------------------------------- reports

bool RunReport::pass() const {
  if (aborted) return false;
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const MonitorVerdict& v) { return v.pass(); });
}

RunReport make_report(const Trajectory& traj, double runtime_s) {
  RunReport rep;
  rep.scenario_id = traj.scenario_id;
  rep.verdicts = monitor_verdicts(traj);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (std::isfinite(traj.deltas[k])) {
      rep.max_abs_delta = std::max(rep.max_abs_delta, std::abs(traj.deltas[k]));
    }
    ++rep.status_histogram[traj.qp_status[k]];
    if (traj.fallback[k]) ++rep.fallback_steps;
  }
  rep.aborted = traj.aborted;
  rep.abort_reason = traj.abort_reason;
  rep.runtime_s = runtime_s;
  return rep;
}

std::string report_text(const RunReport& rep) {
  std::ostringstream os;
  os << "scenario " << rep.scenario_id << ": " << (rep.pass() ? "PASS" : "FAIL")
     << "\n";
  for (const auto& v : rep.verdicts) {
    os << "  monitor " << std::left << std::setw(20) << v.name << " min "
       << std::setw(14) << fmt_num(v.min_value) << " at t = " << std::setw(10)
       << fmt_num(v.min_time);
    if (v.first_violation) os << " first violation at t = " << *v.first_violation;
    else os << " ok";
    os << "\n";
  }
  os << "  max |delta| " << fmt_num(rep.max_abs_delta) << "\n";
  os << "  qp status";
  for (const auto& [k, n] : rep.status_histogram) os << ' ' << k << '=' << n;
  os << "\n  fallback steps " << rep.fallback_steps << "\n";
  if (rep.aborted) os << "  aborted: " << rep.abort_reason << "\n";
  os << "  runtime " << std::fixed << std::setprecision(3) << rep.runtime_s
     << " s\n";
  return os.str();
}

std::string report_json(const RunReport& rep) {
  nlohmann::json j;
  j["scenario"] = rep.scenario_id;
  j["pass"] = rep.pass();
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : rep.verdicts) {
    nlohmann::json o = {{"name", v.name},
                        {"min", std::isfinite(v.min_value)
                                    ? nlohmann::json(v.min_value)
                                    : nlohmann::json(nullptr)},
                        {"min_time", v.min_time},
                        {"pass", v.pass()}};
    o["first_violation"] = v.first_violation ? nlohmann::json(*v.first_violation)
                                             : nlohmann::json(nullptr);
    j["verdicts"].push_back(o);
  }
  j["max_abs_delta"] = rep.max_abs_delta;
  j["qp_status"] = rep.status_histogram;
  j["fallback_steps"] = rep.fallback_steps;
  j["aborted"] = rep.aborted;
  if (rep.aborted) j["abort_reason"] = rep.abort_reason;
  j["runtime_s"] = rep.runtime_s;
  return j.dump(2);
}

// ---------------------------------------------------------------- compare

Comparison compare_tables(const std::string& lhs_name, const CsvTable& lhs,
                          const std::string& rhs_name, const CsvTable& rhs) {
  Comparison cmp;
  cmp.lhs = lhs_name;
  cmp.rhs = rhs_name;
  const std::vector<double> ta = lhs.series("t");
  const std::vector<double> tb = rhs.series("t");
  bool same = ta.size() == tb.size();
  for (std::size_t i = 0; same && i < ta.size(); ++i) {
    same = std::abs(ta[i] - tb[i]) <= 1e-12 * (1.0 + std::abs(ta[i]));
  }
  cmp.resampled = !same;

  // Linear interpolation of rhs at t; NaN outside its time range.
  auto sample = [&](const std::vector<double>& ys, double t) {
    if (tb.empty() || t < tb.front() || t > tb.back()) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const auto it = std::lower_bound(tb.begin(), tb.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - tb.begin());
    if (*it == t || j == 0) return ys[j];
    const double w = (t - tb[j - 1]) / (tb[j] - tb[j - 1]);
    return (1.0 - w) * ys[j - 1] + w * ys[j];
  };

  auto t_outside = [&](double t) {
    return tb.empty() || t < tb.front() || t > tb.back();
  };

  auto tv = [](const std::vector<double>& ys) {
    double s = 0.0;
    for (std::size_t i = 1; i < ys.size(); ++i) {
      if (std::isfinite(ys[i]) && std::isfinite(ys[i - 1])) s += std::abs(ys[i] - ys[i - 1]);
    }
    return s;
  };

  for (const std::string& name : lhs.columns) {
    if (!name.empty() && name.front() == 'u') {
      cmp.tv_lhs += tv(lhs.series(name));
      if (rhs.column(name) >= 0) cmp.tv_rhs += tv(rhs.series(name));
    }
    if (name == "t" || rhs.column(name) < 0) continue;
    const std::vector<double> a = lhs.series(name);
    const std::vector<double> b = rhs.series(name);
    SignalDifference d{name, 0.0, 0.0};
    int n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double bv = same ? b[i] : sample(b, ta[i]);
      if (!same && t_outside(ta[i])) continue;
      const double diff = (std::isnan(a[i]) && std::isnan(bv)) ? 0.0
                                                                : std::abs(a[i] - bv);
      d.max_abs = std::max(d.max_abs, diff);
      d.mean_abs += diff;
      ++n;
    }
    if (n > 0) d.mean_abs /= n;
    cmp.signals.push_back(d);
  }
  return cmp;
}

std::string comparison_text(const std::vector<Comparison>& cmps) {
  std::ostringstream os;
  for (const auto& c : cmps) {
    os << "compare " << c.lhs << " vs " << c.rhs << "\n";
    if (c.resampled) {
      os << "  warning: time grids differ; " << c.rhs
         << " resampled onto the first grid by linear interpolation\n";
    }
    os << "  signal           max |diff|        mean |diff|\n";
    for (const auto& s : c.signals) {
      os << "  " << std::left << std::setw(17) << s.name << std::setw(18)
         << fmt_num(s.max_abs) << fmt_num(s.mean_abs) << "\n";
    }
    os << "  total variation of u: " << fmt_num(c.tv_lhs) << " (" << c.lhs
       << "), " << fmt_num(c.tv_rhs) << " (" << c.rhs << ")\n";
  }
  return os.str();
}

std::string fixture_dir() {
  if (const char* env = std::getenv("CBFQP_FIXTURES"); env && *env) return env;
  return CBFQP_DEFAULT_FIXTURE_DIR;
}

std::vector<std::string> list_fixtures(const std::string& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".scenario") {
      out.push_back(entry.path().stem().string());
    }
  }
  if (ec) throw ConfigError("cannot list fixture directory '" + dir + "'");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cbfqp::io
