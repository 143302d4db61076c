#include "guided/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "guided/adaptive.hpp"
#include "guided/duty_cycle.hpp"
#include "guided/robust.hpp"

namespace guided {

using nlohmann::json;

namespace {

void warn(std::vector<std::string>* sink, std::string msg) {
  if (sink) sink->push_back(std::move(msg));
}

[[noreturn]] void schema(const std::string& msg) { fail(ErrorKind::schema, msg); }

std::string stage_label(const json& s, std::size_t i) {
  if (s.is_object() && s.contains("name") && s["name"].is_string()) {
    return "stage '" + s["name"].get<std::string>() + "'";
  }
  return "stage " + std::to_string(i + 1);
}

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) schema(where + ": missing '" + key + "'");
  if (!obj[key].is_number()) schema(where + ": '" + key + "' must be a number");
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) schema(where + ": '" + key + "' is not finite");
  return v;
}

std::optional<double> maybe_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return number(obj, key, where);
}

std::vector<double> pmf(const json& s, const char* key, const std::string& where,
                        std::vector<std::string>* warnings) {
  if (!s.contains(key) || !s[key].is_array()) schema(where + ": '" + key + "' must be an array");
  std::vector<double> p;
  for (const auto& v : s[key]) {
    if (!v.is_number()) schema(where + ": '" + key + "' holds a non-number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < 0.0) schema(where + ": '" + key + "' has a negative entry");
    p.push_back(x);
  }
  double sum = 0.0;
  for (double x : p) sum += x;
  const double err = std::abs(sum - 1.0);
  if (err > 1e-6) {
    schema(fmt::format("{}: '{}' sums to {:.17g}, not 1", where, key, sum));
  }
  if (err > 1e-9) {
    for (double& x : p) x /= sum;
    warn(warnings, fmt::format("{}: '{}' sums to {:.17g}; renormalized", where, key, sum));
  }
  return p;
}

json stage_json(const StageEntry& s) {
  json j{{"name", s.name},
         {"p0", s.p0},
         {"p1", s.p1},
         {"on_cost", s.on_cost},
         {"off_cost", s.off_cost},
         {"uncertainty",
          {{"eps0", s.uncertainty.eps0},
           {"eps1", s.uncertainty.eps1},
           {"nu0", s.uncertainty.nu0},
           {"nu1", s.uncertainty.nu1}}}};
  if (s.band) {
    j["band"] = {{"lower", s.band->lower}, {"upper", s.band->upper}};
    j["residuals"] = {s.residual0, s.residual1};
  }
  return j;
}

json risk_json(const RiskReport& r) {
  return {{"total", r.total},           {"inter_miss", r.inter_miss},
          {"final_miss", r.final_miss}, {"final_fa", r.final_fa},
          {"energy", r.energy},         {"weighted_energy", r.weighted_energy}};
}

json sim_json(const SimReport& r) {
  json j{{"n_frames", r.n_frames},
         {"targets", r.targets},
         {"misses", r.misses},
         {"inter_misses", r.inter_misses},
         {"false_alarms", r.false_alarms},
         {"miss_rate", r.miss_rate},
         {"inter_miss_rate", r.inter_miss_rate},
         {"final_miss_rate", r.final_miss_rate},
         {"fa_rate", r.fa_rate},
         {"energy", r.energy},
         {"risk", r.risk},
         {"std_errors",
          {{"miss_rate", r.se_miss},
           {"inter_miss_rate", r.se_inter_miss},
           {"final_miss_rate", r.se_final_miss},
           {"fa_rate", r.se_fa},
           {"energy", r.se_energy},
           {"risk", r.se_risk}}}};
  if (!r.final_eta.empty()) {
    j["adaptive"] = {{"final_eta", r.final_eta},
                     {"activation_rate", r.activation_rate},
                     {"mean_target", r.mean_target},
                     {"tracking_error", r.tracking_error}};
  }
  return j;
}

json stamp(const ModelFile& file) {
  return {{"tool_version", tool_version}, {"config_hash", config_hash(file)}};
}

FeatureModel stage_model(const StageEntry& s) { return FeatureModel(s.p0, s.p1); }

double resolve_prior(const ModelFile& file, const OptimizeOptions& opts) {
  return opts.prior ? *opts.prior : file.default_prior();
}

BeliefGrid resolve_grid(const ModelFile& file, const OptimizeOptions& opts) {
  return BeliefGrid(opts.grid ? *opts.grid : file.grid);
}

/// Fixes lambda on `spec` from the options or the file; a budget is met by
/// calibration.
Policy price_and_solve(SystemSpec& spec, const ModelFile& file, const OptimizeOptions& opts,
                       const BeliefGrid& grid) {
  std::optional<double> lambda = opts.lambda;
  std::optional<double> budget = opts.budget;
  if (!lambda && !budget) {
    lambda = file.lambda;
    budget = file.budget;
  }
  if (lambda) {
    spec.lambda = *lambda;
    spec.budget.reset();
    return solve(spec, grid);
  }
  if (!budget) fail(ErrorKind::input, "model needs either a lambda or a budget");
  auto cal = calibrate_lambda(spec, *budget, grid);
  spec.lambda = cal.lambda;
  spec.budget = *budget;
  return std::move(cal.policy);
}

json policy_json(const SystemSpec& spec, const Policy& policy, const RiskReport& report,
                 const RiskReport& grid_report) {
  json bounds = json::array();
  for (const auto& b : policy.bounds) bounds.push_back({b.lo, b.hi});
  const auto targets = compute_activation_targets(spec, policy, policy.grid);
  json activation = json::array();
  for (const auto& t : targets.tables) activation.push_back(t.values);
  json stages = json::array();
  for (const auto& s : spec.stages) stages.push_back(s.name);
  return {{"format", policy_format},
          {"kind", "cascade"},
          {"stages", stages},
          {"lambda", policy.lambda},
          {"prior", policy.prior},
          {"grid", policy.grid.size()},
          {"thresholds", policy.thresholds},
          {"switch_points", policy.switch_points},
          {"bounds", bounds},
          {"activation", activation},
          {"root_value", policy.root_value},
          {"risk", risk_json(report)},
          {"risk_grid", risk_json(grid_report)},
          {"early_positive_ok", check_cascade_optimality(spec, policy)}};
}

Policy policy_from_json(const json& doc, const SystemSpec& spec) {
  try {
    if (doc.value("format", "") != policy_format) schema("policy file has an unknown format");
    if (doc.value("kind", "") != "cascade") schema("only cascade policies can be simulated");
    Policy p;
    p.grid = BeliefGrid(doc.at("grid").get<std::size_t>());
    p.lambda = doc.at("lambda").get<double>();
    p.prior = spec.prior.value();
    p.miss_cost = spec.miss_cost;
    p.fa_cost = spec.fa_cost;
    p.thresholds = doc.at("thresholds").get<std::vector<double>>();
    p.switch_points = doc.at("switch_points").get<std::vector<double>>();
    for (const auto& s : spec.stages) p.bounds.push_back(s.bounds);
    if (p.switch_points.size() != spec.size() || p.thresholds.size() != spec.size()) {
      fail(ErrorKind::mismatch, "policy stage count does not match the model");
    }
    return p;
  } catch (const json::exception& e) {
    schema(std::string("policy file: ") + e.what());
  }
}

}  // namespace

double ModelFile::default_prior() const {
  if (prior) return *prior;
  if (!prior_sweep.empty()) return prior_sweep.front();
  return 0.1;
}

double ModelFile::duty_on_cost() const {
  if (dc_on_cost) return *dc_on_cost;
  double sum = 0.0;
  for (std::size_t i = 1; i < stages.size(); ++i) sum += stages[i].on_cost;
  return sum;
}

double ModelFile::duty_off_cost() const {
  if (dc_off_cost) return *dc_off_cost;
  double sum = 0.0;
  for (std::size_t i = 1; i < stages.size(); ++i) sum += stages[i].off_cost;
  return sum;
}

ModelFile parse_model(const json& doc, std::vector<std::string>* warnings) {
  if (!doc.is_object()) schema("model file must be a JSON object");
  if (doc.value("version", "") != model_format) {
    schema(std::string("model file version must be '") + model_format + "'");
  }
  ModelFile f;
  if (doc.contains("costs")) {
    const auto& c = doc["costs"];
    if (!c.is_object()) schema("'costs' must be an object");
    f.miss_cost = number(c, "miss", "costs");
    f.fa_cost = number(c, "false_alarm", "costs");
  }
  f.prior = maybe_number(doc, "prior", "model");
  if (doc.contains("prior_sweep")) {
    if (!doc["prior_sweep"].is_array()) schema("'prior_sweep' must be an array");
    for (const auto& v : doc["prior_sweep"]) {
      if (!v.is_number()) schema("'prior_sweep' holds a non-number");
      f.prior_sweep.push_back(v.get<double>());
    }
  }
  for (double p : f.prior_sweep) {
    if (!(p >= 0.0 && p <= 1.0)) schema("'prior_sweep' entries must lie in [0, 1]");
  }
  if (f.prior && !(*f.prior >= 0.0 && *f.prior <= 1.0)) schema("'prior' must lie in [0, 1]");
  f.lambda = maybe_number(doc, "lambda", "model");
  f.budget = maybe_number(doc, "budget", "model");
  if (f.lambda && *f.lambda < 0.0) schema("'lambda' must be nonnegative");
  if (doc.contains("grid")) {
    if (!doc["grid"].is_number_unsigned() || doc["grid"].get<std::size_t>() < 2) {
      schema("'grid' must be an integer >= 2");
    }
    f.grid = doc["grid"].get<std::size_t>();
  }
  if (doc.contains("robustified")) {
    if (!doc["robustified"].is_boolean()) schema("'robustified' must be a boolean");
    f.robustified = doc["robustified"].get<bool>();
  }
  if (doc.contains("duty_cycle")) {
    const auto& d = doc["duty_cycle"];
    if (!d.is_object()) schema("'duty_cycle' must be an object");
    f.dc_on_cost = maybe_number(d, "on_cost", "duty_cycle");
    f.dc_off_cost = maybe_number(d, "off_cost", "duty_cycle");
  }

  const char* list_key = doc.contains("nodes") ? "nodes" : "stages";
  if (!doc.contains(list_key) || !doc[list_key].is_array()) schema("model needs a 'stages' array");
  const auto& list = doc[list_key];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& s = list[i];
    const std::string where = stage_label(s, i);
    if (!s.is_object()) schema(where + " must be an object");
    StageEntry e;
    e.name = s.contains("name") && s["name"].is_string() ? s["name"].get<std::string>()
                                                         : "stage" + std::to_string(i + 1);
    e.p0 = pmf(s, "p0", where, warnings);
    e.p1 = pmf(s, "p1", where, warnings);
    if (e.p0.size() != e.p1.size()) schema(where + ": p0 and p1 differ in length");
    if (e.p0.size() < 2) schema(where + ": alphabet needs at least 2 symbols");
    e.on_cost = number(s, "on_cost", where);
    e.off_cost = s.contains("off_cost") ? number(s, "off_cost", where) : 0.0;
    if (e.on_cost < 0.0 || e.off_cost < 0.0) schema(where + ": costs must be nonnegative");
    if (s.contains("uncertainty")) {
      const auto& u = s["uncertainty"];
      if (!u.is_object()) schema(where + ": 'uncertainty' must be an object");
      e.uncertainty = {maybe_number(u, "eps0", where).value_or(0.0),
                       maybe_number(u, "eps1", where).value_or(0.0),
                       maybe_number(u, "nu0", where).value_or(0.0),
                       maybe_number(u, "nu1", where).value_or(0.0)};
      try {
        e.uncertainty.validate();
      } catch (const Error& err) {
        schema(where + ": " + err.what());
      }
    }
    if (s.contains("band")) {
      const auto& b = s["band"];
      e.band = RobustBand{number(b, "lower", where), number(b, "upper", where)};
      if (s.contains("residuals") && s["residuals"].is_array() && s["residuals"].size() == 2) {
        e.residual0 = s["residuals"][0].get<double>();
        e.residual1 = s["residuals"][1].get<double>();
      }
    }
    f.stages.push_back(std::move(e));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) schema("'edges' must be an array of [from, to] pairs");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        schema("'edges' must be an array of [from, to] pairs");
      }
      f.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  }
  if (!f.is_graph() && f.stages.size() < 2) schema("a cascade needs at least 2 stages");
  if (f.is_graph() && f.stages.empty()) schema("a graph needs at least one node");
  return f;
}

ModelFile load_model(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    schema(path + ": " + e.what());
  }
  return parse_model(doc, warnings);
}

json to_json(const ModelFile& f) {
  json doc{{"version", model_format},
           {"costs", {{"miss", f.miss_cost}, {"false_alarm", f.fa_cost}}},
           {"grid", f.grid},
           {"robustified", f.robustified}};
  if (f.prior) doc["prior"] = *f.prior;
  if (!f.prior_sweep.empty()) doc["prior_sweep"] = f.prior_sweep;
  if (f.lambda) doc["lambda"] = *f.lambda;
  if (f.budget) doc["budget"] = *f.budget;
  if (f.dc_on_cost || f.dc_off_cost) {
    json d = json::object();
    if (f.dc_on_cost) d["on_cost"] = *f.dc_on_cost;
    if (f.dc_off_cost) d["off_cost"] = *f.dc_off_cost;
    doc["duty_cycle"] = d;
  }
  json stages = json::array();
  for (const auto& s : f.stages) stages.push_back(stage_json(s));
  if (f.is_graph()) {
    doc["nodes"] = stages;
    json edges = json::array();
    for (const auto& [a, b] : f.edges) edges.push_back({a, b});
    doc["edges"] = edges;
  } else {
    doc["stages"] = stages;
  }
  return doc;
}

void save_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::input, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

std::string config_hash(const ModelFile& file) {
  const std::string text = to_json(file).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

ModelFile robustify(const ModelFile& file, std::vector<std::string>* warnings) {
  if (file.robustified) return file;
  ModelFile out = file;
  std::vector<bool> terminal(file.stages.size(), false);
  if (file.is_graph()) {
    std::vector<bool> has_out(file.stages.size(), false);
    for (const auto& [a, b] : file.edges) {
      if (a >= 1 && static_cast<std::size_t>(a) <= has_out.size()) has_out[static_cast<std::size_t>(a - 1)] = true;
    }
    for (std::size_t i = 0; i < terminal.size(); ++i) terminal[i] = !has_out[i];
  } else {
    terminal.back() = true;
  }
  for (std::size_t i = 0; i < out.stages.size(); ++i) {
    auto& s = out.stages[i];
    const FeatureModel nominal = stage_model(s);
    if (terminal[i]) {
      if (!s.uncertainty.is_zero()) {
        warn(warnings, "stage '" + s.name + "': uncertainty on a final stage is ignored");
      }
      s.band = ratio_range(nominal);
      continue;
    }
    const auto rm = least_favorable(nominal, s.uncertainty);
    s.p0.assign(rm.model.p0().begin(), rm.model.p0().end());
    s.p1.assign(rm.model.p1().begin(), rm.model.p1().end());
    s.band = rm.band;
    s.residual0 = rm.residual0;
    s.residual1 = rm.residual1;
  }
  out.robustified = true;
  return out;
}

SystemSpec build_system(const ModelFile& file, double prior, std::vector<std::string>* warnings) {
  if (file.is_graph()) fail(ErrorKind::input, "model declares a graph, not a cascade");
  const ModelFile r = robustify(file, warnings);
  SystemSpec spec;
  for (const auto& s : r.stages) {
    spec.stages.push_back({s.name, stage_model(s), s.on_cost, s.off_cost, {}});
  }
  spec.miss_cost = r.miss_cost;
  spec.fa_cost = r.fa_cost;
  spec.prior = Belief(prior);
  spec.lambda = r.lambda;
  spec.budget = r.budget;
  spec.validate();
  assign_bounds(spec);
  return spec;
}

DetectionGraph build_graph(const ModelFile& file, double prior,
                           std::vector<std::string>* warnings) {
  if (!file.is_graph()) fail(ErrorKind::input, "model declares a cascade, not a graph");
  const ModelFile r = robustify(file, warnings);
  std::vector<StageSpec> nodes;
  for (const auto& s : r.stages) nodes.push_back({s.name, stage_model(s), s.on_cost, s.off_cost, {}});
  DetectionGraph g(std::move(nodes), r.edges);
  assign_bounds(g, prior);
  return g;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::schema:
    case ErrorKind::input:
    case ErrorKind::graph_invalid:
      return 3;
    case ErrorKind::infeasible_band:
    case ErrorKind::infeasible_budget:
      return 4;
    case ErrorKind::numerical:
    case ErrorKind::degenerate:
      return 5;
    case ErrorKind::mismatch:
      return 1;
  }
  return 1;
}

json cmd_robustify(const ModelFile& in, ModelFile& out, std::vector<std::string>* warnings) {
  out = robustify(in, warnings);
  json report = stamp(in);
  json stages = json::array();
  for (const auto& s : out.stages) {
    json j{{"name", s.name}, {"residual0", s.residual0}, {"residual1", s.residual1}};
    if (s.band) {
      j["lower"] = s.band->lower;
      j["upper"] = s.band->upper;
    }
    stages.push_back(j);
  }
  report["stages"] = stages;
  return report;
}

json cmd_optimize(const ModelFile& file, const OptimizeOptions& opts,
                  std::vector<std::string>* warnings) {
  const double prior = resolve_prior(file, opts);
  const BeliefGrid grid = resolve_grid(file, opts);
  json out = stamp(file);

  if (file.is_graph()) {
    auto g = build_graph(file, prior, warnings);
    const auto lambda = opts.lambda ? opts.lambda : file.lambda;
    if (!lambda) fail(ErrorKind::input, "graph models need a fixed lambda");
    const auto policy = solve_graph(g, file.miss_cost, file.fa_cost, *lambda, prior, grid);
    json nodes = json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int id = static_cast<int>(i + 1);
      const auto& np = policy.node(id);
      nodes.push_back({{"id", id},
                       {"name", g.node(id).name},
                       {"neighbors", g.neighbors(id)},
                       {"switch_point", np.switch_point},
                       {"threshold", np.threshold},
                       {"bounds", {np.bounds.lo, np.bounds.hi}}});
    }
    out["policy"] = {{"format", policy_format}, {"kind", "graph"},       {"lambda", *lambda},
                     {"prior", prior},          {"grid", grid.size()},  {"order", policy.order},
                     {"nodes", nodes},          {"root_value", policy.root_value}};
    return out;
  }

  auto spec = build_system(file, prior, warnings);
  const auto policy = price_and_solve(spec, file, opts, grid);
  out["policy"] = policy_json(spec, policy, evaluate_exact(spec, policy), evaluate(spec, policy));
  if (spec.budget) out["policy"]["budget"] = *spec.budget;
  return out;
}

json cmd_check_optimality(const ModelFile& file, const OptimizeOptions& opts,
                          std::vector<std::string>* warnings) {
  const double prior = resolve_prior(file, opts);
  auto spec = build_system(file, prior, warnings);
  const auto policy = price_and_solve(spec, file, opts, resolve_grid(file, opts));
  json out = stamp(file);
  json stages = json::array();
  const auto ok = check_cascade_optimality(spec, policy);
  for (std::size_t k = 0; k + 1 < spec.size(); ++k) {
    stages.push_back({{"name", spec.stages[k].name},
                      {"early_positive_threshold", early_positive_threshold(spec, policy, k)},
                      {"bound_hi", policy.bounds[k].hi},
                      {"cascade_optimal", static_cast<bool>(ok[k])}});
  }
  out["lambda"] = policy.lambda;
  out["stages"] = stages;
  out["all_optimal"] = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  return out;
}

json cmd_simulate(const ModelFile& file, const json* policy_doc, const SimulateOptions& opts,
                  std::vector<std::string>* warnings) {
  const double prior = resolve_prior(file, opts.optimize);
  json out = stamp(file);
  out["seed"] = opts.stream.seed;
  out["mode"] = opts.stream.mode == SimMode::adaptive ? "adaptive" : "belief";

  if (file.is_graph()) {
    if (opts.stream.mode == SimMode::adaptive) {
      fail(ErrorKind::input, "adaptive mode is defined for cascades only");
    }
    auto g = build_graph(file, prior, warnings);
    const auto lambda = opts.optimize.lambda ? opts.optimize.lambda : file.lambda;
    if (!lambda) fail(ErrorKind::input, "graph models need a fixed lambda");
    const auto policy =
        solve_graph(g, file.miss_cost, file.fa_cost, *lambda, prior, resolve_grid(file, opts.optimize));
    out["report"] = sim_json(simulate_graph(opts.stream, g, policy));
    return out;
  }

  auto spec = build_system(file, prior, warnings);
  Policy policy;
  if (policy_doc) {
    const json& p = policy_doc->contains("policy") ? (*policy_doc)["policy"] : *policy_doc;
    if (policy_doc->contains("config_hash") &&
        (*policy_doc)["config_hash"].get<std::string>() != config_hash(file)) {
      warn(warnings, "policy was produced from a different model file");
    }
    policy = policy_from_json(p, spec);
    spec.lambda = policy.lambda;
  } else {
    policy = price_and_solve(spec, file, opts.optimize, resolve_grid(file, opts.optimize));
  }
  out["lambda"] = policy.lambda;
  out["report"] = sim_json(simulate(opts.stream, spec, policy));
  return out;
}

std::vector<double> sweep_points(double lo, double hi, std::size_t n) {
  if (n == 0) fail(ErrorKind::input, "sweep needs at least one point");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(n == 1 ? lo
                         : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  if (n > 1) out.back() = hi;
  return out;
}

CompareTable cmd_compare(const ModelFile& file, const CompareOptions& opts,
                         std::vector<std::string>* warnings) {
  if (file.is_graph()) fail(ErrorKind::input, "compare is defined for cascades");
  const auto priors = sweep_points(opts.pi0_lo, opts.pi0_hi, opts.points);
  const BeliefGrid grid = resolve_grid(file, opts.optimize);
  const ModelFile robust = robustify(file, warnings);
  const double dc_on = file.duty_on_cost();
  const double dc_off = file.duty_off_cost();

  CompareTable table;
  table.config_hash = config_hash(file);
  table.rows.resize(priors.size());

  auto run_point = [&](std::size_t i) {
    CompareRow& row = table.rows[i];
    row.pi0 = priors[i];
    auto spec = build_system(robust, row.pi0);
    const auto policy = price_and_solve(spec, file, opts.optimize, grid);
    const auto gp = evaluate_exact(spec, policy);
    row.lambda = policy.lambda;
    row.gp_risk = gp.total;
    row.gp_energy = gp.energy;
    row.gp_fa = gp.fa_probability(spec.fa_cost);
    row.gp_miss = gp.miss_probability(spec.miss_cost);
    const auto verdict = dominance_check(spec, policy, gp);
    row.dominance_total = verdict.beats_always_off;
    row.dominance_saving = verdict.saving_covers_miss;

    const auto& last = spec.stages.back();
    row.dc_ideal_rho = energy_equivalent_rho(gp.energy, last.on_cost, last.off_cost).rho;
    row.dc_ideal_risk = dc_risk(ideal_duty_cycle(spec, row.dc_ideal_rho), policy.lambda).total;

    row.dc_rho = energy_equivalent_rho(gp.energy, dc_on, dc_off).rho;
    const DutyCycleSpec real{row.dc_rho,    dc_on,          dc_off, last.model,
                             spec.miss_cost, spec.fa_cost, spec.prior};
    const auto dc = dc_risk(real, policy.lambda);
    row.dc_real_risk = dc.total;
    row.dc_energy = dc.energy;
    row.dc_fa = dc.fa_probability(spec.fa_cost);
    row.dc_miss = dc.miss_probability(spec.miss_cost);

    auto truncated = drop_stage(spec, 1);
    truncated.lambda = policy.lambda;
    row.truncated_risk = evaluate_exact(truncated, solve(truncated, grid)).total;

    if (opts.n_frames > 0) {
      StreamConfig cfg;
      cfg.n_frames = opts.n_frames;
      cfg.seed = opts.seed + i;
      cfg.threads = 1;
      row.gp_sim = simulate(cfg, spec, policy);
      row.dc_real_sim = simulate_duty_cycle(cfg, real, policy.lambda);
    }
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(
      opts.threads == 0 ? default_threads() : opts.threads, priors.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < priors.size(); i = next++) {
      try {
        run_point(i);
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return table;
}

std::string compare_csv(const CompareTable& table) {
  std::string out;
  out += fmt::format("# tool_version: {}\n# config_hash: {}\n", tool_version, table.config_hash);
  out += "# risks per frame; miss and fa columns are joint per-frame probabilities\n";
  out +=
      "pi0,gp_risk,dc_ideal_risk,dc_real_risk,gp_energy,dc_energy,gp_fa,dc_fa,gp_miss,dc_miss,"
      "dominance_total,dominance_saving,lambda,dc_rho,dc_ideal_rho,truncated_risk,"
      "gp_risk_sim,gp_risk_se,dc_real_risk_sim,dc_real_risk_se,gp_energy_sim,dc_energy_sim\n";
  for (const auto& r : table.rows) {
    out += fmt::format(
        "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
        "{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
        r.pi0, r.gp_risk, r.dc_ideal_risk, r.dc_real_risk, r.gp_energy, r.dc_energy, r.gp_fa,
        r.dc_fa, r.gp_miss, r.dc_miss, r.dominance_total ? 1 : 0, r.dominance_saving ? 1 : 0,
        r.lambda, r.dc_rho, r.dc_ideal_rho, r.truncated_risk, r.gp_sim.risk, r.gp_sim.se_risk,
        r.dc_real_sim.risk, r.dc_real_sim.se_risk, r.gp_sim.energy, r.dc_real_sim.energy);
  }
  return out;
}

std::vector<double> discretized_gaussian(double mean, double lo, double hi, std::size_t bins) {
  const auto cdf = [mean](double x) { return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0)); };
  std::vector<double> p(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = i == 0 ? 0.0 : cdf(lo + width * static_cast<double>(i));
    const double b = i + 1 == bins ? 1.0 : cdf(lo + width * static_cast<double>(i + 1));
    p[i] = std::max(b - a, 0.0);
  }
  double sum = 0.0;
  for (double x : p) sum += x;
  for (double& x : p) x /= sum;
  return p;
}

ModelFile make_fixture(const FixtureOptions& opts) {
  if (opts.separation.size() != 3) fail(ErrorKind::input, "fixture has exactly three stages");
  // Per-frame energies (mJ) of the reference prototype: power draw times
  // active time for the sensing, filtering and classification modules.
  const double d1_on = 84.36 * 0.016;
  const double d2_on = 1097 * 0.011 + 15131 * 0.34e-6;
  const double d3_on = 15131 * 0.014;
  const double d2_off = 264 * 0.34e-6;
  const double d3_off = 264 * 0.014;

  ModelFile f;
  f.prior = opts.prior;
  f.prior_sweep = sweep_points(0.05, 0.15, 11);
  f.lambda = opts.lambda;
  f.dc_on_cost = 1097 * 0.011 + 15131 * 0.014;
  f.dc_off_cost = 264 * 0.014;
  const char* names[] = {"energy", "filter", "classifier"};
  const double on[] = {d1_on, d2_on, d3_on};
  const double off[] = {0.0, d2_off, d3_off};
  for (std::size_t k = 0; k < 3; ++k) {
    const double shift = opts.separation[k];
    const double lo = -4.0;
    const double hi = shift + 4.0;
    StageEntry s;
    s.name = names[k];
    s.p0 = discretized_gaussian(0.0, lo, hi, opts.alphabet);
    s.p1 = discretized_gaussian(shift, lo, hi, opts.alphabet);
    s.on_cost = on[k];
    s.off_cost = off[k];
    if (k < 2) {
      const double u = opts.uncertainty;
      s.uncertainty = {u, u, u, u};
    }
    f.stages.push_back(std::move(s));
  }
  return f;
}

}  // namespace guided
