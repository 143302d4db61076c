// Command-line front end: robustify, optimize, compare, simulate,
// check-optimality and make-fixture.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "guided/io.hpp"

namespace {

using guided::ModelFile;
using nlohmann::json;

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) guided::fail(guided::ErrorKind::input, "cannot write " + path);
  out << text;
}

void flush_warnings(std::vector<std::string>& warnings) {
  for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
  warnings.clear();
}

struct Sweep {
  double lo = 0.05;
  double hi = 0.15;
  std::size_t n = 11;
};

Sweep parse_sweep(const std::string& text) {
  Sweep s;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%zu%c", &s.lo, &s.hi, &s.n, &extra) != 3 || s.n == 0) {
    throw CLI::ValidationError("--sweep-pi0", "expected lo:hi:n, e.g. 0.05:0.15:11");
  }
  return s;
}

void add_price_options(CLI::App* cmd, guided::OptimizeOptions& o) {
  cmd->add_option("--lambda", o.lambda, "Energy price (overrides the file)");
  cmd->add_option("--budget", o.budget, "Energy budget in mJ/frame (overrides the file)");
  cmd->add_option("--grid", o.grid, "Belief grid size M")->check(CLI::Range(2, 1 << 24));
  cmd->add_option("--prior", o.prior, "Prior target probability")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware guided-processing cascades: optimize, robustify, simulate"};
  app.set_version_flag("--version", guided::tool_version);
  app.require_subcommand(1);

  std::string model_path;
  std::string out_path;
  std::vector<std::string> warnings;

  auto* robustify = app.add_subcommand("robustify", "Replace stage PMFs by least-favorable pairs");
  robustify->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  robustify->add_option("-o,--out", out_path, "Robustified model file")->required();
  std::string report_path;
  robustify->add_option("--report", report_path, "Band report JSON (default stdout)");

  guided::OptimizeOptions opt;
  auto* optimize = app.add_subcommand("optimize", "Solve for the optimal cascade or graph policy");
  optimize->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  optimize->add_option("-o,--out", out_path, "Policy JSON (default stdout)");
  add_price_options(optimize, opt);

  auto* check = app.add_subcommand("check-optimality", "Early-positive verdict per stage");
  check->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  check->add_option("-o,--out", out_path, "Verdict JSON (default stdout)");
  add_price_options(check, opt);

  guided::CompareOptions cmp;
  std::string sweep_text = "0.05:0.15:11";
  auto* compare = app.add_subcommand("compare", "Cascade vs duty-cycling over a prior sweep (CSV)");
  compare->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  compare->add_option("-o,--out", out_path, "CSV file (default stdout)");
  compare->add_option("--sweep-pi0", sweep_text, "Prior sweep lo:hi:n");
  compare->add_option("--n-frames", cmp.n_frames, "Frames simulated per design and prior (0 skips)");
  compare->add_option("--seed", cmp.seed, "Base seed");
  compare->add_option("--threads", cmp.threads, "Workers (default GUIDED_THREADS or all cores)");
  add_price_options(compare, cmp.optimize);

  guided::SimulateOptions sim;
  std::string policy_path;
  std::string mode = "belief";
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo run of a policy");
  simulate->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--policy", policy_path, "Policy JSON from optimize")
      ->check(CLI::ExistingFile);
  simulate->add_option("-o,--out", out_path, "Report JSON (default stdout)");
  simulate->add_option("--mode", mode, "belief or adaptive")
      ->check(CLI::IsMember({"belief", "adaptive"}));
  simulate->add_option("--mu", sim.stream.mu, "Adaptive step size")->check(CLI::PositiveNumber);
  simulate->add_option("--n-frames", sim.stream.n_frames, "Measured frames")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--burn-in", sim.stream.burn_in, "Adaptive frames before measuring");
  simulate->add_option("--seed", sim.stream.seed, "Seed");
  simulate->add_option("--threads", sim.stream.threads, "Workers (default GUIDED_THREADS)");
  add_price_options(simulate, sim.optimize);

  guided::FixtureOptions fix;
  auto* fixture = app.add_subcommand("make-fixture", "Write the synthetic three-stage model");
  fixture->add_option("-o,--out", out_path, "Model file (default stdout)");
  fixture->add_option("--lambda", fix.lambda, "Energy price stored in the file");
  fixture->add_option("--alphabet", fix.alphabet, "Feature alphabet size")->check(CLI::Range(2, 100000));
  fixture->add_option("--uncertainty", fix.uncertainty, "Contamination of stages 1 and 2")
      ->check(CLI::Range(0.0, 0.5));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fixture) {
      emit(guided::to_json(guided::make_fixture(fix)).dump(2) + "\n", out_path);
      return 0;
    }
    const ModelFile model = guided::load_model(model_path, &warnings);
    flush_warnings(warnings);

    if (*robustify) {
      ModelFile out;
      const json report = guided::cmd_robustify(model, out, &warnings);
      guided::save_json(out_path, guided::to_json(out));
      emit(report.dump(2) + "\n", report_path);
    } else if (*optimize) {
      emit(guided::cmd_optimize(model, opt, &warnings).dump(2) + "\n", out_path);
    } else if (*check) {
      emit(guided::cmd_check_optimality(model, opt, &warnings).dump(2) + "\n", out_path);
    } else if (*compare) {
      const Sweep s = parse_sweep(sweep_text);
      cmp.pi0_lo = s.lo;
      cmp.pi0_hi = s.hi;
      cmp.points = s.n;
      emit(guided::compare_csv(guided::cmd_compare(model, cmp, &warnings)), out_path);
    } else if (*simulate) {
      sim.stream.mode = mode == "adaptive" ? guided::SimMode::adaptive : guided::SimMode::belief;
      std::optional<json> policy;
      if (!policy_path.empty()) {
        std::ifstream in(policy_path);
        try {
          policy = json::parse(in);
        } catch (const json::parse_error& e) {
          guided::fail(guided::ErrorKind::schema, policy_path + ": " + e.what());
        }
      }
      emit(guided::cmd_simulate(model, policy ? &*policy : nullptr, sim, &warnings).dump(2) + "\n",
           out_path);
    }
    flush_warnings(warnings);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const guided::Error& e) {
    flush_warnings(warnings);
    fmt::print(stderr, "error: {}\n", e.what());
    return guided::exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
