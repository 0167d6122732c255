// Command-line front end: experiment orchestration from config files,
// plus direct access to the envelope, ladder, and box calculators.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aniso/config.hpp"
#include "aniso/experiments.hpp"
#include "aniso/kernels.hpp"
#include "aniso/ladder.hpp"

using nlohmann::json;

namespace {

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(std::stod(cur));
  return out;
}

int emit(const aniso::RunResult& rr, const std::string& out_path) {
  const std::string text = rr.report.dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot open " << out_path << "\n";
      return aniso::kStatusConfigError;
    }
    out << text << "\n";
  } else {
    std::cout << text << "\n";
  }
  return rr.status();
}

int run_config(const aniso::ExperimentConfig& cfg, std::string out_path) {
  if (out_path.empty()) out_path = cfg.out;
  return emit(aniso::run_experiment(cfg), out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic jump-process simulation and verification"};
  app.require_subcommand(1);

  std::string config_path, out_path, phi_spec, mult_spec = "constant:1";
  std::string x_csv, y_csv, point_csv, center_csv;
  double t = 1.0, kappa = 1.0, lambda = 1.0;
  double alpha_lower = 1.0, alpha_upper = 1.0;
  int dim = 1;
  long long k_shell = 1;
  bool with_events = false;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_path, "report path (overrides config)");

  auto* phi_cmd = app.add_subcommand("phi", "scaling-function utilities");
  auto* phi_check = phi_cmd->add_subcommand("check", "validate (WS)");
  phi_check->add_option("--phi", phi_spec, "family spec")->required();
  phi_check->add_option("--out", out_path, "report path");

  auto* env = app.add_subcommand("envelope", "closed-form envelope value");
  env->add_option("--phi", phi_spec)->required();
  env->add_option("--t", t)->required();
  env->add_option("--x", x_csv)->required();
  env->add_option("--y", y_csv)->required();

  auto* sim = app.add_subcommand("simulate", "write path samples as NDJSON");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--out", out_path, "NDJSON output path");
  sim->add_flag("--events", with_events, "include full event dumps");

  auto* verify = app.add_subcommand("verify", "statistical verification");
  verify->require_subcommand(1);
  for (const char* name : {"envelope", "exit", "diag"}) {
    auto* sub = verify->add_subcommand(name);
    sub->add_option("--config", config_path)->required();
    sub->add_option("--out", out_path);
  }

  auto* ladder = app.add_subcommand("ladder", "theta table and schedule");
  ladder->add_option("--d", dim)->required();
  ladder->add_option("--alpha-lower", alpha_lower)->required();
  ladder->add_option("--alpha-upper", alpha_upper)->required();
  ladder->add_option("--out", out_path);

  auto* boxes = app.add_subcommand("boxes", "dyadic box decomposition");
  auto* classify = boxes->add_subcommand("classify");
  classify->add_option("--point", point_csv)->required();
  classify->add_option("--center", center_csv)->required();
  classify->add_option("--kappa", kappa)->required();
  auto* count = boxes->add_subcommand("count");
  count->add_option("--k", k_shell)->required();
  count->add_option("--d", dim)->required();

  auto* nash = app.add_subcommand("nash", "Nash-form ratio check");
  nash->add_option("--phi", phi_spec)->required();
  nash->add_option("--dim", dim);
  nash->add_option("--multiplier", mult_spec);
  nash->add_option("--lambda", lambda);
  nash->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_config(aniso::ExperimentConfig::parse_file(config_path),
                        out_path);
    }
    if (phi_cmd->parsed() && phi_check->parsed()) {
      aniso::ExperimentConfig cfg;
      cfg = aniso::ExperimentConfig::parse_text("experiment = phi-check\nphi = " +
                                                phi_spec + "\n");
      return run_config(cfg, out_path);
    }
    if (env->parsed()) {
      const aniso::ScalingFunction phi = aniso::parse_scaling(phi_spec);
      const std::vector<double> x = parse_csv_doubles(x_csv);
      const std::vector<double> y = parse_csv_doubles(y_csv);
      const aniso::EnvelopeValue v = aniso::envelope_x(t, x, y, phi);
      json out = {{"prefactor", v.prefactor},
                  {"factors", v.axis_factors},
                  {"value", v.value}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (sim->parsed()) {
      aniso::ExperimentConfig cfg =
          aniso::ExperimentConfig::parse_file(config_path);
      if (with_events) cfg.events = true;
      if (!out_path.empty()) cfg.out = out_path;
      if (cfg.experiment != "simulate")
        throw aniso::ConfigError("simulate: config must set experiment = simulate");
      return emit(aniso::run_experiment(cfg), "");
    }
    if (verify->parsed()) {
      aniso::ExperimentConfig cfg =
          aniso::ExperimentConfig::parse_file(config_path);
      const std::string sub = verify->get_subcommands().front()->get_name();
      const std::string expected = sub == "diag" ? "diag" : sub;
      if (cfg.experiment != expected &&
          !(sub == "exit" && cfg.experiment == "mean-exit"))
        throw aniso::ConfigError("verify " + sub + ": config sets experiment = " +
                                 cfg.experiment);
      return run_config(cfg, out_path);
    }
    if (ladder->parsed()) {
      std::ostringstream text;
      text << "experiment = ladder\ndim = " << dim
           << "\nalpha_lower = " << alpha_lower
           << "\nalpha_upper = " << alpha_upper << "\n";
      return run_config(aniso::ExperimentConfig::parse_text(text.str()),
                        out_path);
    }
    if (boxes->parsed()) {
      if (classify->parsed()) {
        const std::vector<double> z = parse_csv_doubles(point_csv);
        const std::vector<double> c = parse_csv_doubles(center_csv);
        const aniso::BoxIndex idx = aniso::box_index(z, c, kappa);
        json out = {{"central", idx.central}, {"k", idx.k}};
        if (!idx.central) {
          out["gamma"] = idx.gamma;
          out["sign"] = idx.sign;
        }
        std::cout << out.dump(2) << "\n";
        return 0;
      }
      if (count->parsed()) {
        json out = {{"k", k_shell},
                    {"d", dim},
                    {"count", aniso::box_count(k_shell, dim)}};
        std::cout << out.dump(2) << "\n";
        return 0;
      }
    }
    if (nash->parsed()) {
      std::ostringstream text;
      text << "experiment = nash\nphi = " << phi_spec << "\ndim = " << dim
           << "\nmultiplier = " << mult_spec << "\nlambda = " << lambda << "\n";
      return run_config(aniso::ExperimentConfig::parse_text(text.str()),
                        out_path);
    }
  } catch (const aniso::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return aniso::kStatusConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return aniso::kStatusConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return aniso::kStatusConfigError;
  }
  std::cerr << "no subcommand executed\n";
  return aniso::kStatusConfigError;
}
