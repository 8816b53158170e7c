// cguide: experiment runner.
//
//   cguide <verify|sample|sweep|edit|expert|density> [--config file.json] [flags] [--out dir]
//
// Every run writes config.json (the fully resolved config, world inlined),
// seed.txt, samples.csv, metrics.json and SVG plots into --out. Passing the
// written config.json back as --config reproduces the run.
// Exit codes: 0 ok, 1 usage/config error, 2 numeric failure, 3 failed verify.
#include "commands.hpp"

#include "cguide/types.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using cguide::cli::ExitCode;

namespace {

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream is(path);
  if (!is) throw cguide::ConfigError("--config: cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw cguide::ConfigError("--config: " + std::string(e.what()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive guidance experiments on analytic Gaussian-mixture worlds"};
  app.require_subcommand(1, 1);

  cguide::cli::Overrides o;
  std::string config_path, out;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"verify", "run the acceptance criteria"},
      {"sample", "sample endpoints from a composed guidance field"},
      {"sweep", "contrastive-strength (rig) sweep"},
      {"edit", "SDEdit or cycle-consistent editing, optionally with hyperparameter search"},
      {"expert", "guide a domain expert with a generalist's contrastive term"},
      {"density", "probability-flow ODE log-density against the closed form"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config (a previous config.json reproduces that run)");
    sub->add_option("--out", out, "run directory (default runs/<subcommand>)");
    sub->add_option("--seed", o.seed, "run seed");
    sub->add_option("--steps", o.steps, "sampler steps (edit: steps per unit time; density: ODE steps)");
    sub->add_option("--sampler", o.sampler, "em | ode | ddim");
    sub->add_option("--eta", o.eta, "ddim stochasticity");
    sub->add_option("--lambda", o.lambda, "contrastive strength");
    sub->add_option("--gamma", o.gamma, "use the exact coefficient with this classifier temperature");
    sub->add_option("--tau", o.tau, "CFG strength");
    sub->add_option("--world", o.world, "world JSON file or built-in name");
    sub->add_option("--prompt", o.prompt, "base / domain prompt, e.g. cat+glasses");
    sub->add_option("--positive", o.positive, "positive prompt y+");
    sub->add_option("--negative", o.negative, "negative prompt y-");
    sub->add_option("--n", o.n, "number of samples / points");
    if (name == "sweep") sub->add_option("--lambdas", o.lambdas, "comma-separated strengths")->delimiter(',');
    if (name == "edit") {
      sub->add_option("--method", o.method, "sdedit | cycle");
      sub->add_option("--search", o.search, "none | full | reduced");
    }
    if (name == "expert") sub->add_flag("--learned", o.learned, "train networks instead of analytic stand-ins");
    if (name == "verify") sub->add_option("--only", o.only, "criterion ids to run")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::kOk : ExitCode::kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (out.empty()) out = "runs/" + command;
  try {
    const nlohmann::json resolved = cguide::cli::resolve(command, read_config(config_path), o);
    return cguide::cli::execute(command, resolved, out);
  } catch (const cguide::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return ExitCode::kNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kNumeric;
  }
}
