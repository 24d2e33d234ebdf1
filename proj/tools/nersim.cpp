#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ner/experiment.hpp"

namespace {

void emit_error(const std::string& code, const std::string& message) {
  ner::json envelope;
  envelope["error"]["code"] = code;
  envelope["error"]["message"] = message;
  std::cout << envelope.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nersim - nuclear spin simulation and gate synthesis driver"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  bool seedless = false;
  app.add_option("--config", config_path, "experiment config file (key = value lines)");
  app.add_option("--out", out_dir, "output directory, overrides output.dir");
  app.add_option("--format", format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_flag("--seedless", seedless, "reserved; the simulator has no randomness")
      ->disable_flag_override();

  app.add_subcommand("simulate", "evolve a driven nucleus and write the trajectory");
  app.add_subcommand("gate", "synthesize a gate schedule and score its fidelity");
  app.add_subcommand("efg", "compute field-gradient coefficients");
  app.add_subcommand("perf", "print the flip-count comparison table");
  app.add_subcommand("sweep", "run a parameter grid and write one row per point");

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    ner::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = ner::load_config(config_path);
    } else if (sub != "perf") {
      throw ner::config_error("--config is required for '" + sub + "'");
    }
    ner::run_experiment(sub, cfg, out_dir, format);
    if (sub == "perf") {
      std::cout << ner::render_table(ner::reference_rows());
    }
    const std::string dir = !out_dir.empty() ? out_dir : cfg.out_dir;
    std::cerr << "wrote " << dir << "\n";
    return 0;
  } catch (const ner::config_error& e) {
    emit_error("config_parse", e.what());
    return 2;
  } catch (const ner::numerical_error& e) {
    emit_error("numerical", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    emit_error("domain", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 5;
  }
}
