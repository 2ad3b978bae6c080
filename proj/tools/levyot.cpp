#include <CLI11.hpp>

#include "levyot/cli.hpp"

int main(int argc, char** argv) {
  using namespace levyot::cli;
  CLI::App app{"Levy triplet families, limit diagnostics, simulation and semimartingale transport"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::uint64_t seed = 0;

  auto add = [&](const std::string& name, const std::string& help, bool needs_input) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* in = sub->add_option("--input,-i", cfg.input_path, "JSON input document");
    if (needs_input) in->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", cfg.output_dir, "output directory (default $LEVYOT_OUT or ./levyot_out)");
    sub->add_option("--seed", seed, "random seed, echoed into the reports");
    sub->add_option("--set", cfg.overrides, "setting override key=value (repeatable)")->take_all();
    sub->callback([&cfg, name] { cfg.command = name; });
    return sub;
  };
  add("check-theta", "Conditions (B) and (J), box independence and martingale residuals for a family", true);
  add("limit-analyze", "exponent limits and created diffusion along a triplet sequence", true);
  add("simulate", "path simulation and convergence report", true);
  add("solve-transport", "primal and dual solutions of a transport instance", true);
  add("reproduce", "runs the reference fixtures and prints a pass/fail table", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "levyot: error: " << e.what() << "\n";
    return kExitValidation;
  }
  for (CLI::App* sub : app.get_subcommands())
    if (sub->count("--seed") > 0) cfg.seed = seed;
  return run(cfg);
}
