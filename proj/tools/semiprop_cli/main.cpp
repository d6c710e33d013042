#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "semiprop.h"

int main(int argc, char** argv) {
  CLI::App app{"semiprop: semiclassical propagation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  int threads = 0;
  unsigned long seed = 0;
  app.add_option("--config", config_path, "config file path")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (0 = hardware default)");
  app.add_option("--seed", seed, "RNG seed for randomized runs");

  const char* subcommands[] = {"propagate",       "hk-kernel", "vanvleck",
                               "statphase-check", "sweep",     "flow-check"};
  const char* descriptions[] = {
      "propagate a Gaussian packet (hk or split_step)",
      "Herman-Kluk kernel at listed (x,y) points",
      "Van Vleck branches and kernel at listed (x,y) points",
      "stationary-phase expansion vs adaptive quadrature oracle",
      "multi-method hbar sweep with rate fits",
      "gradient checks, trajectory integrity, omega estimate"};
  for (int i = 0; i < 6; ++i)
    app.add_subcommand(subcommands[i], descriptions[i])->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  int exit_code = 0;
  const sp_status status = sp_run_command(command.c_str(), config_path.c_str(),
                                          out_dir.c_str(), threads, seed, &exit_code);
  if (status != SP_OK) {
    std::fprintf(stderr, "error: %s\n", sp_last_error());
    return 2;
  }
  if (exit_code != 0)
    std::fprintf(stderr, "%s finished with status %d (see run.log)\n", command.c_str(),
                 exit_code);
  return exit_code;
}
