#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "subma/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet problems for subelliptic Monge-Ampere equations"};
  app.require_subcommand(1);

  subma::RunConfig config;
  std::uint64_t seed = 0;

  const struct {
    const char* name;
    const char* description;
  } commands[] = {
      {"solve", "solve a Dirichlet problem and write the solution artifacts"},
      {"certify", "solve, then certify convexity, gradient bound and strictness"},
      {"compare", "solve, then verify the comparison inequality on built pairs"},
      {"sweep", "solve, then sweep mu for a strict-subsolution margin"},
      {"validate-frame", "check a frame definition (triangularity, homogeneity, rank)"},
  };
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
    sub->add_option("--spec", config.spec_path,
                    cmd.name == std::string("validate-frame")
                        ? "frame file or builtin frame name"
                        : "problem file or builtin problem name")
        ->required();
    sub->add_option("--out", config.output_dir, "output directory for artifacts");
    sub->add_option("--seed", seed, "override the spec's random seed");
    sub->add_option("--set", config.overrides, "spec override key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1; --help exits 0
  }

  CLI::App* sub = app.get_subcommands().front();
  config.command = sub->get_name();
  if (sub->count("--seed") > 0) config.seed = seed;
  return subma::run(config);
}
