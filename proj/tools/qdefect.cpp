#include <iostream>

#include "CLI11.hpp"
#include "qdefect/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Q-tensor minimization and defect analysis on the unit ball"};
  app.require_subcommand(1);
  qdefect::CliOptions opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration");
    sub->add_option("--out", opt.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* mini = app.add_subcommand("minimize", "minimize the constrained energy");
  common(mini);
  auto* ana = app.add_subcommand("analyze", "detect and classify defects in a snapshot");
  common(ana);
  ana->add_option("--snapshot", opt.snapshot, "field snapshot")->required();
  auto* syn = app.add_subcommand("synthesize", "write a synthetic field snapshot");
  common(syn);
  syn->add_option("--snapshot", opt.snapshot, "output path (default output.dir/output.snapshot)");
  auto* ver = app.add_subcommand("verify", "run the property checks");
  common(ver);
  ver->add_option("--perturb-tau", opt.tau_scale, "scale applied to tau (test hook)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (*mini) return qdefect::cmd_minimize(opt, std::cout, std::cerr);
  if (*ana) return qdefect::cmd_analyze(opt, std::cout, std::cerr);
  if (*syn) return qdefect::cmd_synthesize(opt, std::cout, std::cerr);
  return qdefect::cmd_verify(opt, std::cout, std::cerr);
}
