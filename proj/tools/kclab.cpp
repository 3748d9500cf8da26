// Command-line driver: kclab <verify|sobolev-boundary|embedding-ratio|sample|covering>.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kclab/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config (flat JSON)")->required();
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kolmogorov-Chentsov regularity lab"};
  app.require_subcommand(1);
  Options o;
  auto* verify = app.add_subcommand("verify", "run the regularity verification pipeline");
  auto* sobolev = app.add_subcommand("sobolev-boundary", "expected Sobolev norms across nu and m");
  auto* embedding = app.add_subcommand("embedding-ratio", "Hölder over Sobolev norm ratios");
  auto* sample = app.add_subcommand("sample", "dump one realization");
  auto* covering = app.add_subcommand("covering", "dump a covering-number table");
  for (auto* cmd : {verify, sobolev, embedding, sample, covering}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    kclab::ExperimentConfig config = kclab::load_experiment_config(o.config);
    if (o.seed) kclab::override_seed(config, *o.seed);
    kclab::CommandResult result;
    if (*verify)
      result = kclab::cmd_verify(config, o.out, o.threads);
    else if (*sobolev)
      result = kclab::cmd_sobolev_boundary(config, o.out, o.threads);
    else if (*embedding)
      result = kclab::cmd_embedding_ratio(config, o.out);
    else if (*sample)
      result = kclab::cmd_sample(config, o.out);
    else
      result = kclab::cmd_covering(config, o.out);
    std::cout << result.summary;
    for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
