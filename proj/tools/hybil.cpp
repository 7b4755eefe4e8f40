// hybil: synth | preprocess | train | crossval | evaluate
//
// Exit status: 0 when the command's primary output was written, 1 on a
// pipeline error, 2 on a usage or configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "hybil/cli/commands.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::vector<std::string> models;
  std::optional<std::string> schema;
  std::optional<std::string> strata;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd.add_option("--seed", c.seed, "Seed for every random choice");
  cmd.add_option("--out", c.out, "Output directory");
  cmd.add_option("--jobs", c.jobs, "Worker threads");
  cmd.add_option("--model", c.models, "cnn|rnn|bcnn|brnn|hybrid (repeatable, or comma separated)")->delimiter(',');
  cmd.add_option("--schema", c.schema, "tuh8|epi4|synthK");
  cmd.add_option("--strata", c.strata, "event|window");
}

hybil::RunConfig resolve(const Common& c) {
  hybil::RunConfig cfg = c.config.empty() ? hybil::RunConfig{} : hybil::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output = *c.out;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.models.empty()) {
    cfg.models.clear();
    for (const auto& m : c.models) cfg.models.push_back(hybil::parse_model_kind(m));
  }
  if (c.schema) cfg.schema = *c.schema;
  if (c.strata) cfg.strata = hybil::parse_strata(*c.strata);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seizure-type classification with hybrid bilinear networks"};
  app.require_subcommand(1);

  Common common;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled EEG corpus");
  add_common(*synth, common);

  std::string manifest;
  auto* preprocess = app.add_subcommand("preprocess", "Turn a corpus manifest into a spectrogram dataset");
  add_common(*preprocess, common);
  preprocess->add_option("manifest", manifest, "manifest.csv")->required()->check(CLI::ExistingFile);

  std::string dataset;
  auto* train = app.add_subcommand("train", "Train the configured models, validating on fold 0");
  add_common(*train, common);
  train->add_option("dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  auto* crossval = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  add_common(*crossval, common);
  crossval->add_option("dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  std::string checkpoint;
  std::optional<std::size_t> fold;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  add_common(*evaluate, common);
  evaluate->add_option("checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--fold", fold, "Evaluate only this validation fold of the configured plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto cfg = resolve(common);
    if (synth->parsed()) {
      hybil::cmd_synth(cfg, std::cout);
    } else if (preprocess->parsed()) {
      hybil::cmd_preprocess(cfg, manifest, std::cout);
    } else if (train->parsed()) {
      hybil::cmd_train(cfg, dataset, std::cout);
    } else if (crossval->parsed()) {
      hybil::cmd_crossval(cfg, dataset, std::cout);
    } else if (evaluate->parsed()) {
      hybil::cmd_evaluate(cfg, checkpoint, dataset, fold, std::cout);
    }
  } catch (const hybil::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
