#include <iostream>

#include "CLI11.hpp"
#include "aesadv/commands.hpp"
#include "aesadv/error.hpp"
#include "aesadv/log.hpp"

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> overrides;
  int prompt = 0;
  double generation_ratio = 0.0;
  double attack_size = 0.0;
  bool augmented = false;
  std::string set = "test";
  std::string out;
  bool verbose = false;
  bool quiet = false;
};

bool given(const CLI::App& app, const std::string& name) {
  const auto* opt = app.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

aesadv::CommandOptions to_options(const Flags& f, const CLI::App& app) {
  aesadv::CommandOptions o;
  if (!f.config.empty()) o.config.file = f.config;
  o.config.overrides = f.overrides;
  if (given(app, "--prompt")) o.prompt = f.prompt;
  if (given(app, "--generation-ratio")) o.generation_ratio = f.generation_ratio;
  if (given(app, "--attack-size")) o.attack_size = f.attack_size;
  o.augmented = f.augmented;
  o.eval_set = f.set;
  if (!f.out.empty()) o.out = f.out;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial perturbation and augmentation experiments for essay scorers"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("-c,--config", flags.config, "JSON run config");
  app.add_option("--set", flags.overrides, "Override a config key, e.g. --set train.epochs=50");
  app.add_flag("-v,--verbose", flags.verbose, "Print progress messages");
  app.add_flag("-q,--quiet", flags.quiet, "Suppress warnings");

  auto* synth = app.add_subcommand("synth", "Write the synthetic essay corpus");
  synth->add_option("--out", flags.out, "Output TSV (default: the config's dataset path)");
  app.add_subcommand("ingest", "Read the dataset, write corpus snapshot and train/val/test splits");
  auto* baselines = app.add_subcommand("train-baselines", "Train embedding, infill and class n-gram baselines");
  auto* generate = app.add_subcommand("generate", "Build the attack set from the test split");
  auto* augment = app.add_subcommand("augment", "Build the augmented training set");
  auto* train = app.add_subcommand("train", "Train the reference scorer");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained scorer");
  app.add_subcommand("report", "Run the full three-condition protocol over the grid");

  for (auto* sub : {baselines, generate, augment, train, evaluate}) {
    sub->add_option("--prompt", flags.prompt, "Prompt id (needed when the corpus has several)");
  }
  for (auto* sub : {generate, augment, train, evaluate}) {
    sub->add_option("--generation-ratio", flags.generation_ratio, "Grid cell generation ratio")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--attack-size", flags.attack_size, "Grid cell attack size ratio")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {train, evaluate}) {
    sub->add_flag("--augmented", flags.augmented, "Use the model trained on the augmented set");
  }
  evaluate->add_option("--on", flags.set, "Evaluation set")->check(CLI::IsMember({"test", "attack"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(aesadv::ExitCode::kUsage);
  }

  if (flags.quiet) aesadv::log::set_level(aesadv::log::Level::kQuiet);
  if (flags.verbose) aesadv::log::set_level(aesadv::log::Level::kInfo);

  try {
    const auto* sub = app.get_subcommands().front();
    const auto opts = to_options(flags, *sub);
    const std::string name = sub->get_name();
    if (name == "synth") aesadv::cmd_synth(opts);
    else if (name == "ingest") aesadv::cmd_ingest(opts);
    else if (name == "train-baselines") aesadv::cmd_train_baselines(opts);
    else if (name == "generate") aesadv::cmd_generate(opts);
    else if (name == "augment") aesadv::cmd_augment(opts);
    else if (name == "train") aesadv::cmd_train(opts);
    else if (name == "evaluate") aesadv::cmd_evaluate(opts);
    else if (name == "report") aesadv::cmd_report(opts);
    return 0;
  } catch (const aesadv::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(aesadv::ExitCode::kInvariant);
  }
}
