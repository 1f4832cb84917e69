#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mtlchoice/error.hpp"
#include "mtlchoice/experiment.hpp"

namespace fs = std::filesystem;
using namespace mtlchoice;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> model_kind;
  std::vector<std::string> models;
  std::string report;
  std::optional<std::size_t> k;
  bool mask_rp = false;
  bool verify = false;
};

int execute(const std::string& command, const Flags& flags) {
  Json j = load_json(flags.config);
  if (flags.seed) j["seed"] = *flags.seed;
  if (flags.workers) j["search"]["workers"] = *flags.workers;
  if (flags.model_kind) j["model"] = *flags.model_kind;
  if (flags.mask_rp) j["hyper"]["mask_rp"] = true;
  const ExperimentConfig config = parse_config(j, fs::path(flags.config).parent_path());

  RunOptions options;
  options.out = flags.out;
  for (const auto& m : flags.models) options.models.emplace_back(m);
  options.report = flags.report;
  options.k = flags.k;

  const auto written = run_command(command, config, options, std::cout);
  for (const auto& p : written) std::cout << "  " << p.string() << '\n';
  if (flags.verify) {
    const auto diffs = verify_command(command, config, options, written, std::cout);
    if (!diffs.empty()) {
      for (const auto& d : diffs) std::cerr << "differs on rerun: " << d << '\n';
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint RP/SP choice modelling: logit baselines and multitask networks"};
  app.require_subcommand(1);

  Flags flags;
  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec commands[] = {
      {"synth", "simulate a dataset from the configured generator"},
      {"train", "fit one model and write the model file and metrics"},
      {"search", "random hyperparameter search over MTLDNN configs"},
      {"evaluate", "recompute metrics for a saved model"},
      {"ensemble", "metrics of the top-k averaged models of a search"},
      {"interpret", "probability curves and elasticities"},
      {"compare", "accuracy grid of all eight estimators"},
  };
  std::string chosen;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", flags.config, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", flags.out, "output directory (default: config, then $MTLCHOICE_OUT)");
    sub->add_option("--seed", flags.seed, "override the master seed");
    sub->add_flag("--verify", flags.verify, "rerun and compare every artifact byte for byte");
    const std::string name = c.name;
    if (name == "search" || name == "compare") {
      sub->add_option("--workers", flags.workers, "parallel training runs");
    }
    if (name == "train") {
      sub->add_option("--model-kind", flags.model_kind,
                      "mtldnn, dnn-spt, dnn-joint, nl-c, nl-nc, mnl-spt or mnl-joint");
      sub->add_flag("--mask-rp", flags.mask_rp, "pooled models: predict RP over RP alternatives only");
    }
    if (name == "evaluate" || name == "interpret" || name == "ensemble") {
      sub->add_option("-m,--model", flags.models, "model file(s)")->check(CLI::ExistingFile);
    }
    if (name == "ensemble" || name == "interpret") {
      sub->add_option("--report", flags.report, "search report CSV")->check(CLI::ExistingFile);
      sub->add_option("-k", flags.k, "number of top-ranked models");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    return execute(chosen, flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
