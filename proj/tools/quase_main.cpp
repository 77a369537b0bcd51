#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "quase/pipeline.hpp"

namespace {

quase::Config load_config(const std::string& path, const std::vector<std::string>& sets,
                          const std::string& seed_override) {
  quase::Config config = quase::Config::from_file(path);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw quase::ConfigError("config: --set expects key=value, got " + kv);
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!seed_override.empty()) config.set("seed", seed_override);
  config.validate_keys(quase::kKnownConfigKeys);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quase: edit sentences toward a numeric outcome target"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_override;
  std::vector<std::string> overrides;

  auto add_config_stage = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "config file (key = value lines)")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--set", overrides, "override a config entry (key=value)");
    return sub;
  };

  CLI::App* synth = add_config_stage("synth", "generate the synthetic rated corpus + pairs");
  CLI::App* prepare = add_config_stage("prepare", "tokenize and score a raw sentence file");
  CLI::App* mine = add_config_stage("mine", "mine pseudo-parallel pairs from train.tsv");
  CLI::App* train = add_config_stage("train", "run the two-stage joint training");
  CLI::App* evalcmd = add_config_stage("eval", "evaluate editing MAE / polarity transfer");
  CLI::App* ablate = add_config_stage("ablate", "train and evaluate all loss subsets");

  CLI::App* edit = app.add_subcommand("edit", "edit stdin sentences toward a target");
  quase::EditCliOptions edit_options;
  double target = 3.0;
  bool to_max = false, to_min = false;
  edit->add_option("--checkpoint", edit_options.checkpoint_path, "trained checkpoint")
      ->required();
  edit->add_option("--target", target, "outcome target in [1, 5]");
  edit->add_flag("--max", to_max, "default the best outcome instead of a target");
  edit->add_flag("--min", to_min, "default the worst outcome instead of a target");
  edit->add_option("--tau-log", edit_options.log_tau, "log feasibility threshold");
  edit->add_option("--beam", edit_options.beam_width, "beam width for decoding");
  edit->add_option("--search-step", edit_options.search.step_size, "search step size");
  edit->add_option("--search-eps", edit_options.search.eps_target, "target tolerance");
  edit->add_option("--search-iters", edit_options.search.max_iters, "max search iterations");

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (edit->parsed()) {
      if (to_max && to_min) {
        throw quase::ConfigError("edit: --max and --min are mutually exclusive");
      }
      edit_options.kind = to_max ? quase::TargetKind::kMax
                                 : (to_min ? quase::TargetKind::kMin
                                           : quase::TargetKind::kValue);
      edit_options.target = target;
      quase::cmd_edit(edit_options, std::cin, std::cout);
      return 0;
    }
    const quase::Config config = load_config(config_path, overrides, seed_override);
    if (synth->parsed()) quase::cmd_synth(config);
    else if (prepare->parsed()) quase::cmd_prepare(config);
    else if (mine->parsed()) quase::cmd_mine(config);
    else if (train->parsed()) quase::cmd_train(config);
    else if (evalcmd->parsed()) quase::cmd_eval(config);
    else if (ablate->parsed()) quase::cmd_ablate(config);
    return 0;
  } catch (const quase::ConfigError& e) {
    std::cerr << "error\t" << stage << '\t' << e.what() << "\n";
    return 2;
  } catch (const quase::StageError& e) {
    std::cerr << "error\t" << stage << '\t' << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error\t" << stage << '\t' << e.what() << "\n";
    return 1;
  }
}
