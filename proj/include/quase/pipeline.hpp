#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "quase/config.hpp"
#include "quase/eval.hpp"
#include "quase/model.hpp"
#include "quase/synth.hpp"
#include "quase/training.hpp"

namespace quase {

class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stage entry points shared by the CLI and the test suites. Each consumes the
// previous stage's files, validates config-hash compatibility, and is
// idempotent given identical config + seed.
void cmd_synth(const Config& config);
void cmd_prepare(const Config& config);
void cmd_mine(const Config& config);
void cmd_train(const Config& config);
void cmd_eval(const Config& config);
void cmd_ablate(const Config& config);

struct EditCliOptions {
  std::string checkpoint_path;
  TargetKind kind = TargetKind::kValue;
  double target = 3.0;
  double log_tau = -100000.0;
  int beam_width = 1;
  SearchParams search;
};
// Reads sentences one per line, emits `x_star<TAB>predicted_outcome`.
void cmd_edit(const EditCliOptions& options, std::istream& in, std::ostream& out);

// Paths derived from the config.
std::string data_path(const Config& config, const std::string& name);
std::string results_dir(const Config& config);  // env QUASE_RESULTS_ROOT wins

// Artifact header helpers: every artifact embeds the config hash and seed.
std::vector<std::string> artifact_header(const Config& config, const std::string& kind);
void check_artifact_hash(const std::string& path, const Config& config);

// Training assembly shared by cmd_train, cmd_ablate, and the acceptance suite.
struct TrainSetup {
  std::vector<RatedSentence> train_set, val_set;
  std::vector<PseudoPair> pairs;
  Vocabulary vocab;
  ModelConfig model_config;
  TrainOptions options;
  LexiconScorer scorer;
};
TrainSetup load_train_setup(const Config& config);
TrainOptions train_options_from_config(const Config& config);
ModelConfig model_config_from_config(const Config& config, int longest_sentence);

AblationTable run_ablation(const Config& config);

extern const std::set<std::string> kKnownConfigKeys;

}  // namespace quase
