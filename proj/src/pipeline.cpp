#include "quase/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace quase {

namespace fs = std::filesystem;

const std::set<std::string> kKnownConfigKeys = {
    "seed", "data_dir", "results_dir", "lexicon", "grammar", "raw_input", "checkpoint",
    "synth_size", "synth_positive_fraction", "synth_max_siblings", "train_fraction",
    "val_fraction", "ji_min", "gap_min", "min_freq", "d_y", "d_z", "embedding_dim",
    "hidden_dim", "u_hidden_dim", "max_decode_len", "batch_size", "learning_rate",
    "grad_clip", "stage1_epochs", "stage2_epochs", "lambda_rec", "stage1_grid",
    "stage1_tune_epochs", "ramp_kl", "ramp_diff", "ramp_sim", "ramp_d_rec",
    "anneal_midpoint", "anneal_steepness", "anneal_stagger", "anneal_order", "eps_deg",
    "patience", "smooth_factor", "eval_every", "val_probe_count", "val_loss_count",
    "sample_latents", "probe_targets", "log_tau", "search_step", "search_eps",
    "search_max_iters", "beam", "eval_targets", "eval_max_sentences",
    "ablation_max_sentences",
};

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw StageError("missing-input: " + what + " not found at " + path);
  }
}

std::vector<std::string> read_header_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StageError("missing-input: cannot open " + path);
  std::vector<std::string> header;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    header.push_back(line);
  }
  return header;
}

struct SplitSets {
  std::vector<RatedSentence> train, val, test;
};

SplitSets split_dataset(std::vector<RatedSentence> data, const Config& config) {
  Rng rng = Rng::substream(config.seed(), "split");
  rng.shuffle(data);
  const double train_fraction = config.get_double("train_fraction", 0.8);
  const double val_fraction = config.get_double("val_fraction", 0.1);
  if (train_fraction <= 0.0 || val_fraction < 0.0 || train_fraction + val_fraction >= 1.0) {
    throw StageError("config-schema: bad train/val fractions");
  }
  SplitSets s;
  const std::size_t n = data.size();
  const std::size_t n_train = static_cast<std::size_t>(train_fraction * n);
  const std::size_t n_val = static_cast<std::size_t>(val_fraction * n);
  s.train.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train),
               data.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), data.end());
  return s;
}

void write_splits(const SplitSets& sets, const Config& config) {
  save_dataset(data_path(config, "train.tsv"), sets.train,
               artifact_header(config, "dataset"));
  save_dataset(data_path(config, "val.tsv"), sets.val, artifact_header(config, "dataset"));
  save_dataset(data_path(config, "test.tsv"), sets.test,
               artifact_header(config, "dataset"));
}

LexiconScorer scorer_from_config(const Config& config) {
  const std::string path = config.get_string("lexicon");
  require_file(path, "lexicon");
  return load_lexicon(path);
}

std::vector<double> checked_targets(const std::vector<double>& targets) {
  for (double t : targets) {
    if (t < 1.0 || t > 5.0) throw StageError("config-schema: target outside [1, 5]");
  }
  return targets;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw StageError("write failure on " + path);
}

std::string header_prefix(const Config& config, const std::string& kind) {
  std::string s;
  for (const std::string& line : artifact_header(config, kind)) s += "# " + line + "\n";
  return s;
}

}  // namespace

std::string data_path(const Config& config, const std::string& name) {
  const std::string dir = config.get_string("data_dir");
  return (fs::path(dir) / name).string();
}

std::string results_dir(const Config& config) {
  std::string root;
  if (const char* env = std::getenv("QUASE_RESULTS_ROOT"); env != nullptr && *env) {
    root = env;
  } else {
    root = config.get_string("results_dir", "results");
  }
  const fs::path dir = fs::path(root) / config.hash();
  fs::create_directories(dir);
  return dir.string();
}

std::vector<std::string> artifact_header(const Config& config, const std::string& kind) {
  return {"quase " + kind + " v1",
          "config_hash=" + config.hash() + " seed=" + std::to_string(config.seed())};
}

void check_artifact_hash(const std::string& path, const Config& config) {
  require_file(path, "artifact");
  const std::string expected = "config_hash=" + config.hash();
  for (const std::string& line : read_header_lines(path)) {
    const auto at = line.find("config_hash=");
    if (at == std::string::npos) continue;
    const std::string found = line.substr(at, expected.size());
    if (found != expected) {
      throw StageError("config-mismatch: " + path + " was built with a different config (" +
                       found + " vs current " + expected + ")");
    }
    return;
  }
  throw StageError("config-mismatch: " + path + " carries no config_hash header");
}

void cmd_synth(const Config& config) {
  const LexiconScorer scorer = scorer_from_config(config);
  const std::string grammar_path = config.get_string("grammar");
  require_file(grammar_path, "grammar");
  const Grammar grammar = load_grammar(grammar_path);

  SynthOptions options;
  options.size = config.get_int("synth_size", 2000);
  options.positive_fraction = config.get_double("synth_positive_fraction", 0.5);
  options.max_siblings = config.get_int("synth_max_siblings", 3);

  Rng rng = Rng::substream(config.seed(), "synth");
  std::vector<RatedSentence> data = synthesize(grammar, scorer, options, rng);

  fs::create_directories(config.get_string("data_dir"));
  const SplitSets sets = split_dataset(std::move(data), config);
  write_splits(sets, config);

  const auto pairs = mine_pairs(sets.train, config.get_double("ji_min", 0.5),
                                config.get_double("gap_min", 2.0));
  save_pairs(data_path(config, "pairs.tsv"), pairs, artifact_header(config, "pairs"));
}

void cmd_prepare(const Config& config) {
  const LexiconScorer scorer = scorer_from_config(config);
  const std::string raw_path = config.get_string("raw_input");
  require_file(raw_path, "raw input");
  std::ifstream in(raw_path);
  if (!in) throw StageError("missing-input: cannot open " + raw_path);

  std::vector<RatedSentence> data;
  std::string line;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank || line[0] == '#') continue;
    RatedSentence r;
    r.sentence = tokenize(line);
    r.rating = score_sentence(scorer, r.sentence);
    data.push_back(std::move(r));
  }
  if (data.empty()) throw StageError("missing-input: no sentences in " + raw_path);

  fs::create_directories(config.get_string("data_dir"));
  const SplitSets sets = split_dataset(std::move(data), config);
  write_splits(sets, config);
}

void cmd_mine(const Config& config) {
  const std::string train_path = data_path(config, "train.tsv");
  check_artifact_hash(train_path, config);
  const auto train_set = load_dataset(train_path);
  const auto pairs = mine_pairs(train_set, config.get_double("ji_min", 0.5),
                                config.get_double("gap_min", 2.0));
  save_pairs(data_path(config, "pairs.tsv"), pairs, artifact_header(config, "pairs"));
}

ModelConfig model_config_from_config(const Config& config, int longest_sentence) {
  ModelConfig mc;
  mc.d_y = config.get_int("d_y", 16);
  mc.d_z = config.get_int("d_z", 16);
  mc.embedding_dim = config.get_int("embedding_dim", 32);
  mc.hidden_dim = config.get_int("hidden_dim", 64);
  mc.u_hidden_dim = config.get_int("u_hidden_dim", 32);
  mc.max_decode_len = std::max(config.get_int("max_decode_len", 24), longest_sentence + 2);
  return mc;
}

TrainOptions train_options_from_config(const Config& config) {
  TrainOptions o;
  const double lambda_rec = config.get_double("lambda_rec", 0.75);
  o.stage1 = LossWeights{lambda_rec, 0.0, 1.0 - lambda_rec, 0.0, 0.0, 0.0};
  o.schedule.targets.kl = config.get_double("ramp_kl", 0.6);
  o.schedule.targets.diff = config.get_double("ramp_diff", 0.2);
  o.schedule.targets.sim = config.get_double("ramp_sim", 0.2);
  o.schedule.targets.d_rec = config.get_double("ramp_d_rec", 0.1);
  o.schedule.midpoint = config.get_double("anneal_midpoint", 0.0);
  o.schedule.steepness = config.get_double("anneal_steepness", 0.0);
  o.schedule.stagger = config.get_double("anneal_stagger", 0.0);
  if (config.has("anneal_order")) {
    std::vector<std::string> order;
    std::istringstream is(config.get_string("anneal_order"));
    std::string item;
    while (std::getline(is, item, ',')) {
      if (!item.empty()) order.push_back(item);
    }
    std::vector<std::string> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::vector<std::string>{"d_rec", "diff", "kl", "sim"}) {
      throw StageError("config-schema: anneal_order must permute kl,diff,sim,d_rec");
    }
    o.schedule.order = order;
  }
  o.stage1_epochs = config.get_int("stage1_epochs", 10);
  o.stage2_epochs = config.get_int("stage2_epochs", 20);
  o.batch_size = config.get_int("batch_size", 16);
  o.learning_rate = config.get_double("learning_rate", 1e-3);
  o.grad_clip = config.get_double("grad_clip", 5.0);
  o.eval_every = config.get_int("eval_every", 200);
  o.val_probe_count = config.get_int("val_probe_count", 20);
  o.val_loss_count = config.get_int("val_loss_count", 40);
  o.eps_deg = config.get_double("eps_deg", 0.02);
  o.patience = config.get_int("patience", 3);
  o.smooth_factor = config.get_double("smooth_factor", 0.5);
  o.sample_latents = config.get_bool("sample_latents", true);
  o.seed = config.seed();
  o.config_hash = config.hash();
  o.probe_targets = checked_targets(config.get_double_list("probe_targets", {1, 3, 5}));
  o.probe_search.step_size = config.get_double("search_step", 0.1);
  o.probe_search.eps_target = config.get_double("search_eps", 0.01);
  o.probe_search.max_iters = config.get_int("search_max_iters", 500);
  o.probe_log_tau = config.get_double("log_tau", -100000.0);
  return o;
}

TrainSetup load_train_setup(const Config& config) {
  const std::string train_path = data_path(config, "train.tsv");
  const std::string val_path = data_path(config, "val.tsv");
  const std::string pairs_path = data_path(config, "pairs.tsv");
  check_artifact_hash(train_path, config);
  check_artifact_hash(val_path, config);
  check_artifact_hash(pairs_path, config);

  TrainSetup setup{.train_set = load_dataset(train_path),
                   .val_set = load_dataset(val_path),
                   .pairs = {},
                   .vocab = {},
                   .model_config = {},
                   .options = train_options_from_config(config),
                   .scorer = scorer_from_config(config)};
  setup.pairs = load_pairs(pairs_path, setup.train_set);

  std::vector<Sentence> sentences;
  sentences.reserve(setup.train_set.size());
  int longest = 1;
  for (const RatedSentence& r : setup.train_set) {
    sentences.push_back(r.sentence);
    longest = std::max(longest, static_cast<int>(r.sentence.length()));
  }
  setup.vocab = Vocabulary::build(sentences, config.get_int("min_freq", 1));
  setup.model_config = model_config_from_config(config, longest);
  setup.model_config.vocab_size = setup.vocab.size();

  for (RatedSentence& r : setup.train_set) setup.vocab.index_sentence(r.sentence);
  for (RatedSentence& r : setup.val_set) setup.vocab.index_sentence(r.sentence);
  for (PseudoPair& p : setup.pairs) {
    setup.vocab.index_sentence(p.x.sentence);
    setup.vocab.index_sentence(p.x_prime.sentence);
  }
  return setup;
}

void cmd_train(const Config& config) {
  TrainSetup setup = load_train_setup(config);
  TrainOptions& options = setup.options;
  options.log_path = data_path(config, "train.log");
  options.checkpoint_path =
      config.get_string("checkpoint", data_path(config, "model.qsck"));

  const auto grid = config.get_double_list("stage1_grid", {});
  if (!grid.empty()) {
    TrainOptions tune_options = options;
    tune_options.stage1_epochs =
        config.get_int("stage1_tune_epochs", options.stage1_epochs);
    options.stage1 = stage1_tune(setup.model_config, setup.vocab, setup.train_set,
                                 setup.pairs, setup.val_set, setup.scorer, tune_options,
                                 grid);
  }

  Rng init_rng = Rng::substream(config.seed(), "init");
  Model model(setup.model_config, setup.vocab, init_rng);
  train(model, setup.train_set, setup.pairs, setup.val_set, setup.scorer, options);
}

void cmd_eval(const Config& config) {
  const std::string checkpoint_path =
      config.get_string("checkpoint", data_path(config, "model.qsck"));
  require_file(checkpoint_path, "checkpoint");
  std::string stored_hash;
  const Model model = Model::load(checkpoint_path, &stored_hash);
  if (stored_hash != config.hash()) {
    throw StageError("config-mismatch: checkpoint " + checkpoint_path +
                     " was trained with config_hash=" + stored_hash + ", current is " +
                     config.hash());
  }

  const std::string test_path = data_path(config, "test.tsv");
  check_artifact_hash(test_path, config);
  auto test_set = load_dataset(test_path);
  for (RatedSentence& r : test_set) model.vocab().index_sentence(r.sentence);

  const LexiconScorer scorer = scorer_from_config(config);
  EvalOptions options;
  options.targets = checked_targets(config.get_double_list("eval_targets", {1, 2, 3, 4, 5}));
  options.log_tau = config.get_double("log_tau", -100000.0);
  options.search.step_size = config.get_double("search_step", 0.1);
  options.search.eps_target = config.get_double("search_eps", 0.01);
  options.search.max_iters = config.get_int("search_max_iters", 500);
  options.beam_width = config.get_int("beam", 1);
  options.max_sentences = config.get_int("eval_max_sentences", 0);

  const EvalReport report = evaluate(model, test_set, scorer, options);
  const std::string dir = results_dir(config);
  write_text((fs::path(dir) / "report.txt").string(),
             header_prefix(config, "eval report") + report_human(report));
  write_text((fs::path(dir) / "report.tsv").string(),
             header_prefix(config, "eval report") + report_machine(report));
}

AblationTable run_ablation(const Config& config) {
  TrainSetup setup = load_train_setup(config);
  const std::string test_path = data_path(config, "test.tsv");
  check_artifact_hash(test_path, config);
  auto test_set = load_dataset(test_path);

  AblationTable table;
  table.targets = checked_targets(config.get_double_list("probe_targets", {1, 3, 5}));
  const int max_sentences = config.get_int("ablation_max_sentences", 60);

  for (const AblationRow& row : ablation_rows()) {
    AblationCell cell;
    try {
      TrainOptions options = setup.options;
      if (!row.use_sim) options.schedule.targets.sim = 0.0;
      if (!row.use_diff) options.schedule.targets.diff = 0.0;
      if (!row.use_d_rec) options.schedule.targets.d_rec = 0.0;
      options.seed = Rng::substream(config.seed(), "ablate:" + row.label).next_u64();
      options.log_path.clear();
      options.checkpoint_path.clear();

      Rng init_rng = Rng::substream(options.seed, "init");
      Model model(setup.model_config, setup.vocab, init_rng);
      train(model, setup.train_set, setup.pairs, setup.val_set, setup.scorer, options);

      EvalOptions eval_options;
      eval_options.targets = table.targets;
      eval_options.log_tau = options.probe_log_tau;
      eval_options.search = options.probe_search;
      eval_options.max_sentences = max_sentences;
      for (RatedSentence& r : test_set) model.vocab().index_sentence(r.sentence);
      const EvalReport report = evaluate(model, test_set, setup.scorer, eval_options);
      cell.mae_by_target = report.mae_by_target;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    table.rows.emplace_back(row, cell);
  }
  return table;
}

void cmd_ablate(const Config& config) {
  const AblationTable table = run_ablation(config);
  const std::string dir = results_dir(config);
  write_text((fs::path(dir) / "ablation.txt").string(),
             header_prefix(config, "ablation") + ablation_human(table));
  write_text((fs::path(dir) / "ablation.tsv").string(),
             header_prefix(config, "ablation") + ablation_machine(table));
}

void cmd_edit(const EditCliOptions& options, std::istream& in, std::ostream& out) {
  require_file(options.checkpoint_path, "checkpoint");
  const Model model = Model::load(options.checkpoint_path);
  std::string line;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;
    EditRequest request;
    request.x0 = tokenize(line);
    model.vocab().index_sentence(request.x0);
    request.kind = options.kind;
    request.target = options.target;
    request.log_tau = options.log_tau;
    request.beam_width = options.beam_width;
    request.search = options.search;
    const EditResult result = edit(model, request);
    out << detokenize(result.x_star) << '\t' << format_double(result.predicted_outcome)
        << "\n";
  }
}

}  // namespace quase
