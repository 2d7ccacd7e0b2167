#include "minflip/cli.hpp"

#include <filesystem>
#include <sstream>

#include <CLI11.hpp>

#include "minflip/attack.hpp"
#include "minflip/campaign.hpp"
#include "minflip/errors.hpp"
#include "minflip/io.hpp"
#include "minflip/metrics.hpp"
#include "minflip/train.hpp"

namespace minflip {

namespace {

std::vector<int> parse_hidden_dims(const std::string& text) {
  std::vector<int> dims;
  if (text.empty()) return dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      dims.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ValidationError("cannot parse hidden dims '" + text + "'");
    }
  }
  return dims;
}

struct CliOptions {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string adv_path;
  std::string mode = "full";
  std::string hidden = "64,32,8";
  std::string activation = "relu";
  std::uint64_t seed = 0;
  int rounds = 150;
  int runs = 20;
  int steps = 2500;
  int followup_steps = 250;
  int threads = 0;
  int epochs = 200;
  double lr = 0.1;
  double temperature = 1.0;
  std::size_t n = 500;
  std::size_t dim = 87;
  double margin = 1.0;
  double noise = 0.3;
};

int cmd_gen_data(const CliOptions& opt, std::ostream& out) {
  const Dataset data = generate_synthetic(opt.n, opt.dim, opt.margin, opt.noise, opt.seed);
  save_dataset(data, opt.out_path);
  out << "wrote " << data.size() << "x" << data.dim() << " dataset to " << opt.out_path
      << "\n";
  return 0;
}

int cmd_train(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(opt.data_path);
  ModelSpec spec;
  spec.input_dim = static_cast<int>(data.dim());
  spec.hidden_dims = parse_hidden_dims(opt.hidden);
  spec.hidden_activation = activation_from_string(opt.activation);
  TrainOptions topts;
  topts.epochs = opt.epochs;
  topts.learning_rate = opt.lr;
  topts.seed = opt.seed;
  topts.require_clean_perfect = false;
  topts.temperature = opt.temperature;
  const TrainResult result = train_surrogate(data, spec, topts);
  save_model(result.model, opt.out_path);
  out << "train accuracy " << format_double(result.accuracy) << " after "
      << result.epochs_run << " epochs; model written to " << opt.out_path << "\n";
  if (result.accuracy < 1.0) {
    err << "error: surrogate not clean-perfect (accuracy "
        << format_double(result.accuracy) << "); fooling-ratio denominators will shrink\n";
    return 1;
  }
  return 0;
}

int cmd_attack(const CliOptions& opt, std::ostream& out) {
  const Model model = load_model(opt.model_path);
  const Dataset data = load_dataset(opt.data_path);

  CampaignConfig cfg;
  cfg.rounds = opt.mode == "single-round" ? 1 : opt.rounds;
  cfg.runs_per_round = opt.runs;
  cfg.base_seed = opt.seed;
  cfg.threads = opt.threads;
  cfg.gd.steps = opt.steps;
  cfg.gd.followup_steps = opt.followup_steps;

  Matrix x_adv;
  std::vector<MetricsRecord> history;
  if (opt.mode == "core") {
    const std::vector<AttackCandidate> cands = core_baseline(model, data, opt.seed, opt.threads);
    x_adv = data.features;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto dst = x_adv.row(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += cands[i].delta[k];
    }
    history.push_back(compute_metrics(1, model, data.features, x_adv, data.labels));
  } else if (opt.mode == "full" || opt.mode == "single-round") {
    RoundCallback on_round;
    CampaignState state = init_campaign_state(data, cfg);
    if (!opt.checkpoint_path.empty()) {
      if (std::filesystem::exists(opt.checkpoint_path)) {
        state = load_checkpoint(opt.checkpoint_path, data, cfg);
        out << "resuming from checkpoint at round " << state.round << "\n";
      }
      const std::string path = opt.checkpoint_path;
      on_round = [path, &cfg](const CampaignState& s) { save_checkpoint(s, cfg, path); };
    }
    CampaignResult result = run_campaign(model, data, cfg, std::move(state), on_round);
    x_adv = std::move(result.x_adv);
    history = std::move(result.history);
  } else {
    throw ValidationError("unknown mode '" + opt.mode + "' (full, single-round, core)");
  }

  save_adversarial(x_adv, opt.out_path);
  if (!opt.metrics_path.empty() && !history.empty()) {
    emit_metrics_csv(history, opt.metrics_path);
  }
  const MetricsRecord final_rec =
      compute_metrics(static_cast<int>(history.size()), model, data.features, x_adv,
                      data.labels);
  out << summary_line(final_rec.fooling_ratio, final_rec.mean_l1_fooled, final_rec.score)
      << "\n";
  return 0;
}

int cmd_evaluate(const CliOptions& opt, std::ostream& out) {
  const Model model = load_model(opt.model_path);
  const Dataset data = load_dataset(opt.data_path);
  const Matrix x_adv = load_matrix_csv(opt.adv_path);
  const MetricsRecord rec = compute_metrics(0, model, data.features, x_adv, data.labels);
  out << summary_line(rec.fooling_ratio, rec.mean_l1_fooled, rec.score) << "\n";
  return 0;
}

int cmd_report(const CliOptions& opt, std::ostream& out) {
  const std::vector<MetricsRecord> history = load_metrics_csv(opt.metrics_path);
  const MetricsRecord& last = history.back();
  out << "rounds=" << history.size() << " "
      << summary_line(last.fooling_ratio, last.mean_l1_fooled, last.score) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"white-box L1-minimal adversarial attack pipeline for dense binary classifiers"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic two-cluster dataset");
  gen->add_option("--out", opt.out_path, "output dataset CSV")->required();
  gen->add_option("--n", opt.n, "number of rows");
  gen->add_option("--dim", opt.dim, "feature count");
  gen->add_option("--margin", opt.margin, "cluster offset along the class direction");
  gen->add_option("--noise", opt.noise, "per-coordinate noise sigma");
  gen->add_option("--seed", opt.seed, "random seed");

  CLI::App* train = app.add_subcommand("train-surrogate", "train a stand-in classifier to 100% train accuracy");
  train->add_option("--data", opt.data_path, "training dataset CSV")->required();
  train->add_option("--out", opt.out_path, "output model JSON")->required();
  train->add_option("--hidden", opt.hidden, "comma-separated hidden dims");
  train->add_option("--activation", opt.activation, "relu or tanh");
  train->add_option("--epochs", opt.epochs, "epoch budget");
  train->add_option("--lr", opt.lr, "SGD learning rate");
  train->add_option("--temperature", opt.temperature,
                    "post-training logit temperature (>1 softens confidence)");
  train->add_option("--seed", opt.seed, "random seed");

  CLI::App* attack = app.add_subcommand("attack", "run the attack pipeline");
  attack->add_option("--model", opt.model_path, "model JSON")->required();
  attack->add_option("--data", opt.data_path, "dataset CSV")->required();
  attack->add_option("--out", opt.out_path, "output adversarial CSV")->required();
  attack->add_option("--metrics", opt.metrics_path, "output per-round metrics CSV");
  attack->add_option("--mode", opt.mode, "full, single-round or core");
  attack->add_option("--rounds", opt.rounds, "optimization rounds");
  attack->add_option("--runs", opt.runs, "parallel runs per round");
  attack->add_option("--steps", opt.steps, "main-phase GD steps per run");
  attack->add_option("--followup-steps", opt.followup_steps, "follow-up phase steps");
  attack->add_option("--seed", opt.seed, "base seed");
  attack->add_option("--threads", opt.threads, "worker threads (0 = auto)");
  attack->add_option("--checkpoint", opt.checkpoint_path,
                     "checkpoint JSON, written each round and resumed from if present");

  CLI::App* evaluate = app.add_subcommand("evaluate", "recompute FR/D/S from files");
  evaluate->add_option("--model", opt.model_path, "model JSON")->required();
  evaluate->add_option("--data", opt.data_path, "clean dataset CSV")->required();
  evaluate->add_option("--adv", opt.adv_path, "adversarial matrix CSV")->required();

  CLI::App* report = app.add_subcommand("report", "summarize a metrics CSV");
  report->add_option("--metrics", opt.metrics_path, "metrics CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opt, out);
    if (train->parsed()) return cmd_train(opt, out, err);
    if (attack->parsed()) return cmd_attack(opt, out);
    if (evaluate->parsed()) return cmd_evaluate(opt, out);
    if (report->parsed()) return cmd_report(opt, out);
    err << "no subcommand given\n" << app.help();
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "fatal: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace minflip
