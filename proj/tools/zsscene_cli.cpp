#include <iostream>

#include <CLI11.hpp>

#include "zsscene/cli/commands.hpp"

namespace cli = zsscene::cli;

namespace
{
  template <class T>
  void optional_option(CLI::App* app, const std::string& name, std::optional<T>& slot, const std::string& help)
  {
    app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"Zero-shot scene understanding: synthetic data, training, evaluation and reporting"};
  app.require_subcommand(1);

  cli::SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic scene dataset as JSONL");
  optional_option(s, "--config", synth.config, "Synth config JSON");
  optional_option(s, "--seed", synth.seed, "Override the config seed");
  s->add_option("--out", synth.out, "Output dataset JSONL")->required();
  optional_option(s, "--classes-out", synth.classes_out, "Write the class list, one per line");

  cli::TrainOptions train;
  auto* t = app.add_subcommand("train", "Train the model and write a checkpoint");
  t->add_option("dataset", train.dataset, "Dataset JSONL")->required();
  optional_option(t, "--config", train.config, "Run config JSON");
  optional_option(t, "--seed", train.seed, "Override the config seed");
  t->add_flag("--symmetric-loss", train.symmetric_loss, "Average image-to-text and text-to-image losses");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  optional_option(t, "--loss-csv", train.loss_csv, "Per-epoch loss CSV (default: <out>.loss.csv)");

  cli::EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint and write metrics JSON plus a table CSV");
  e->add_option("checkpoint", eval.checkpoint, "Checkpoint path")->required();
  e->add_option("dataset", eval.dataset, "Dataset JSONL")->required();
  optional_option(e, "--classes", eval.classes, "Class list file (default: dataset labels)");
  optional_option(e, "--templates", eval.templates, "Prompt template file, one per line");
  e->add_option("--zs-mode", eval.zs_mode, "Zero-shot mode for the headline rows")
    ->check(CLI::IsMember({"classic", "generalized"}));
  optional_option(e, "--captions", eval.captions, "Generated captions JSONL {id, caption}");
  optional_option(e, "--predictions", eval.predictions, "Per-record predictions JSONL");
  optional_option(e, "--run", eval.run, "Run name (default: output file stem)");
  e->add_option("--out", eval.out, "Metrics JSON; the CSV table is written alongside")->required();

  cli::ClassifyOptions classify;
  auto* c = app.add_subcommand("classify", "Zero-shot classify records, optionally with a feedback update");
  c->add_option("checkpoint", classify.checkpoint, "Checkpoint path")->required();
  c->add_option("records", classify.records, "Records JSONL")->required();
  optional_option(c, "--classes", classify.classes, "Class list file (default: record labels)");
  optional_option(c, "--templates", classify.templates, "Prompt template file, one per line");
  optional_option(c, "--feedback", classify.feedback, "Correct label; emits the post-update prediction too");
  optional_option(c, "--feedback-lr", classify.feedback_lr, "Feedback step size (default: from checkpoint)");
  optional_option(c, "--out", classify.out, "Output JSONL (default: stdout)");

  cli::ScoreCaptionsOptions score;
  auto* sc = app.add_subcommand("score-captions", "Score generated captions against references");
  sc->add_option("candidates", score.candidates, "Candidate captions JSONL")->required();
  sc->add_option("references", score.references, "Reference captions JSONL")->required();
  sc->add_option("--out", score.out, "Per-id CSV; JSON is written alongside")->required();

  cli::ReportOptions report;
  auto* r = app.add_subcommand("report", "Combine metrics files into a table and a plot CSV");
  r->add_option("inputs", report.inputs, "Metrics JSON files")->required();
  r->add_option("--out", report.out, "Text table path")->required();
  optional_option(r, "--plot-csv", report.plot_csv, "Plot CSV (default: <out>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : cli::kInputError;
  }

  cli::Precision precision;
  try {
    precision = cli::precision_from_env();
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return cli::kInputError;
  }
  train.precision = eval.precision = classify.precision = precision;

  if (*s)
    return cli::cmd_synth(synth);
  if (*t)
    return cli::cmd_train(train);
  if (*e)
    return cli::cmd_eval(eval);
  if (*c)
    return cli::cmd_classify(classify);
  if (*sc)
    return cli::cmd_score_captions(score);
  return cli::cmd_report(report);
}
