// fhash: command-line front end for the feature-hashing toolkit.
#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "fhash/cfsketch.hpp"
#include "fhash/corpus.hpp"
#include "fhash/errors.hpp"
#include "fhash/learner.hpp"
#include "fhash/verify.hpp"

namespace {

using namespace fhash;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerifyFail = 2;
constexpr int kExitPrecondition = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct GenerateArgs {
  corpus::GeneratorConfig cfg;
  std::string out, train, test, truth;
  double train_fraction = 10.0 / 14.0;
};

int run_generate(const GenerateArgs& a) {
  const auto gen = corpus::generate(a.cfg);
  if (!a.out.empty()) corpus::write_corpus(a.out, gen.lines);
  if (!a.train.empty() || !a.test.empty()) {
    const auto split = corpus::time_split(gen.lines, a.train_fraction);
    if (split.degenerate) std::cerr << "warning: zero time range, every line went to train\n";
    if (!a.train.empty()) corpus::write_corpus(a.train, split.train);
    if (!a.test.empty()) corpus::write_corpus(a.test, split.test);
    std::cout << "train " << split.train.size() << " test " << split.test.size() << " split_time "
              << split.split_time << '\n';
  }
  if (!a.truth.empty()) corpus::write_truth(a.truth, corpus::GeneratorModel(a.cfg));
  std::cout << "generated " << gen.lines.size() << " emails\n";
  return kExitOk;
}

struct TrainArgs {
  int bits = 18;
  std::string input, output;
  bool personalized = false;
  bool binary = false;
  double lr0 = learn::kDefaultLr0;
  int epochs = 1;
  std::uint64_t seed = 0;
  bool no_step_cap = false;
};

int run_train(const TrainArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  auto examples = corpus::read_corpus(a.input);
  learn::HashedModel model(HashConfig::for_trial(a.bits, a.seed), a.lr0);
  learn::TrainOptions opts;
  opts.features = {.personalized = a.personalized, .bias = true, .binary = a.binary};
  opts.epochs = a.epochs;
  opts.update.cap_step = !a.no_step_cap;
  learn::train(model, std::move(examples), opts);
  learn::save_model(model, a.output);
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  std::cout << "examples_seen " << model.examples_seen() << '\n'
            << "nonzero_buckets " << model.nonzero_weights() << " of " << model.config().m() << '\n'
            << "wall_seconds " << wall.count() << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::string model, input, output;
  bool personalized = false;
  bool binary = false;
};

int run_predict(const PredictArgs& a) {
  const auto model = learn::load_model(a.model);
  const auto examples = corpus::read_corpus(a.input);
  const auto scores =
      learn::score_all(model, examples, {.personalized = a.personalized, .bias = true, .binary = a.binary});
  std::ostringstream out;
  out.precision(17);
  out << "label\tuser\ttimestamp\tscore\n";
  for (std::size_t i = 0; i < examples.size(); ++i)
    out << examples[i].label << '\t' << examples[i].user << '\t' << examples[i].timestamp << '\t' << scores[i]
        << '\n';
  write_text(a.output, out.str());
  return kExitOk;
}

struct EvaluateArgs {
  std::string model, test, train, out, csv, baseline;
  double fp_rate = learn::kDefaultFpRate;
  bool personalized = false;
  bool binary = false;
  bool buckets = false;
  bool ratio = false;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.ratio && a.baseline.empty()) throw InputError("--ratio needs --baseline-report");
  std::optional<learn::EvalReport> baseline;
  if (!a.baseline.empty()) {
    std::ifstream in(a.baseline);
    if (!in) throw InputError("cannot open baseline report " + a.baseline);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError("baseline report " + a.baseline + ": " + e.what());
    }
    baseline = learn::EvalReport::from_json(j);
  }
  const auto model = learn::load_model(a.model);
  const auto test = corpus::read_corpus(a.test);
  learn::UserActivity activity;
  if (!a.train.empty()) {
    activity = learn::count_training_emails(corpus::read_corpus(a.train));
  } else if (a.buckets) {
    std::cerr << "warning: no --train corpus, every user falls in bucket [0]\n";
  }
  const auto report = learn::evaluate_model(
      model, test, activity, {.personalized = a.personalized, .bias = true, .binary = a.binary}, a.fp_rate);

  json j = report.to_json();
  if (!a.buckets) j.erase("buckets");
  if (baseline) j["ratio"] = learn::ratio_report(report, *baseline);
  write_text(a.out, j.dump(2) + "\n");
  if (!a.csv.empty()) write_text(a.csv, report.to_csv(baseline ? &*baseline : nullptr));
  return kExitOk;
}

struct VerifyArgs {
  std::string suite, out, write_default;
  unsigned jobs = 1;
};

int run_verify(const VerifyArgs& a) {
  if (!a.write_default.empty()) {
    write_text(a.write_default, verify::default_suite().dump(2) + "\n");
    if (a.suite.empty()) return kExitOk;
  }
  if (a.suite.empty() || a.out.empty()) throw InputError("verify needs --suite and --out");
  const json report = verify::run_report(a.suite, a.out, a.jobs);
  bool failed = false, precondition = false;
  for (const auto& e : report.at("experiments")) {
    const auto status = e.at("status").get<std::string>();
    std::cout << e.value("name", std::string()) << ": " << status << '\n';
    if (status == verify::to_string(verify::Status::fail)) failed = true;
    if (status == verify::to_string(verify::Status::precondition_error)) precondition = true;
  }
  if (precondition) return kExitPrecondition;
  return failed ? kExitVerifyFail : kExitOk;
}

struct SweepArgs {
  std::string u, w, out;
  std::size_t rows = 4, cols = 32;
  std::vector<int> bits{4, 6, 8, 10};
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

int run_cf_sweep(const SweepArgs& a) {
  if (a.u.empty() != a.w.empty()) throw InputError("give both --u and --w, or neither");
  const cf::FactorMatrix U = a.u.empty() ? cf::random_factor(a.rows, a.cols, a.seed) : cf::read_triples(a.u);
  const cf::FactorMatrix W =
      a.w.empty() ? cf::random_factor(a.rows, a.cols, splitmix64(a.seed)) : cf::read_triples(a.w);
  for (int b : a.bits)
    if (b < kMinBits || b > kMaxBits) throw InputError("--bits values must lie in [1, 30]");
  write_text(a.out, cf::sweep_csv(cf::frobenius_error_sweep(U, W, a.bits, a.trials, a.seed, a.jobs)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature hashing: signed hashed features, personalized hashed learning, verification"};
  app.require_subcommand(1);
  const auto bits_range = CLI::Range(kMinBits, kMaxBits);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic multi-user spam corpus");
  g->add_option("--out", gen.out, "Full corpus (TSV, .gz compresses)");
  g->add_option("--train", gen.train, "Training part of the time split");
  g->add_option("--test", gen.test, "Test part of the time split");
  g->add_option("--truth", gen.truth, "Per-user topic labels (user, topic, label)");
  g->add_option("--train-fraction", gen.train_fraction, "Split point as a fraction of the time range")
      ->capture_default_str();
  g->add_option("--users", gen.cfg.n_users, "Number of users")->capture_default_str();
  g->add_option("--emails", gen.cfg.n_emails, "Number of emails")->capture_default_str();
  g->add_option("--vocab", gen.cfg.vocab_size, "Vocabulary size")->capture_default_str();
  g->add_option("--spam-prior", gen.cfg.spam_prior, "Share of topics labeled spam")->capture_default_str();
  g->add_option("--zipf", gen.cfg.zipf_exponent, "Zipf exponent of user activity")->capture_default_str();
  g->add_option("--disagreement", gen.cfg.disagreement_rate, "Per-user flip rate of borderline topics")
      ->capture_default_str();
  g->add_option("--topics", gen.cfg.n_topics, "Number of topics")->capture_default_str();
  g->add_option("--seed", gen.cfg.seed, "Generator seed")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a hashed square-loss SGD classifier");
  t->add_option("--bits", tr.bits, "log2 of the hashed dimension")->check(bits_range)->capture_default_str();
  t->add_option("--input", tr.input, "Training corpus")->required();
  t->add_option("--output", tr.output, "Model file")->required();
  t->add_flag("--personalized", tr.personalized, "Add a user-individualized copy of every token");
  t->add_flag("--binary", tr.binary, "Token presence instead of term frequency");
  t->add_option("--lr0", tr.lr0, "Initial learning rate, lambda_t = lr0 / sqrt(t)")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Passes over the data")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--seed", tr.seed, "Hash seed")->capture_default_str();
  t->add_flag("--no-step-cap", tr.no_step_cap, "Plain lr0/sqrt(t) steps without the 1/|phi|^2 cap");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Score a corpus with a trained model");
  p->add_option("--model", pr.model, "Model file")->required();
  p->add_option("--input", pr.input, "Corpus to score")->required();
  p->add_option("--output", pr.output, "Scores TSV (default stdout)");
  p->add_flag("--personalized", pr.personalized, "Model was trained with --personalized");
  p->add_flag("--binary", pr.binary, "Model was trained with --binary");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Uncaught-spam rate at a fixed not-spam false-positive rate");
  e->add_option("--model", ev.model, "Model file")->required();
  e->add_option("--test", ev.test, "Test corpus")->required();
  e->add_option("--train", ev.train, "Training corpus, for per-user activity buckets");
  e->add_option("--fp-rate", ev.fp_rate, "Not-spam false-positive rate for the threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  e->add_option("--baseline-report", ev.baseline, "Report of a baseline run; adds uncaught-rate ratios");
  e->add_flag("--buckets", ev.buckets, "Include per-bucket results");
  e->add_flag("--ratio", ev.ratio, "Require ratios against --baseline-report");
  e->add_flag("--personalized", ev.personalized, "Model was trained with --personalized");
  e->add_flag("--binary", ev.binary, "Model was trained with --binary");
  e->add_option("--out", ev.out, "JSON report (default stdout)");
  e->add_option("--csv", ev.csv, "Per-bucket CSV table");

  VerifyArgs ve;
  auto* v = app.add_subcommand("verify", "Monte Carlo checks of the hashing bounds");
  v->add_option("--suite", ve.suite, "Suite config (JSON)");
  v->add_option("--out", ve.out, "Report file (JSON)");
  v->add_option("--jobs", ve.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--write-default-suite", ve.write_default, "Write the default suite config to this path");

  SweepArgs sw;
  auto* c = app.add_subcommand("cf-sweep", "Frobenius error of the hashed factor estimate over widths");
  c->add_option("--u", sw.u, "U factor as TSV triples (row, col, value)");
  c->add_option("--w", sw.w, "W factor as TSV triples");
  c->add_option("--rows", sw.rows, "Inner dimension of random factors")->capture_default_str();
  c->add_option("--cols", sw.cols, "Columns of random factors")->capture_default_str();
  c->add_option("--bits", sw.bits, "Widths to sweep")->delimiter(',')->capture_default_str();
  c->add_option("--trials", sw.trials, "Seed pairs per width")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--seed", sw.seed, "Base seed")->capture_default_str();
  c->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--out", sw.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitError;
  }

  try {
    if (*g) return run_generate(gen);
    if (*t) return run_train(tr);
    if (*p) return run_predict(pr);
    if (*e) return run_evaluate(ev);
    if (*v) return run_verify(ve);
    if (*c) return run_cf_sweep(sw);
  } catch (const PreconditionError& err) {
    std::cerr << "precondition error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
