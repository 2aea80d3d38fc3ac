// Command-line front end over the negscope C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "negscope/negscope.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
};

void check(ns_status st) {
  if (st == NS_OK) return;
  std::fprintf(stderr, "negscope: %s: %s\n", ns_status_name(st), ns_last_error());
  throw Failure{st == NS_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure};
}

// RAII owners for C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(Handle&& o) noexcept : p(std::exchange(o.p, nullptr)) {}
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Config = Handle<ns_config, ns_config_free>;
using Corpus = Handle<ns_corpus, ns_corpus_free>;
using Model = Handle<ns_model, ns_model_free>;
using Manifest = Handle<ns_manifest, ns_manifest_free>;

struct Text {
  char* p = nullptr;
  ~Text() { ns_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "negscope: cannot write %s\n", path.c_str());
    throw Failure{kExitFailure};
  }
  out << text;
}

Corpus load_corpus(const std::string& path) {
  Corpus c;
  check(ns_corpus_load(path.c_str(), c.out()));
  return c;
}

struct ManifestBuilder {
  Manifest m;
  explicit ManifestBuilder(const std::string& command) {
    check(ns_manifest_create(command.c_str(), m.out()));
  }
  ManifestBuilder& config(const ns_config* c) {
    check(ns_manifest_set_config(m.get(), c));
    return *this;
  }
  ManifestBuilder& seed(std::uint64_t s) {
    check(ns_manifest_set_seed(m.get(), s));
    return *this;
  }
  ManifestBuilder& input(const char* role, const std::string& path) {
    if (!path.empty()) check(ns_manifest_add_input(m.get(), role, path.c_str()));
    return *this;
  }
  ManifestBuilder& output(const char* role, const std::string& path) {
    if (!path.empty()) check(ns_manifest_add_output(m.get(), role, path.c_str()));
    return *this;
  }
  void write() { check(ns_manifest_write(m.get(), nullptr)); }
};

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

void append_line(const char* line, void* user) {
  *static_cast<std::ofstream*>(user) << line << '\n';
  std::fprintf(stderr, "%s\n", line);
}

// Settings shared by train and ablate: config file, then --set, then
// dedicated flags.
struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;
  std::optional<std::string> hidden, layers, epochs, patience, seed, lr, select, word_vectors,
      pre_encoder, threads;
  bool freeze_words = false;

  void add(CLI::App* app, bool with_layers) {
    app->add_option("--config", file, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override one setting (key=value); repeatable");
    app->add_option("--hidden", hidden, "hidden state width");
    if (with_layers) app->add_option("--layers", layers, "GCN layer count (default 4)");
    if (with_layers) app->add_option("--pre-encoder", pre_encoder, "GCN pre-encoder: dense-relu or bilstm");
    app->add_option("--epochs", epochs, "maximum epochs");
    app->add_option("--patience", patience, "early-stopping patience");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--select", select, "dev selection metric: f1 or pcs");
    app->add_option("--word-vectors", word_vectors, "text embedding file for word initialization");
    app->add_flag("--freeze-words", freeze_words, "keep word vectors fixed");
    app->add_option("--threads", threads, "parallel training runs (ablate)");
  }

  Config build(const std::optional<std::string>& model) const {
    Config c;
    if (file.empty()) {
      check(ns_config_create(c.out()));
    } else {
      check(ns_config_load(file.c_str(), c.out()));
    }
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "negscope: --set expects key=value, got '%s'\n", kv.c_str());
        throw Failure{kExitUsage};
      }
      check(ns_config_set(c.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    auto apply = [&](const char* key, const std::optional<std::string>& v) {
      if (v) check(ns_config_set(c.get(), key, v->c_str()));
    };
    apply("model", model);
    apply("hidden", hidden);
    apply("layers", layers);
    apply("pre_encoder", pre_encoder);
    apply("epochs", epochs);
    apply("patience", patience);
    apply("seed", seed);
    apply("lr", lr);
    apply("select", select);
    apply("word_vectors", word_vectors);
    apply("threads", threads);
    if (freeze_words) check(ns_config_set(c.get(), "freeze_words", "true"));
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"negscope: negation scope detection over dependency trees"};
  app.set_version_flag("--version", std::string(ns_version()));
  app.require_subcommand(1);
  int verbosity = 2;
  app.add_option("--log-level", verbosity, "0 debug, 1 info, 2 warn, 3 error, 4 off")
      ->check(CLI::Range(0, 4));

  // train
  auto* train = app.add_subcommand("train", "train one model and write a checkpoint");
  std::optional<std::string> train_model;
  std::string train_path, dev_path, ckpt_out, log_path;
  ConfigFlags train_flags;
  train->add_option("--model", train_model, "bilstm, dlstm or gcn");
  train->add_option("--train", train_path, "training corpus (NSF)")->required()->check(CLI::ExistingFile);
  train->add_option("--dev", dev_path, "development corpus (NSF)")->check(CLI::ExistingFile);
  train->add_option("--out", ckpt_out, "checkpoint path")->required();
  train->add_option("--log", log_path, "training log (default <out>.log)");
  train_flags.add(train, true);

  // predict
  auto* predict = app.add_subcommand("predict", "write per-token scope probabilities");
  std::string pred_ckpt, pred_in, pred_out, pred_vectors;
  predict->add_option("--checkpoint", pred_ckpt, "trained checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--input", pred_in, "corpus (NSF)")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "probability TSV")->required();
  predict->add_option("--word-vectors", pred_vectors, "replace the word table before predicting")
      ->check(CLI::ExistingFile);

  // ensemble
  auto* ensemble = app.add_subcommand("ensemble", "confidence-vote two probability files");
  std::string ens_a, ens_b, ens_out;
  ensemble->add_option("--a", ens_a, "probabilities of model A (wins ties)")->required()->check(CLI::ExistingFile);
  ensemble->add_option("--b", ens_b, "probabilities of model B")->required()->check(CLI::ExistingFile);
  ensemble->add_option("--out", ens_out, "label TSV")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold scopes");
  std::string ev_pred, ev_gold, ev_format = "text", ev_out, ev_diag, ev_pred_np, ev_gold_np;
  bool ev_easy_hard = false, ev_lca = false, ev_macro = false;
  evaluate->add_option("--pred", ev_pred, "label or probability TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gold", ev_gold, "gold corpus (NSF)")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--easy-hard", ev_easy_hard, "add the punctuation easy/hard breakdown");
  evaluate->add_flag("--lca-report", ev_lca, "add the LCA syntactic-environment breakdown");
  evaluate->add_flag("--macro", ev_macro, "average P/R/F1 per instance");
  evaluate->add_option("--format", ev_format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));
  evaluate->add_option("--out", ev_out, "report path (default stdout)");
  evaluate->add_option("--diagnostics", ev_diag, "per-instance TSV path");
  evaluate->add_option("--pred-stripped", ev_pred_np, "predictions of the punctuation-free run")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--gold-stripped", ev_gold_np, "punctuation-free gold corpus")
      ->check(CLI::ExistingFile);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "3x3 feature-ablation grid of voting ensembles");
  std::string ab_train, ab_dev, ab_eval, ab_out, ab_format = "text";
  ConfigFlags ab_flags;
  ablate->add_option("--train", ab_train, "training corpus")->required()->check(CLI::ExistingFile);
  ablate->add_option("--dev", ab_dev, "development corpus")->check(CLI::ExistingFile);
  ablate->add_option("--eval", ab_eval, "evaluation corpus")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", ab_out, "report path (default stdout)");
  ablate->add_option("--format", ab_format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));
  ab_flags.add(ablate, false);

  // strip-punct
  auto* strip = app.add_subcommand("strip-punct", "remove punctuation tokens from a corpus");
  std::string sp_in, sp_out;
  bool sp_labels = false;
  strip->add_option("--input", sp_in, "corpus (NSF)")->required()->check(CLI::ExistingFile);
  strip->add_option("--out", sp_out, "output corpus")->required();
  strip->add_flag("--strip-labels", sp_labels, "also drop language-specific label subtypes");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_model = "all";
  std::size_t gc_trials = 20;
  double gc_tol = 1e-4;
  std::uint64_t gc_seed = 1;
  gradcheck->add_option("--model", gc_model, "bilstm, dlstm, gcn or all")
      ->check(CLI::IsMember({"bilstm", "dlstm", "gcn", "all"}));
  gradcheck->add_option("--trials", gc_trials, "random instances per model")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", gc_tol, "maximum relative error")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "instance seed");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string sy_task = "subtree", sy_out;
  ns_synth_options sy;
  ns_synth_defaults(&sy);
  synth->add_option("--task", sy_task, "subtree or window")->check(CLI::IsMember({"subtree", "window"}));
  synth->add_option("--n", sy.sentences, "sentence count");
  synth->add_option("--min-tokens", sy.min_tokens, "minimum content tokens (>= 3)");
  synth->add_option("--max-tokens", sy.max_tokens, "maximum content tokens");
  synth->add_option("--vocab", sy.vocab, "content vocabulary size");
  synth->add_option("--min-punct", sy.min_punct, "window task: minimum punctuation marks");
  synth->add_option("--max-punct", sy.max_punct, "window task: maximum punctuation marks");
  synth->add_option("--seed", sy.seed, "generator seed");
  synth->add_option("--out", sy_out, "output corpus")->required();

  // compose
  auto* compose = app.add_subcommand("compose", "build cross-lingual word vectors for a corpus");
  std::string co_method, co_vectors, co_trans, co_corpus, co_out;
  bool co_uniform = false;
  compose->add_option("--method", co_method, "premapped|average|argmax (or a|b|c)")->required();
  compose->add_option("--vectors", co_vectors, "target-space vectors")->required()->check(CLI::ExistingFile);
  compose->add_option("--translations", co_trans, "source<TAB>target<TAB>prob table")
      ->check(CLI::ExistingFile);
  compose->add_option("--corpus", co_corpus, "source-language corpus (NSF)")->required()->check(CLI::ExistingFile);
  compose->add_flag("--uniform", co_uniform, "average translations with equal weights");
  compose->add_option("--out", co_out, "output vectors")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "negscope: " << e.what() << "\n\n";
    const CLI::App* verb = &app;
    for (auto* sub : app.get_subcommands()) verb = sub;
    std::cerr << verb->help();
    return kExitUsage;
  }
  ns_set_log_level(verbosity);

  if (train->parsed()) {
    Config cfg = train_flags.build(train_model);
    Corpus tr = load_corpus(train_path);
    Corpus dv;
    if (!dev_path.empty()) dv = load_corpus(dev_path);
    if (log_path.empty()) log_path = ckpt_out + ".log";
    std::ofstream log(log_path);
    if (!log) {
      std::fprintf(stderr, "negscope: cannot write %s\n", log_path.c_str());
      return kExitFailure;
    }
    Model model;
    check(ns_train(cfg.get(), tr.get(), dv.get(), append_line, &log, model.out()));
    check(ns_model_save(model.get(), ckpt_out.c_str()));
    Text resolved;
    check(ns_config_get(cfg.get(), "word_vectors", resolved.out()));
    ManifestBuilder(train->get_name())
        .config(cfg.get())
        .input("train", train_path)
        .input("dev", dev_path)
        .input("config", train_flags.file)
        .input("word_vectors", resolved.str())
        .output("checkpoint", ckpt_out)
        .output("log", log_path)
        .write();
    return kExitOk;
  }

  if (predict->parsed()) {
    Model model;
    check(ns_model_load(pred_ckpt.c_str(), model.out()));
    if (!pred_vectors.empty()) check(ns_model_set_word_vectors(model.get(), pred_vectors.c_str(), 1));
    Corpus in = load_corpus(pred_in);
    check(ns_predict(model.get(), in.get(), pred_out.c_str()));
    ManifestBuilder(predict->get_name())
        .input("checkpoint", pred_ckpt)
        .input("input", pred_in)
        .input("word_vectors", pred_vectors)
        .output("probabilities", pred_out)
        .write();
    return kExitOk;
  }

  if (ensemble->parsed()) {
    check(ns_ensemble(ens_a.c_str(), ens_b.c_str(), ens_out.c_str()));
    ManifestBuilder(ensemble->get_name()).input("a", ens_a).input("b", ens_b).output("labels", ens_out).write();
    return kExitOk;
  }

  if (evaluate->parsed()) {
    unsigned flags = 0;
    if (ev_easy_hard) flags |= NS_EVAL_EASY_HARD;
    if (ev_lca) flags |= NS_EVAL_LCA;
    if (ev_macro) flags |= NS_EVAL_MACRO;
    if (ev_format == "tsv") flags |= NS_EVAL_TSV;
    if (ev_pred_np.empty() != ev_gold_np.empty()) {
      std::fprintf(stderr, "negscope: --pred-stripped and --gold-stripped go together\n");
      return kExitUsage;
    }
    Corpus gold = load_corpus(ev_gold);
    Text report, diag;
    check(ns_evaluate(ev_pred.c_str(), gold.get(), flags, nullptr, report.out(),
                      ev_diag.empty() ? nullptr : diag.out()));
    std::string text = report.str();
    if (!ev_pred_np.empty()) {
      Corpus gold_np = load_corpus(ev_gold_np);
      Text paired;
      check(ns_evaluate_paired(ev_pred.c_str(), gold.get(), ev_pred_np.c_str(), gold_np.get(),
                               flags, paired.out()));
      text += (flags & NS_EVAL_TSV) ? paired.str() : "\npunctuation removal\n" + paired.str();
    }
    emit(text, ev_out);
    if (!ev_diag.empty()) emit(diag.str(), ev_diag);
    if (!ev_out.empty()) {
      ManifestBuilder(evaluate->get_name())
          .input("pred", ev_pred)
          .input("gold", ev_gold)
          .input("pred_stripped", ev_pred_np)
          .input("gold_stripped", ev_gold_np)
          .output("report", ev_out)
          .output("diagnostics", ev_diag)
          .write();
    }
    return kExitOk;
  }

  if (ablate->parsed()) {
    Config cfg = ab_flags.build(std::nullopt);
    Corpus tr = load_corpus(ab_train);
    Corpus dv;
    if (!ab_dev.empty()) dv = load_corpus(ab_dev);
    Corpus ev = load_corpus(ab_eval);
    Text report;
    check(ns_ablate(cfg.get(), tr.get(), dv.get(), ev.get(), ab_format == "tsv" ? NS_EVAL_TSV : 0,
                    print_line, nullptr, report.out()));
    emit(report.str(), ab_out);
    if (!ab_out.empty()) {
      ManifestBuilder(ablate->get_name())
          .config(cfg.get())
          .input("train", ab_train)
          .input("dev", ab_dev)
          .input("eval", ab_eval)
          .input("config", ab_flags.file)
          .output("report", ab_out)
          .write();
    }
    return kExitOk;
  }

  if (strip->parsed()) {
    Corpus in = load_corpus(sp_in);
    Corpus out;
    check(ns_corpus_strip_punct(in.get(), out.out()));
    if (sp_labels) {
      Corpus relabeled;
      check(ns_corpus_strip_labels(out.get(), relabeled.out()));
      std::swap(out.p, relabeled.p);
    }
    check(ns_corpus_save(out.get(), sp_out.c_str()));
    ManifestBuilder(strip->get_name()).input("input", sp_in).output("corpus", sp_out).write();
    return kExitOk;
  }

  if (gradcheck->parsed()) {
    std::vector<std::string> kinds;
    if (gc_model == "all") {
      kinds = {"bilstm", "dlstm", "gcn"};
    } else {
      kinds = {gc_model};
    }
    bool ok = true;
    for (const auto& k : kinds) {
      ns_gradcheck_result r;
      Text summary;
      check(ns_gradcheck(k.c_str(), gc_trials, gc_tol, gc_seed, &r, summary.out()));
      std::cout << summary.str();
      ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitFailure;
  }

  if (synth->parsed()) {
    sy.task = sy_task == "window" ? NS_SYNTH_WINDOW : NS_SYNTH_SUBTREE;
    Corpus c;
    check(ns_synth_generate(&sy, c.out()));
    check(ns_corpus_save(c.get(), sy_out.c_str()));
    ManifestBuilder(synth->get_name()).seed(sy.seed).output("corpus", sy_out).write();
    return kExitOk;
  }

  if (compose->parsed()) {
    Corpus source = load_corpus(co_corpus);
    double coverage = 0.0;
    check(ns_compose(co_method.c_str(), co_vectors.c_str(), co_trans.empty() ? nullptr : co_trans.c_str(),
                     source.get(), co_uniform, co_out.c_str(), &coverage));
    std::fprintf(stderr, "coverage %.2f%%\n", 100.0 * coverage);
    ManifestBuilder(compose->get_name())
        .input("vectors", co_vectors)
        .input("translations", co_trans)
        .input("corpus", co_corpus)
        .output("vectors", co_out)
        .write();
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    return f.code;
  }
}
