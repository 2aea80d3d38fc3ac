#include "negscope/negscope.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "gradcheck.hpp"
#include "log.hpp"
#include "synth.hpp"
#include "training.hpp"

struct ns_config {
  negscope::RunConfig config;
};

struct ns_corpus {
  negscope::Corpus corpus;
};

struct ns_model {
  std::unique_ptr<negscope::ScopeModel<float>> model;
};

struct ns_manifest {
  negscope::RunManifest manifest;
};

namespace {

using namespace negscope;

thread_local std::string g_last_error;

ns_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return NS_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return NS_ERR_IO;
    case ErrorCode::kParse: return NS_ERR_PARSE;
    case ErrorCode::kValidation: return NS_ERR_VALIDATION;
    case ErrorCode::kShape: return NS_ERR_SHAPE;
    case ErrorCode::kState: return NS_ERR_STATE;
    case ErrorCode::kNumeric: return NS_ERR_NUMERIC;
  }
  return NS_ERR_INTERNAL;
}

template <typename Fn>
ns_status guard(Fn&& fn) {
  try {
    fn();
    return NS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return NS_ERR_INTERNAL;
}

template <typename T>
T& need(T* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
  return *p;
}

std::string need_str(const char* s, const char* what) {
  if (!s) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
  return s;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

template <typename T, typename... Args>
T* make(Args&&... args) {
  return new T{std::forward<Args>(args)...};
}

std::function<void(const std::string&)> line_sink(ns_line_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

std::vector<LabelRecord> load_predictions(const char* path) {
  return read_predictions(need_str(path, "predictions path"));
}

EvalReport evaluate_file(const char* predictions, const Corpus& gold, unsigned flags,
                         bool diagnostics) {
  auto instances = to_instances(gold);
  auto pred = align_predictions(instances, load_predictions(predictions));
  EvalOptions opt;
  opt.easy_hard = flags & NS_EVAL_EASY_HARD;
  opt.lca = flags & NS_EVAL_LCA;
  opt.macro = flags & NS_EVAL_MACRO;
  opt.diagnostics = diagnostics;
  return evaluate(instances, pred, opt);
}

}  // namespace

extern "C" {

const char* ns_version(void) { return negscope::kVersion; }

const char* ns_last_error(void) { return g_last_error.c_str(); }

const char* ns_status_name(ns_status status) {
  switch (status) {
    case NS_OK: return "ok";
    case NS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NS_ERR_IO: return "i/o error";
    case NS_ERR_PARSE: return "parse error";
    case NS_ERR_VALIDATION: return "validation error";
    case NS_ERR_SHAPE: return "shape error";
    case NS_ERR_STATE: return "state error";
    case NS_ERR_NUMERIC: return "numeric error";
    case NS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ns_string_free(char* s) { std::free(s); }

void ns_set_log_level(int level) {
  if (level < 0) level = 0;
  if (level > 4) level = 4;
  log::set_level(static_cast<log::Level>(level));
}

// ---------------------------------------------------------------- config

ns_status ns_config_create(ns_config** out) {
  return guard([&] { need(out, "out") = make<ns_config>(); });
}

ns_status ns_config_load(const char* path, ns_config** out) {
  return guard([&] {
    auto cfg = RunConfig::load(need_str(path, "path"));
    need(out, "out") = make<ns_config>(std::move(cfg));
  });
}

ns_status ns_config_set(ns_config* config, const char* key, const char* value) {
  return guard([&] {
    need(config, "config").config.set(need_str(key, "key"), need_str(value, "value"));
  });
}

ns_status ns_config_get(const ns_config* config, const char* key, char** value) {
  return guard([&] {
    auto resolved = RunConfig::from_settings(need(config, "config").config.resolve());
    put(value, resolved.get(need_str(key, "key")));
  });
}

ns_status ns_config_dump(const ns_config* config, char** text) {
  return guard([&] {
    put(text, RunConfig::from_settings(need(config, "config").config.resolve()).dump());
  });
}

void ns_config_free(ns_config* config) { delete config; }

// ---------------------------------------------------------------- corpus

ns_status ns_corpus_load(const char* path, ns_corpus** out) {
  return guard([&] {
    auto c = parse_corpus(need_str(path, "path"));
    need(out, "out") = make<ns_corpus>(std::move(c));
  });
}

ns_status ns_corpus_parse(const char* text, ns_corpus** out) {
  return guard([&] {
    auto c = parse_corpus_text(need_str(text, "text"), "<memory>");
    need(out, "out") = make<ns_corpus>(std::move(c));
  });
}

ns_status ns_corpus_save(const ns_corpus* corpus, const char* path) {
  return guard([&] { write_corpus(need(corpus, "corpus").corpus, need_str(path, "path")); });
}

ns_status ns_corpus_serialize(const ns_corpus* corpus, char** text) {
  return guard([&] { put(text, serialize_corpus(need(corpus, "corpus").corpus)); });
}

ns_status ns_corpus_stats_get(const ns_corpus* corpus, ns_corpus_stats* stats) {
  return guard([&] {
    const auto& c = need(corpus, "corpus").corpus;
    auto& s = need(stats, "stats");
    s = {};
    s.sentences = c.sentences.size();
    for (const auto& sent : c.sentences) {
      s.tokens += sent.size();
      for (const auto& t : sent.tokens) s.punct_tokens += t.is_punct;
      s.instances += sent.negations.size();
      for (const auto& n : sent.negations) s.scope_tokens += n.scope.size();
    }
  });
}

ns_status ns_corpus_strip_punct(const ns_corpus* corpus, ns_corpus** out) {
  return guard([&] {
    auto c = strip_punctuation(need(corpus, "corpus").corpus);
    need(out, "out") = make<ns_corpus>(std::move(c));
  });
}

ns_status ns_corpus_strip_labels(const ns_corpus* corpus, ns_corpus** out) {
  return guard([&] {
    Corpus c = need(corpus, "corpus").corpus;
    for (auto& s : c.sentences) s = strip_language_specific_labels(std::move(s));
    need(out, "out") = make<ns_corpus>(std::move(c));
  });
}

void ns_corpus_free(ns_corpus* corpus) { delete corpus; }

void ns_synth_defaults(ns_synth_options* options) {
  if (!options) return;
  SynthOptions d;
  options->task = NS_SYNTH_SUBTREE;
  options->sentences = d.sentences;
  options->min_tokens = d.min_tokens;
  options->max_tokens = d.max_tokens;
  options->vocab = d.vocab;
  options->min_punct = d.min_punct;
  options->max_punct = d.max_punct;
  options->seed = d.seed;
}

ns_status ns_synth_generate(const ns_synth_options* options, ns_corpus** out) {
  return guard([&] {
    const auto& o = need(options, "options");
    SynthOptions so;
    if (o.task != NS_SYNTH_SUBTREE && o.task != NS_SYNTH_WINDOW) {
      throw Error(ErrorCode::kInvalidArgument, "unknown synth task");
    }
    so.task = o.task == NS_SYNTH_WINDOW ? SynthTask::kWindow : SynthTask::kSubtree;
    so.sentences = o.sentences;
    so.min_tokens = o.min_tokens;
    so.max_tokens = o.max_tokens;
    so.vocab = o.vocab;
    so.min_punct = o.min_punct;
    so.max_punct = o.max_punct;
    so.seed = o.seed;
    need(out, "out") = make<ns_corpus>(synth_generate(so));
  });
}

// ---------------------------------------------------------------- models

ns_status ns_train(const ns_config* config, const ns_corpus* train, const ns_corpus* dev,
                   ns_line_fn on_epoch, void* user, ns_model** out) {
  return guard([&] {
    Settings s = need(config, "config").config.resolve();
    need(out, "out");
    EmbeddingTable vectors;
    TrainInputs inputs;
    if (!s.word_vectors.empty()) {
      vectors = load_vectors(s.word_vectors);
      inputs.word_vectors = &vectors;
      inputs.freeze_words = s.freeze_words;
    }
    inputs.on_epoch = line_sink(on_epoch, user);
    Corpus empty;
    auto result = train_model(s.kind, need(train, "train").corpus, dev ? dev->corpus : empty,
                              s.model, s.train, inputs);
    *out = make<ns_model>(std::move(result.model));
  });
}

ns_status ns_model_save(const ns_model* model, const char* path) {
  return guard([&] { save_checkpoint(*need(model, "model").model, need_str(path, "path")); });
}

ns_status ns_model_load(const char* path, ns_model** out) {
  return guard([&] {
    auto m = load_checkpoint<float>(need_str(path, "path"));
    need(out, "out") = make<ns_model>(std::move(m));
  });
}

const char* ns_model_kind(const ns_model* model) {
  if (!model) return nullptr;
  switch (model->model->kind()) {
    case ModelKind::kBiLstm: return "bilstm";
    case ModelKind::kDLstm: return "dlstm";
    case ModelKind::kGcn: return "gcn";
  }
  return nullptr;
}

ns_status ns_model_set_word_vectors(ns_model* model, const char* path, int freeze) {
  return guard([&] {
    auto& m = *need(model, "model").model;
    auto table = load_vectors(need_str(path, "path"));
    m.encoder().set_word_vectors(table, freeze != 0);
  });
}

void ns_model_free(ns_model* model) { delete model; }

ns_status ns_predict(const ns_model* model, const ns_corpus* corpus, const char* out_path) {
  return guard([&] {
    const auto& m = *need(model, "model").model;
    auto instances = to_instances(need(corpus, "corpus").corpus);
    auto probs = predict_instances(m, instances);
    write_probabilities(probability_records(instances, probs), need_str(out_path, "out_path"));
  });
}

ns_status ns_ensemble(const char* probs_a, const char* probs_b, const char* out_path) {
  return guard([&] {
    auto a = read_probabilities(need_str(probs_a, "probs_a"));
    auto b = read_probabilities(need_str(probs_b, "probs_b"));
    write_labels(vote_records(a, b), need_str(out_path, "out_path"));
  });
}

// ---------------------------------------------------------------- evaluation

ns_status ns_evaluate(const char* predictions, const ns_corpus* gold, unsigned flags,
                      ns_metrics* metrics, char** report, char** diagnostics) {
  return guard([&] {
    EvalReport r =
        evaluate_file(predictions, need(gold, "gold").corpus, flags, diagnostics != nullptr);
    if (metrics) *metrics = {r.prf.precision, r.prf.recall, r.prf.f1, r.pcs, r.instances};
    put(report, format_report(r, flags & NS_EVAL_TSV));
    put(diagnostics, format_diagnostics(r));
  });
}

ns_status ns_evaluate_paired(const char* pred_with, const ns_corpus* gold_with,
                             const char* pred_without, const ns_corpus* gold_without,
                             unsigned flags, char** report) {
  return guard([&] {
    auto with = evaluate_file(pred_with, need(gold_with, "gold_with").corpus, flags, false);
    auto without =
        evaluate_file(pred_without, need(gold_without, "gold_without").corpus, flags, false);
    put(report, format_paired_report(strip_punctuation_experiment(with, without),
                                     flags & NS_EVAL_TSV));
  });
}

ns_status ns_ablate(const ns_config* config, const ns_corpus* train, const ns_corpus* dev,
                    const ns_corpus* eval, unsigned flags, ns_line_fn on_epoch, void* user,
                    char** report) {
  return guard([&] {
    Settings s = need(config, "config").config.resolve();
    EmbeddingTable vectors;
    TrainInputs inputs;
    if (!s.word_vectors.empty()) {
      vectors = load_vectors(s.word_vectors);
      inputs.word_vectors = &vectors;
      inputs.freeze_words = s.freeze_words;
    }
    inputs.on_epoch = line_sink(on_epoch, user);
    Corpus empty;
    auto r = ablate_grid(need(train, "train").corpus, dev ? dev->corpus : empty,
                         need(eval, "eval").corpus, s.model, s.train, inputs, s.threads);
    put(report, format_ablation(r, flags & NS_EVAL_TSV));
  });
}

ns_status ns_gradcheck(const char* model_kind, size_t trials, double tol, uint64_t seed,
                       ns_gradcheck_result* result, char** summary) {
  return guard([&] {
    GradcheckOptions o;
    o.kind = parse_model_kind(need_str(model_kind, "model_kind"));
    o.trials = trials;
    o.tol = tol;
    o.seed = seed;
    auto s = run_gradcheck(o);
    if (result) *result = {s.max_rel_error, s.checked, s.kinks_skipped, s.passed ? 1 : 0};
    put(summary, format_gradcheck(s));
  });
}

ns_status ns_compose(const char* method, const char* vectors, const char* translations,
                     const ns_corpus* source, int uniform_average, const char* out_path,
                     double* coverage) {
  return guard([&] {
    ComposeMethod m = parse_compose_method(need_str(method, "method"));
    auto table = load_vectors(need_str(vectors, "vectors"));
    TranslationTable tt;
    if (translations) tt = load_translation_table(translations);
    auto result = compose_crosslingual(m, corpus_vocabulary(need(source, "source").corpus), table,
                                       translations ? &tt : nullptr, uniform_average != 0);
    write_vectors(result.table, need_str(out_path, "out_path"));
    if (coverage) *coverage = result.coverage();
  });
}

// ---------------------------------------------------------------- manifests

ns_status ns_manifest_create(const char* command, ns_manifest** out) {
  return guard([&] {
    auto* m = make<ns_manifest>();
    m->manifest.command = need_str(command, "command");
    need(out, "out") = m;
  });
}

ns_status ns_manifest_set_config(ns_manifest* manifest, const ns_config* config) {
  return guard([&] {
    Settings s = need(config, "config").config.resolve();
    auto& m = need(manifest, "manifest").manifest;
    m.config = RunConfig::from_settings(s).entries();
    m.seed = s.model.seed;
  });
}

ns_status ns_manifest_set_seed(ns_manifest* manifest, uint64_t seed) {
  return guard([&] { need(manifest, "manifest").manifest.seed = seed; });
}

ns_status ns_manifest_add_input(ns_manifest* manifest, const char* role, const char* path) {
  return guard([&] {
    need(manifest, "manifest").manifest.inputs.emplace_back(need_str(role, "role"),
                                                            need_str(path, "path"));
  });
}

ns_status ns_manifest_add_output(ns_manifest* manifest, const char* role, const char* path) {
  return guard([&] {
    need(manifest, "manifest").manifest.outputs.emplace_back(need_str(role, "role"),
                                                             need_str(path, "path"));
  });
}

ns_status ns_manifest_write(ns_manifest* manifest, const char* path) {
  return guard([&] {
    auto& m = need(manifest, "manifest").manifest;
    std::string target;
    if (path) {
      target = path;
    } else if (!m.outputs.empty()) {
      target = manifest_path_for(m.outputs.front().second);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "manifest has no outputs and no path was given");
    }
    m.checksum_inputs();
    write_manifest(m, target);
  });
}

void ns_manifest_free(ns_manifest* manifest) { delete manifest; }

}  // extern "C"
