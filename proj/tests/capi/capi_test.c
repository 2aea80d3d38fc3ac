/* Exercises the shared library through its C header only. */
#include <negscope/negscope.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define OK(call) EXPECT((call) == NS_OK)

static const char* kGold =
    "# sent_id = drive\n"
    "1\tYou\tyou\tPRON\t4\tnsubj\t_\tS\n"
    "2\tmust\tmust\tAUX\t4\taux\t_\t_\n"
    "3\tnot\tnot\tPART\t4\tneg\tC\t_\n"
    "4\tdrive\tdrive\tVERB\t0\troot\t_\tS\n"
    "5\t.\t.\tPUNCT\t4\tpunct\t_\t_\n";

static void count_lines(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

static void path_in(char* out, size_t n, const char* dir, const char* file) {
  snprintf(out, n, "%s/%s", dir, file);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  mkdir(dir, 0755);
  char probs[512], labels[512], ckpt[512], manifest[600];
  path_in(probs, sizeof probs, dir, "probs.tsv");
  path_in(labels, sizeof labels, dir, "labels.tsv");
  path_in(ckpt, sizeof ckpt, dir, "model.json");
  ns_set_log_level(3);

  EXPECT(strcmp(ns_version(), "0.1.0") == 0);
  EXPECT(strcmp(ns_status_name(NS_ERR_PARSE), "parse error") == 0);

  /* errors surface as status codes plus a message */
  ns_corpus* bad = NULL;
  EXPECT(ns_corpus_parse("1\ta\ta\tX\t2\td\n2\tb\tb\tX\t1\td\n", &bad) == NS_ERR_PARSE);
  EXPECT(bad == NULL);
  EXPECT(strlen(ns_last_error()) > 0);
  EXPECT(ns_corpus_parse(NULL, &bad) == NS_ERR_INVALID_ARGUMENT);
  EXPECT(ns_corpus_load("/nonexistent/file.nsf", &bad) == NS_ERR_IO);

  /* corpus round trip and statistics */
  ns_corpus* gold = NULL;
  OK(ns_corpus_parse(kGold, &gold));
  char* text = NULL;
  OK(ns_corpus_serialize(gold, &text));
  EXPECT(text && strncmp(text, kGold, strlen(kGold)) == 0 && strcmp(text + strlen(kGold), "\n") == 0);
  ns_string_free(text);
  ns_corpus_stats st;
  OK(ns_corpus_stats_get(gold, &st));
  EXPECT(st.sentences == 1 && st.tokens == 5 && st.punct_tokens == 1);
  EXPECT(st.instances == 1 && st.scope_tokens == 2);
  ns_corpus* nopunct = NULL;
  OK(ns_corpus_strip_punct(gold, &nopunct));
  OK(ns_corpus_stats_get(nopunct, &st));
  EXPECT(st.tokens == 4 && st.punct_tokens == 0);
  ns_corpus_free(nopunct);

  /* configuration */
  ns_config* cfg = NULL;
  OK(ns_config_create(&cfg));
  char* value = NULL;
  OK(ns_config_get(cfg, "lr", &value));
  EXPECT(value && strcmp(value, "0.005") == 0);
  ns_string_free(value);
  OK(ns_config_get(cfg, "layers", &value));
  EXPECT(value && strcmp(value, "4") == 0);
  ns_string_free(value);
  EXPECT(ns_config_set(cfg, "nonsense", "1") == NS_ERR_INVALID_ARGUMENT);
  OK(ns_config_set(cfg, "model", "dlstm"));
  OK(ns_config_set(cfg, "hidden", "8"));
  OK(ns_config_set(cfg, "word_dim", "4"));
  OK(ns_config_set(cfg, "pos_dim", "4"));
  OK(ns_config_set(cfg, "label_dim", "4"));
  OK(ns_config_set(cfg, "cue_dim", "2"));
  OK(ns_config_set(cfg, "epochs", "3"));

  /* synth, train, predict, ensemble, evaluate */
  ns_synth_options so;
  ns_synth_defaults(&so);
  EXPECT(so.min_tokens == 5 && so.max_tokens == 12);
  so.sentences = 40;
  so.min_tokens = 4;
  so.max_tokens = 7;
  ns_corpus* train = NULL;
  OK(ns_synth_generate(&so, &train));
  so.min_tokens = 2;
  ns_corpus* none = NULL;
  EXPECT(ns_synth_generate(&so, &none) == NS_ERR_INVALID_ARGUMENT);

  int epochs = 0;
  ns_model* model = NULL;
  OK(ns_train(cfg, train, NULL, count_lines, &epochs, &model));
  EXPECT(epochs >= 1 && epochs <= 3);
  EXPECT(model && strcmp(ns_model_kind(model), "dlstm") == 0);
  OK(ns_model_save(model, ckpt));
  ns_model* loaded = NULL;
  OK(ns_model_load(ckpt, &loaded));
  EXPECT(ns_model_kind(NULL) == NULL);

  OK(ns_predict(loaded, train, probs));
  OK(ns_ensemble(probs, probs, labels));
  ns_metrics m;
  char* report = NULL;
  OK(ns_evaluate(labels, train, NS_EVAL_EASY_HARD | NS_EVAL_LCA, &m, &report, NULL));
  EXPECT(m.instances == 40);
  EXPECT(m.f1 >= 0.0 && m.f1 <= 100.0);
  EXPECT(report && strstr(report, "easy") != NULL);
  ns_string_free(report);

  /* a perfect prediction file scores 100 */
  ns_corpus_free(train);
  train = NULL;
  FILE* f = fopen(labels, "w");
  fputs("# sent_id\tinstance\ttoken\tlabel\twinner\tmargin\n", f);
  fputs("drive\t0\t1\t1\tA\t1\ndrive\t0\t2\t0\tA\t1\ndrive\t0\t3\t0\tA\t1\n", f);
  fputs("drive\t0\t4\t1\tA\t1\ndrive\t0\t5\t0\tA\t1\n", f);
  fclose(f);
  OK(ns_evaluate(labels, gold, 0, &m, NULL, NULL));
  EXPECT(m.f1 == 100.0 && m.pcs == 100.0);
  EXPECT(ns_evaluate(probs, gold, 0, &m, NULL, NULL) == NS_ERR_VALIDATION);

  /* gradient check */
  ns_gradcheck_result gr;
  char* summary = NULL;
  OK(ns_gradcheck("gcn", 2, 1e-4, 5, &gr, &summary));
  EXPECT(gr.passed && gr.max_rel_error <= 1e-4 && gr.checked > 0);
  EXPECT(summary && strstr(summary, "PASS") != NULL);
  ns_string_free(summary);
  EXPECT(ns_gradcheck("crf", 2, 1e-4, 5, &gr, NULL) == NS_ERR_INVALID_ARGUMENT);

  /* manifest */
  ns_manifest* man = NULL;
  OK(ns_manifest_create("predict", &man));
  OK(ns_manifest_set_config(man, cfg));
  OK(ns_manifest_add_input(man, "checkpoint", ckpt));
  OK(ns_manifest_add_output(man, "probabilities", probs));
  OK(ns_manifest_write(man, NULL));
  ns_manifest_free(man);
  snprintf(manifest, sizeof manifest, "%s.manifest.json", probs);
  struct stat sb;
  EXPECT(stat(manifest, &sb) == 0 && sb.st_size > 0);

  ns_model_free(model);
  ns_model_free(loaded);
  ns_corpus_free(gold);
  ns_config_free(cfg);
  ns_corpus_free(NULL);
  ns_model_free(NULL);
  ns_config_free(NULL);

  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
