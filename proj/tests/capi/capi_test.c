/* Exercises the C API from plain C. */
#define _POSIX_C_SOURCE 200809L
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "collate/collate.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

#define OK(call)                                                             \
  do {                                                                       \
    collate_status s_ = (call);                                              \
    if (s_ != COLLATE_OK) {                                                  \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,    \
              collate_status_name(s_), collate_last_error());                \
      ++failures;                                                            \
    }                                                                        \
  } while (0)

static void test_errors(const char* dir) {
  collate_matrix* m = NULL;
  char path[512];
  snprintf(path, sizeof path, "%s/missing/manifest.json", dir);
  collate_manuscript* ms = NULL;
  EXPECT(collate_manuscript_load(path, &ms) != COLLATE_OK);
  EXPECT(ms == NULL);
  EXPECT(strlen(collate_last_error()) > 0);
  EXPECT(collate_matrix_create(2, 3, NULL, &m) == COLLATE_E_INVALID_ARGUMENT);
  EXPECT(strcmp(collate_status_name(COLLATE_E_STAGE_ORDER), "stage-order") == 0);
  EXPECT(strcmp(collate_status_name(COLLATE_OK), "ok") == 0);
  EXPECT(strlen(collate_version()) > 0);
}

static void test_matrix_ops(void) {
  const double v[4] = {2, 1, 1, 2};
  collate_matrix *m = NULL, *n = NULL, *p = NULL;
  char* warnings = NULL;
  OK(collate_matrix_create(2, 2, v, &m));
  OK(collate_normalize(m, "over_max", "sum", NAN, &n, &warnings));
  double x = 0;
  OK(collate_matrix_get(n, 0, 0, &x));
  EXPECT(fabs(x - 2.0) < 1e-12);
  OK(collate_matrix_get(n, 0, 1, &x));
  EXPECT(fabs(x - 1.0) < 1e-12);
  EXPECT(strcmp(collate_matrix_provenance(n), "normalized") == 0);
  EXPECT(collate_normalize(m, "bogus", "sum", NAN, &n, NULL) == COLLATE_E_INVALID_ARGUMENT);
  collate_string_free(warnings);

  EXPECT(collate_propagate(m, NULL, 0.25, 5.0, &p) != COLLATE_OK);
  collate_seeds* seeds = NULL;
  OK(collate_seeds_two_cycle(n, &seeds));
  EXPECT(collate_seeds_size(seeds) == 2);
  OK(collate_propagate(n, seeds, 0.0, 5.0, &p));
  double before[4], after[4];
  OK(collate_matrix_values(n, before, 4));
  OK(collate_matrix_values(p, after, 4));
  EXPECT(memcmp(before, after, sizeof before) == 0);
  collate_matrix_free(p);
  p = NULL;
  EXPECT(collate_matrix_values(n, before, 3) != COLLATE_OK);

  /* A single seed scales its own cell by 1 + alpha. */
  const size_t one[2] = {1, 0};
  collate_seeds* single = NULL;
  OK(collate_seeds_create(one, 1, &single));
  OK(collate_propagate(n, single, 0.5, 5.0, &p));
  OK(collate_matrix_get(p, 1, 0, &x));
  EXPECT(fabs(x - 1.5) < 1e-12);
  EXPECT(strcmp(collate_matrix_provenance(p), "propagated") == 0);

  collate_correspondences* c = NULL;
  OK(collate_match(p, "greedy", &c));
  EXPECT(collate_correspondences_size(c) == 2);
  EXPECT(collate_match(p, "nope", &c) != COLLATE_OK);

  collate_seeds_free(single);
  collate_seeds_free(seeds);
  collate_correspondences_free(c);
  collate_matrix_free(p);
  collate_matrix_free(n);
  collate_matrix_free(m);
}

static void test_pipeline(const char* dir) {
  char* info = NULL;
  OK(collate_synth_write(
      "{\"seed\": 3, \"n\": 10, \"channels\": 8, \"style_noise\": 0.0, \"scale_tags\": [6, 7, 8],"
      " \"fixed_side\": 4, \"texture_side\": 6, \"max_shift\": 2}",
      dir, &info));
  EXPECT(info != NULL && strstr(info, "\"n\"") != NULL);
  collate_string_free(info);

  char pa[512], pb[512], truth[512], out[512];
  snprintf(pa, sizeof pa, "%s/A/manifest.json", dir);
  snprintf(pb, sizeof pb, "%s/B/manifest.json", dir);
  snprintf(truth, sizeof truth, "%s/truth.json", dir);

  collate_manuscript *a = NULL, *b = NULL;
  OK(collate_manuscript_load(pa, &a));
  OK(collate_manuscript_load(pb, &b));
  if (!a || !b) return;
  EXPECT(collate_manuscript_size(a) == 10);
  EXPECT(strcmp(collate_manuscript_id(a), "A") == 0);

  collate_similarity_options opts;
  collate_similarity_options_init(&opts);
  const int tags[3] = {6, 7, 8};
  opts.method = "matching";
  opts.scale_tags = tags;
  opts.n_scale_tags = 3;
  opts.base_scale = 7;
  collate_matrix* raw = NULL;
  OK(collate_similarity_matrix(a, b, &opts, &raw));
  EXPECT(collate_matrix_rows(raw) == 10 && collate_matrix_cols(raw) == 10);

  snprintf(out, sizeof out, "%s/raw.json", dir);
  OK(collate_matrix_save(raw, out));
  collate_matrix* back = NULL;
  OK(collate_matrix_load(out, &back));
  EXPECT(back && collate_matrix_rows(back) == 10);

  collate_correspondences* gt = NULL;
  OK(collate_correspondences_load(truth, &gt));
  char *json = NULL, *text = NULL;
  OK(collate_evaluate(raw, NULL, gt, "acc,map_r,nn:1", "raw", &json, &text));
  EXPECT(json && strstr(json, "\"accuracy_avg\": 100.0") != NULL);
  EXPECT(text && strstr(text, "accuracy") != NULL);
  collate_string_free(json);
  collate_string_free(text);
  EXPECT(collate_evaluate(NULL, NULL, gt, "acc", NULL, NULL, NULL) == COLLATE_E_INVALID_ARGUMENT);

  /* Projects */
  char proj[512];
  snprintf(proj, sizeof proj, "%s/project", dir);
  const char* manifests[2] = {pa, pb};
  collate_project* p = NULL;
  OK(collate_project_create(proj, "c-test", manifests, 2,
                            "{\"method\": \"matching\", \"similarity\": {\"scale_tags\": [6, 7, 8], \"base_scale\": 7}}",
                            &p));
  if (!p) return;
  EXPECT(collate_project_run(p, "A", "B", "propagate", NULL) == COLLATE_E_STAGE_ORDER);
  char* summary = NULL;
  OK(collate_project_run(p, "A", "B", NULL, &summary));
  EXPECT(summary && strstr(summary, "\"ran\"") != NULL);
  collate_string_free(summary);
  EXPECT(collate_project_revision(p) == 1);
  OK(collate_project_confirm(p, "A", "B", 1, 2));
  EXPECT(collate_project_revision(p) == 2);
  EXPECT(collate_project_confirm(p, "A", "B", 10, 0) == COLLATE_E_OUT_OF_RANGE);
  char* cands = NULL;
  OK(collate_project_candidates(p, "A", "B", 0, 3, 0, &cands));
  EXPECT(cands && strstr(cands, "candidates") != NULL);
  collate_string_free(cands);
  snprintf(out, sizeof out, "%s/export.csv", dir);
  OK(collate_project_run(p, "A", "B", "", NULL));
  OK(collate_project_export(p, "A", "B", "csv", out));
  collate_project_free(p);

  collate_project* reopened = NULL;
  OK(collate_project_open(proj, &reopened));
  EXPECT(reopened && collate_project_revision(reopened) == 3);
  collate_project_free(reopened);

  collate_correspondences_free(gt);
  collate_matrix_free(back);
  collate_matrix_free(raw);
  collate_manuscript_free(a);
  collate_manuscript_free(b);
}

int main(void) {
  char dir[] = "/tmp/collate-capi-XXXXXX";
  if (!mkdtemp(dir)) {
    perror("mkdtemp");
    return 2;
  }
  test_errors(dir);
  test_matrix_ops();
  test_pipeline(dir);
  char cmd[600];
  snprintf(cmd, sizeof cmd, "rm -rf '%s'", dir);
  if (system(cmd) != 0) fprintf(stderr, "could not remove %s\n", dir);
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
