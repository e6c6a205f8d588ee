#ifndef LNM_LNM_H
#define LNM_LNM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define LNM_API __attribute__((visibility("default")))
#else
#define LNM_API
#endif

typedef enum lnm_status {
  LNM_OK = 0,
  LNM_CHECK_FAILED = 1, /* grad-check ran and found a mismatch */
  LNM_ERR_CONFIG = 2,
  LNM_ERR_NUMERICAL = 3,
  LNM_ERR_DATA = 4,
  LNM_ERR_IO = 5,
  LNM_ERR_INTERNAL = 6
} lnm_status;

typedef struct lnm_session lnm_session;

LNM_API const char *lnm_version(void);

/* Message of the most recent failure on this thread; "" if none. */
LNM_API const char *lnm_last_error(void);

/* Parses and validates the JSON config at path. *out is NULL on failure. */
LNM_API lnm_status lnm_session_create(const char *config_path, lnm_session **out);
LNM_API void lnm_session_destroy(lnm_session *s);

LNM_API lnm_status lnm_session_set_seed(lnm_session *s, uint64_t seed);
LNM_API lnm_status lnm_session_set_timesteps(lnm_session *s, int timesteps);
/* Spiking degree; for lnm_reduce, the target degree. */
LNM_API lnm_status lnm_session_set_degree(lnm_session *s, int degree);
LNM_API lnm_status lnm_session_set_output_dir(lnm_session *s, const char *dir);
LNM_API lnm_status lnm_session_set_checkpoint(lnm_session *s, const char *path);

/* Each command writes its CSV (and checkpoint) outputs into the output dir.
   Optional out-pointers may be NULL. */
LNM_API lnm_status lnm_train(lnm_session *s, double *best_val_acc);
LNM_API lnm_status lnm_eval(lnm_session *s, double *top1);
LNM_API lnm_status lnm_grad_check(lnm_session *s, double *max_rel_error);
LNM_API lnm_status lnm_energy(lnm_session *s, double *overhead_percent);
LNM_API lnm_status lnm_dump_models(lnm_session *s);
LNM_API lnm_status lnm_reduce(lnm_session *s, double *max_error);

/* Effective output directory for the next command; owned by the session. */
LNM_API const char *lnm_session_output_dir(lnm_session *s);

#ifdef __cplusplus
}
#endif

#endif
