#include "lnm/lnm.h"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "app/commands.hpp"
#include "core/error.hpp"

struct lnm_session {
  lnm::RunConfig config;
  lnm::Overrides overrides;
  std::string output_dir;
};

namespace {

thread_local std::string g_last_error;

lnm_status fail(lnm_status code, const std::string &msg) {
  g_last_error = msg;
  return code;
}

// Exception hierarchy to status codes; numerical failures keep their
// layer/timestep context in the message.
template <class F> lnm_status guarded(F &&f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const lnm::ConfigError &e) {
    return fail(LNM_ERR_CONFIG, std::string("config error: ") + e.what());
  } catch (const lnm::DimensionError &e) {
    return fail(LNM_ERR_CONFIG, std::string("config error: ") + e.what());
  } catch (const lnm::NumericalError &e) {
    std::string where;
    if (e.layer() >= 0)
      where += " (layer " + std::to_string(e.layer());
    if (e.timestep() >= 0)
      where += (where.empty() ? " (" : ", ") + std::string("timestep ") +
               std::to_string(e.timestep());
    if (!where.empty())
      where += ")";
    return fail(LNM_ERR_NUMERICAL, std::string("numerical error: ") + e.what() + where);
  } catch (const lnm::DataError &e) {
    return fail(LNM_ERR_DATA, std::string("data error: ") + e.what());
  } catch (const lnm::IoError &e) {
    return fail(LNM_ERR_IO, std::string("io error: ") + e.what());
  } catch (const std::filesystem::filesystem_error &e) {
    return fail(LNM_ERR_IO, std::string("io error: ") + e.what());
  } catch (const std::bad_alloc &) {
    return fail(LNM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(LNM_ERR_INTERNAL, std::string("internal error: ") + e.what());
  }
}

lnm_status need(const lnm_session *s) {
  return s ? LNM_OK : fail(LNM_ERR_CONFIG, "null session");
}

lnm::RunConfig resolved(const lnm_session *s, lnm::Command c) {
  return lnm::effective_config(s->config, s->overrides, c);
}

} // namespace

extern "C" {

const char *lnm_version(void) { return "1.0.0"; }

const char *lnm_last_error(void) { return g_last_error.c_str(); }

lnm_status lnm_session_create(const char *config_path, lnm_session **out) {
  if (!out)
    return fail(LNM_ERR_CONFIG, "null output pointer");
  *out = nullptr;
  if (!config_path)
    return fail(LNM_ERR_CONFIG, "null config path");
  return guarded([&] {
    auto s = std::make_unique<lnm_session>();
    s->config = lnm::load_run_config(config_path);
    *out = s.release();
    return LNM_OK;
  });
}

void lnm_session_destroy(lnm_session *s) { delete s; }

lnm_status lnm_session_set_seed(lnm_session *s, uint64_t seed) {
  if (auto st = need(s))
    return st;
  s->overrides.seed = seed;
  return LNM_OK;
}

lnm_status lnm_session_set_timesteps(lnm_session *s, int timesteps) {
  if (auto st = need(s))
    return st;
  if (timesteps < 1)
    return fail(LNM_ERR_CONFIG, "config error: timesteps must be >= 1");
  s->overrides.timesteps = timesteps;
  return LNM_OK;
}

lnm_status lnm_session_set_degree(lnm_session *s, int degree) {
  if (auto st = need(s))
    return st;
  if (degree < 1)
    return fail(LNM_ERR_CONFIG, "config error: degree must be >= 1");
  s->overrides.degree = degree;
  return LNM_OK;
}

lnm_status lnm_session_set_output_dir(lnm_session *s, const char *dir) {
  if (auto st = need(s))
    return st;
  if (!dir || !*dir)
    return fail(LNM_ERR_CONFIG, "config error: empty output directory");
  s->overrides.output_dir = dir;
  return LNM_OK;
}

lnm_status lnm_session_set_checkpoint(lnm_session *s, const char *path) {
  if (auto st = need(s))
    return st;
  if (!path)
    return fail(LNM_ERR_CONFIG, "config error: null checkpoint path");
  s->overrides.checkpoint = path;
  return LNM_OK;
}

const char *lnm_session_output_dir(lnm_session *s) {
  if (!s)
    return "";
  s->output_dir = resolved(s, lnm::Command::train).output_dir;
  return s->output_dir.c_str();
}

lnm_status lnm_train(lnm_session *s, double *best_val_acc) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    const auto r = lnm::run_train(resolved(s, lnm::Command::train));
    if (best_val_acc)
      *best_val_acc = r.metrics.best_val_acc;
    return LNM_OK;
  });
}

lnm_status lnm_eval(lnm_session *s, double *top1) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    const auto r = lnm::run_eval(resolved(s, lnm::Command::eval));
    if (top1)
      *top1 = r.top1;
    return LNM_OK;
  });
}

lnm_status lnm_grad_check(lnm_session *s, double *max_rel_error) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    const auto r = lnm::run_grad_check(resolved(s, lnm::Command::grad_check));
    if (max_rel_error)
      *max_rel_error = r.max_rel_error;
    if (r.passed)
      return LNM_OK;
    std::string worst;
    for (const auto &g : r.groups)
      if (!g.passed)
        worst += (worst.empty() ? "" : ", ") + g.name + " (max rel error " +
                 lnm::format_double(g.max_rel_error) + " at index " +
                 std::to_string(g.worst_index) + ")";
    return fail(LNM_CHECK_FAILED, "gradient check failed: " + worst);
  });
}

lnm_status lnm_energy(lnm_session *s, double *overhead_percent) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    const auto r = lnm::run_energy(resolved(s, lnm::Command::energy));
    if (overhead_percent)
      *overhead_percent = r.overhead_percent();
    return LNM_OK;
  });
}

lnm_status lnm_dump_models(lnm_session *s) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    lnm::run_dump_models(resolved(s, lnm::Command::dump_models));
    return LNM_OK;
  });
}

lnm_status lnm_reduce(lnm_session *s, double *max_error) {
  if (auto st = need(s))
    return st;
  return guarded([&] {
    const auto rows = lnm::run_reduce(resolved(s, lnm::Command::reduce));
    if (max_error) {
      *max_error = 0.0;
      for (const auto &r : rows)
        *max_error = std::max(*max_error, r.max_error);
    }
    return LNM_OK;
  });
}

} // extern "C"
