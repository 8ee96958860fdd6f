#include "exprec/exprec.h"

#include <cstring>
#include <new>
#include <string>

#include "exprec/experiment.hpp"
#include "exprec/ktar.hpp"
#include "exprec/parallel.hpp"

struct exprec_experiment {
  exprec::Experiment impl;
};

struct exprec_array {
  exprec::ktar::Array impl;
};

namespace {

thread_local std::string g_last_error;

exprec_status set_error(exprec_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
exprec_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return EXPREC_OK;
  } catch (const exprec::Error& e) {
    return set_error(static_cast<exprec_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(EXPREC_E_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return set_error(EXPREC_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(EXPREC_E_INTERNAL, "unknown exception");
  }
}

exprec_status null_arg(const char* name) {
  return set_error(EXPREC_E_INVALID_ARGUMENT, (std::string(name) + " must not be NULL").c_str());
}

exprec_status open_impl(exprec::ExperimentConfig cfg, const char* out_dir, const uint64_t* seed,
                        exprec_experiment** out) {
  if (seed) cfg.seed = *seed;
  std::string dir = out_dir ? out_dir : cfg.output_dir;
  *out = new exprec_experiment{exprec::Experiment(std::move(cfg), dir)};
  return EXPREC_OK;
}

}  // namespace

extern "C" {

const char* exprec_version(void) { return "0.1.0"; }

const char* exprec_status_string(exprec_status status) {
  switch (status) {
    case EXPREC_OK: return "ok";
    case EXPREC_E_OUT_OF_MEMORY: return "out_of_memory";
    default:
      if (status >= EXPREC_E_INVALID_ARGUMENT && status <= EXPREC_E_INTERNAL)
        return exprec::errc_name(static_cast<exprec::Errc>(static_cast<int>(status)));
      return "unknown";
  }
}

const char* exprec_last_error(void) { return g_last_error.c_str(); }

exprec_status exprec_set_threads(int n) {
  if (n < 1) return set_error(EXPREC_E_INVALID_ARGUMENT, "thread count must be >= 1");
  exprec::set_thread_count(n);
  return EXPREC_OK;
}

exprec_status exprec_experiment_open(const char* config_path, const char* out_dir, const uint64_t* seed,
                                     exprec_experiment** out) {
  if (!config_path) return null_arg("config_path");
  if (!out) return null_arg("out");
  *out = nullptr;
  exprec_status s = EXPREC_OK;
  const exprec_status g = guard([&] { s = open_impl(exprec::load_config(config_path), out_dir, seed, out); });
  return g != EXPREC_OK ? g : s;
}

exprec_status exprec_experiment_open_json(const char* json_text, const char* out_dir, const uint64_t* seed,
                                          exprec_experiment** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  exprec_status s = EXPREC_OK;
  const exprec_status g = guard([&] { s = open_impl(exprec::parse_config(json_text), out_dir, seed, out); });
  return g != EXPREC_OK ? g : s;
}

void exprec_experiment_free(exprec_experiment* exp) { delete exp; }

exprec_status exprec_experiment_hash(const exprec_experiment* exp, char* buf, size_t len) {
  if (!exp) return null_arg("exp");
  if (!buf) return null_arg("buf");
  const std::string& h = exp->impl.hash();
  if (len < h.size() + 1) return set_error(EXPREC_E_INVALID_ARGUMENT, "buffer too small for config hash");
  std::memcpy(buf, h.c_str(), h.size() + 1);
  return EXPREC_OK;
}

exprec_status exprec_phantom(exprec_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guard([&] { exp->impl.phantom(); });
}

exprec_status exprec_mask(exprec_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guard([&] { exp->impl.mask(); });
}

exprec_status exprec_simulate(exprec_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guard([&] { exp->impl.simulate(); });
}

exprec_status exprec_recon(exprec_experiment* exp, const char* method, exprec_recon_info* info) {
  if (!exp) return null_arg("exp");
  if (!method) return null_arg("method");
  return guard([&] {
    const exprec::ReconOutcome r = exp->impl.recon(method);
    if (info) *info = exprec_recon_info{r.converged ? 1 : 0, r.iterations, r.seconds};
  });
}

exprec_status exprec_fit(exprec_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guard([&] { exp->impl.fit(); });
}

exprec_status exprec_eval(exprec_experiment* exp, exprec_metrics* rows, size_t capacity, size_t* count) {
  if (!exp) return null_arg("exp");
  return guard([&] {
    const auto r = exp->impl.eval();
    if (count) *count = r.size();
    for (std::size_t i = 0; rows && i < r.size() && i < capacity; ++i) {
      exprec_metrics m{};
      std::strncpy(m.label, r[i].label.c_str(), sizeof m.label - 1);
      m.snr_db = r[i].snr_db;
      m.nrmse = r[i].nrmse;
      m.t2_mae_ms = r[i].t2_mae_ms;
      m.wall_seconds = r[i].wall_seconds;
      rows[i] = m;
    }
  });
}

exprec_status exprec_render(exprec_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guard([&] { exp->impl.render(); });
}

exprec_status exprec_array_read(const char* path, exprec_array** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new exprec_array{exprec::ktar::read_array(path)}; });
}

void exprec_array_free(exprec_array* a) { delete a; }

const char* exprec_array_dtype(const exprec_array* a) { return a ? exprec::ktar::dtype_name(a->impl.header.dtype) : nullptr; }

size_t exprec_array_ndim(const exprec_array* a) { return a ? a->impl.header.shape.size() : 0; }

exprec_status exprec_array_shape(const exprec_array* a, uint64_t* dims, size_t capacity) {
  if (!a) return null_arg("a");
  if (!dims && capacity > 0) return null_arg("dims");
  const auto& s = a->impl.header.shape;
  for (std::size_t i = 0; i < s.size() && i < capacity; ++i) dims[i] = s[i];
  return EXPREC_OK;
}

const char* exprec_array_config_hash(const exprec_array* a) {
  if (!a || !a->impl.header.config_hash) return nullptr;
  return a->impl.header.config_hash->c_str();
}

}  // extern "C"
