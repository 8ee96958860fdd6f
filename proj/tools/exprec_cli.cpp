// exprec command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exprec/exprec.h"

namespace {

enum Exit : int { kOk = 0, kNotConverged = 2, kUsage = 64, kData = 65, kInternal = 70 };

int exit_for(exprec_status s) {
  switch (s) {
    case EXPREC_OK:
      return kOk;
    case EXPREC_E_INVALID_ARGUMENT:
    case EXPREC_E_SHAPE_MISMATCH:
    case EXPREC_E_BAD_MAGIC:
    case EXPREC_E_TRUNCATED:
    case EXPREC_E_PAYLOAD_SIZE:
    case EXPREC_E_IO:
    case EXPREC_E_CONFIG:
    case EXPREC_E_SIZE_GUARD:
      return kData;
    default:
      return kInternal;
  }
}

int report(exprec_status s, const char* what) {
  if (s == EXPREC_OK) return kOk;
  std::fprintf(stderr, "exprec %s: %s: %s\n", what, exprec_status_string(s), exprec_last_error());
  return exit_for(s);
}

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  std::string method;
};

using Handle = std::unique_ptr<exprec_experiment, decltype(&exprec_experiment_free)>;

int open(const Options& o, Handle& h) {
  if (o.threads > 0) {
    if (int rc = report(exprec_set_threads(o.threads), "threads")) return rc;
  }
  exprec_experiment* e = nullptr;
  const int rc = report(exprec_experiment_open(o.config.c_str(), o.out.empty() ? nullptr : o.out.c_str(),
                                               o.has_seed ? &o.seed : nullptr, &e),
                        "config");
  h.reset(e);
  return rc;
}

int recon(exprec_experiment* e, const std::string& method) {
  exprec_recon_info info{};
  if (int rc = report(exprec_recon(e, method.c_str(), &info), "recon")) return rc;
  std::printf("%s: %d iterations, %.3f s%s\n", method.c_str(), info.iterations, info.seconds,
              info.converged ? "" : " (iteration cap reached)");
  return info.converged ? kOk : kNotConverged;
}

int eval(exprec_experiment* e) {
  std::vector<exprec_metrics> rows(8);
  std::size_t n = 0;
  if (int rc = report(exprec_eval(e, rows.data(), rows.size(), &n), "eval")) return rc;
  std::printf("%-14s %10s %10s %12s\n", "method", "snr_db", "nrmse", "t2_mae_ms");
  for (std::size_t i = 0; i < n && i < rows.size(); ++i)
    std::printf("%-14s %10.3f %10.5f %12.3f\n", rows[i].label, rows[i].snr_db, rows[i].nrmse, rows[i].t2_mae_ms);
  return kOk;
}

bool known_method(const std::string& m) { return m == "proposed" || m == "ktlr" || m == "zerofill"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential-model k-t reconstruction"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", o.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "Seed (overrides the config)")->each([&](const std::string&) { o.has_seed = true; });
    sub->add_option("--threads", o.threads, "Worker threads (default: EXPREC_THREADS or 1)")->check(CLI::PositiveNumber);
  };

  const std::vector<std::pair<std::string, std::string>> simple{
      {"phantom", "Write phantom series and ground-truth maps"},
      {"mask", "Write the sampling mask"},
      {"simulate", "Write phantom, maps, mask, coils and measurements"},
      {"fit", "Fit T2 maps for the truth and every reconstruction"},
      {"eval", "Write metrics.csv for every reconstruction"},
      {"render", "Write PGM images under render/"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : simple) {
    subs.push_back(app.add_subcommand(name, help));
    add_common(subs.back());
  }
  CLI::App* rec = app.add_subcommand("recon", "Reconstruct with one method");
  add_common(rec);
  rec->add_option("--method", o.method, "proposed, ktlr or zerofill")->required();
  CLI::App* run = app.add_subcommand("run", "simulate, all reconstructions, fit, eval, render");
  add_common(run);

  std::string info_path;
  CLI::App* info = app.add_subcommand("info", "Print the header of a KTAR file");
  info->add_option("file", info_path, "KTAR file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (info->parsed()) {
    exprec_array* a = nullptr;
    if (int rc = report(exprec_array_read(info_path.c_str(), &a), "info")) return rc;
    std::vector<std::uint64_t> dims(exprec_array_ndim(a));
    exprec_array_shape(a, dims.data(), dims.size());
    std::printf("dtype %s\nshape", exprec_array_dtype(a));
    for (auto d : dims) std::printf(" %llu", static_cast<unsigned long long>(d));
    const char* h = exprec_array_config_hash(a);
    std::printf("\nconfig_hash %s\n", h ? h : "-");
    exprec_array_free(a);
    return kOk;
  }

  if (rec->parsed() && !known_method(o.method)) {
    std::fprintf(stderr, "exprec recon: unknown method '%s' (expected proposed, ktlr or zerofill)\n", o.method.c_str());
    return kUsage;
  }

  Handle h(nullptr, exprec_experiment_free);
  if (int rc = open(o, h)) return rc;
  exprec_experiment* e = h.get();

  if (app.got_subcommand("phantom")) return report(exprec_phantom(e), "phantom");
  if (app.got_subcommand("mask")) return report(exprec_mask(e), "mask");
  if (app.got_subcommand("simulate")) return report(exprec_simulate(e), "simulate");
  if (app.got_subcommand("fit")) return report(exprec_fit(e), "fit");
  if (app.got_subcommand("eval")) return eval(e);
  if (app.got_subcommand("render")) return report(exprec_render(e), "render");
  if (rec->parsed()) return recon(e, o.method);

  // run
  if (int rc = report(exprec_simulate(e), "simulate")) return rc;
  int status = kOk;
  for (const char* m : {"zerofill", "ktlr", "proposed"}) {
    const int rc = recon(e, m);
    if (rc == kNotConverged) status = kNotConverged;
    else if (rc != kOk) return rc;
  }
  if (int rc = report(exprec_fit(e), "fit")) return rc;
  if (int rc = eval(e)) return rc;
  if (int rc = report(exprec_render(e), "render")) return rc;
  return status;
}
