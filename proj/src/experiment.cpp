#include "exprec/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "exprec/ktar.hpp"
#include "exprec/render.hpp"

namespace exprec {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& ptr, const std::string& msg) { fail(Errc::config, ptr + ": " + msg); }

std::string escape_key(const std::string& k) {
  std::string out;
  for (char c : k) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Strict view of a JSON object: every key must be consumed, otherwise done()
// reports the first unknown one.
class Obj {
public:
  Obj(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) bad(ptr_.empty() ? "/" : ptr_, "must be an object");
  }

  std::string at(const std::string& k) const { return ptr_ + "/" + escape_key(k); }

  const json* get(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const std::string& k) {
    const json* v = get(k);
    if (!v) bad(at(k), "required key missing");
    return *v;
  }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    const json* v = def ? get(k) : &need(k);
    if (!v) return *def;
    if (!v->is_number()) bad(at(k), "must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) bad(at(k), "must be finite");
    return d;
  }

  std::int64_t integer(const std::string& k, std::optional<std::int64_t> def = std::nullopt) {
    const json* v = def ? get(k) : &need(k);
    if (!v) return *def;
    if (!v->is_number_integer()) bad(at(k), "must be an integer");
    if (v->is_number_unsigned() && v->get<std::uint64_t>() > std::uint64_t(INT64_MAX)) bad(at(k), "out of range");
    return v->get<std::int64_t>();
  }

  bool boolean(const std::string& k, bool def) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_boolean()) bad(at(k), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& k, std::optional<std::string> def = std::nullopt) {
    const json* v = def ? get(k) : &need(k);
    if (!v) return *def;
    if (!v->is_string()) bad(at(k), "must be a string");
    return v->get<std::string>();
  }

  // Number or the literal "auto".
  std::optional<double> number_or_auto(const std::string& k) {
    const json* v = get(k);
    if (!v || (v->is_string() && v->get<std::string>() == "auto")) return std::nullopt;
    if (!v->is_number()) bad(at(k), "must be a number or \"auto\"");
    return v->get<double>();
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) bad(at(it.key()), "unknown key");
  }

private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

int as_int(Obj& o, const std::string& k, std::optional<std::int64_t> def, std::int64_t lo, std::int64_t hi) {
  const auto v = o.integer(k, def);
  if (v < lo || v > hi) bad(o.at(k), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return int(v);
}

template <class F>
void revalidate(const std::string& ptr, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    bad(ptr, e.what());
  }
}

const char* phantom_kind_name(PhantomKind k) {
  switch (k) {
    case PhantomKind::uniform: return "uniform";
    case PhantomKind::regions_smoothed: return "regions_smoothed";
    case PhantomKind::bandlimited_exact: return "bandlimited_exact";
  }
  return "";
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  require(bool(f), Errc::io, "cannot open " + p.string() + " for writing");
  f << s;
  require(bool(f), Errc::io, "write failed: " + p.string());
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  require(bool(f), Errc::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> magnitude(std::span<const cx> v) {
  std::vector<double> m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = std::abs(v[i]);
  return m;
}

}  // namespace

// ---- config ----------------------------------------------------------------

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::config, std::string("/: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Obj top(root, "");

  {
    Obj g(top.need("grid"), "/grid");
    c.grid.P = as_int(g, "P", std::nullopt, 1, 1 << 16);
    c.grid.Q = as_int(g, "Q", std::nullopt, 1, 1 << 16);
    c.grid.T = as_int(g, "T", 12, 2, 1 << 16);
    c.grid.dt_ms = g.number("dt_ms", 10.0);
    if (!(c.grid.dt_ms > 0.0)) bad(g.at("dt_ms"), "must be positive");
    c.te0_ms = g.number("te0_ms", c.grid.dt_ms);
    if (!(c.te0_ms >= 0.0)) bad(g.at("te0_ms"), "must be >= 0");
    g.done();
  }

  c.phantom.grid = c.grid;
  if (const json* pj = top.get("phantom")) {
    Obj p(*pj, "/phantom");
    const std::string kind = p.string("kind", "regions_smoothed");
    if (kind == "regions_smoothed") c.phantom.kind = PhantomKind::regions_smoothed;
    else if (kind == "bandlimited_exact") c.phantom.kind = PhantomKind::bandlimited_exact;
    else if (kind == "uniform") c.phantom.kind = PhantomKind::uniform;
    else bad(p.at("kind"), "must be one of regions_smoothed, bandlimited_exact, uniform");
    c.phantom.L = as_int(p, "L", 1, 1, 8);
    c.phantom.bandwidth = p.number("bandwidth", 4.0);
    if (!(c.phantom.bandwidth > 0.0)) bad(p.at("bandwidth"), "must be positive");
    if (c.phantom.kind == PhantomKind::uniform) {
      const json& t2 = p.need("t2_ms");
      const json& amp = p.need("amplitude");
      if (!t2.is_array() || t2.size() != std::size_t(c.phantom.L)) bad(p.at("t2_ms"), "must be an array of L numbers");
      if (!amp.is_array() || amp.size() != std::size_t(c.phantom.L))
        bad(p.at("amplitude"), "must be an array of L numbers");
      for (std::size_t i = 0; i < t2.size(); ++i) {
        if (!t2[i].is_number()) bad(p.at("t2_ms") + "/" + std::to_string(i), "must be a number");
        if (!amp[i].is_number()) bad(p.at("amplitude") + "/" + std::to_string(i), "must be a number");
        c.phantom.t2_ms.push_back(t2[i].get<double>());
        c.phantom.amplitude.emplace_back(amp[i].get<double>(), 0.0);
      }
    }
    p.done();
  }
  revalidate("/phantom", [&] { c.phantom.validate(); });

  c.coils = as_int(top, "coils", 1, 1, 64);

  {
    Obj m(top.need("mask"), "/mask");
    const std::string kind = m.string("kind");
    if (kind == "uniform_random") {
      c.mask.kind = MaskKind::uniform_random;
      c.mask.fraction = m.number("fraction");
      if (!(c.mask.fraction > 0.0 && c.mask.fraction <= 1.0)) bad(m.at("fraction"), "must be in (0, 1]");
    } else if (kind == "vd_cartesian") {
      c.mask.kind = MaskKind::vd_cartesian;
      c.mask.acceleration = m.number("acceleration");
      if (!(c.mask.acceleration >= 4.0)) bad(m.at("acceleration"), "must be >= 4 (includes the 2x2 decimation)");
      c.mask.center = as_int(m, "center", 8, 0, 1 << 16);
      c.mask.power = m.number("power", 2.0);
      if (!(c.mask.power >= 0.0)) bad(m.at("power"), "must be >= 0");
    } else {
      bad(m.at("kind"), "must be uniform_random or vd_cartesian");
    }
    c.mask.static_mask = m.boolean("static", false);
    m.done();
  }

  if (const json* nj = top.get("noise")) {
    Obj n(*nj, "/noise");
    c.noise.sigma = n.number("sigma", 0.0);
    if (!(c.noise.sigma >= 0.0)) bad(n.at("sigma"), "must be >= 0");
    c.noise.relative = n.boolean("relative", true);
    n.done();
  }

  {
    Obj f(top.need("filter"), "/filter");
    c.N1 = as_int(f, "N1", std::nullopt, 1, 1 << 16);
    c.N2 = as_int(f, "N2", std::nullopt, 1, 1 << 16);
    c.Nt = as_int(f, "Nt", std::nullopt, 1, 1 << 16);
    f.done();
  }
  revalidate("/filter", [&] { c.filter().validate(); });

  if (const json* sj = top.get("solver")) {
    Obj s(*sj, "/solver");
    c.solver.p = s.number("p", 1.0);
    c.solver.lambda = s.number("lambda", 1.0);
    c.solver.eps0 = s.number_or_auto("eps0");
    c.solver.eps_decay = s.number("eps_decay", 0.25);
    c.solver.eps_min = s.number_or_auto("eps_min");
    c.solver.outer_iters = as_int(s, "outer_iters", 30, 1, 100000);
    c.solver.cg.max_iters = as_int(s, "cg_iters", 200, 1, 100000);
    c.solver.cg.tol = s.number("cg_tol", 1e-8);
    c.solver.rel_tol = s.number("rel_tol", 1e-6);
    s.done();
  }
  revalidate("/solver", [&] { c.solver.validate(); });

  if (const json* kj = top.get("ktlr")) {
    Obj k(*kj, "/ktlr");
    c.ktlr.mu = k.number("mu", c.ktlr.mu);
    if (!(c.ktlr.mu >= 0.0)) bad(k.at("mu"), "must be >= 0");
    c.ktlr.relative = k.boolean("relative", true);
    c.ktlr.iters = as_int(k, "iters", c.ktlr.iters, 0, 100000);
    k.done();
  }

  c.output_dir = top.string("output_dir", "out");
  if (const json* sd = top.get("seed")) {
    if (!sd->is_number_unsigned() && !(sd->is_number_integer() && sd->get<std::int64_t>() >= 0))
      bad("/seed", "must be a nonnegative integer");
    c.seed = sd->get<std::uint64_t>();
  }
  top.done();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), Errc::io, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string ExperimentConfig::canonical() const {
  json j;
  j["grid"] = {{"P", grid.P}, {"Q", grid.Q}, {"T", grid.T}, {"dt_ms", grid.dt_ms}, {"te0_ms", te0_ms}};
  json ph = {{"kind", phantom_kind_name(phantom.kind)}, {"L", phantom.L}, {"bandwidth", phantom.bandwidth}};
  if (phantom.kind == PhantomKind::uniform) {
    ph["t2_ms"] = phantom.t2_ms;
    json amp = json::array();
    for (const auto& a : phantom.amplitude) amp.push_back(a.real());
    ph["amplitude"] = amp;
  }
  j["phantom"] = ph;
  j["coils"] = coils;
  json m = {{"static", mask.static_mask}};
  if (mask.kind == MaskKind::uniform_random) {
    m["kind"] = "uniform_random";
    m["fraction"] = mask.fraction;
  } else {
    m["kind"] = "vd_cartesian";
    m["acceleration"] = mask.acceleration;
    m["center"] = mask.center;
    m["power"] = mask.power;
  }
  j["mask"] = m;
  j["noise"] = {{"sigma", noise.sigma}, {"relative", noise.relative}};
  j["filter"] = {{"N1", N1}, {"N2", N2}, {"Nt", Nt}};
  auto num_or_auto = [](const std::optional<double>& v) { return v ? json(*v) : json("auto"); };
  j["solver"] = {{"p", solver.p},
                 {"lambda", solver.lambda},
                 {"eps0", num_or_auto(solver.eps0)},
                 {"eps_decay", solver.eps_decay},
                 {"eps_min", num_or_auto(solver.eps_min)},
                 {"outer_iters", solver.outer_iters},
                 {"cg_iters", solver.cg.max_iters},
                 {"cg_tol", solver.cg.tol},
                 {"rel_tol", solver.rel_tol}};
  j["ktlr"] = {{"mu", ktlr.mu}, {"relative", ktlr.relative}, {"iters", ktlr.iters}};
  j["seed"] = seed;
  return j.dump();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) == 1, Errc::internal,
          "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

// ---- pipeline --------------------------------------------------------------

Experiment::Experiment(ExperimentConfig cfg, std::filesystem::path out_dir)
    : cfg_(std::move(cfg)), dir_(std::move(out_dir)), hash_(cfg_.hash()) {}

void Experiment::ensure_dir() const {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  require(!ec, Errc::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
}

namespace {

void stamp_write(const std::filesystem::path& p, ktar::Array a, const std::string& hash) {
  a.header.config_hash = hash;
  ktar::write(p, a);
}

ktar::Array read_existing(const std::filesystem::path& p, const char* what) {
  require(std::filesystem::exists(p), Errc::io, std::string("missing input ") + p.string() + " (run " + what + " first)");
  return ktar::read_array(p);
}

}  // namespace

void Experiment::phantom() {
  ensure_dir();
  const Grid& g = cfg_.grid;
  const Phantom ph = make_phantom(cfg_.phantom, cfg_.seed);
  stamp_write(path("phantom.ktar"), ktar::from_series(ph.series), hash_);

  const std::size_t n = g.frame_size();
  std::vector<double> maps;
  maps.reserve(std::size_t(ph.maps.L()) * 4 * n);
  for (int i = 0; i < ph.maps.L(); ++i) {
    const auto& t2 = ph.maps.t2_ms[std::size_t(i)];
    const auto& a = ph.maps.amp[std::size_t(i)];
    maps.insert(maps.end(), t2.begin(), t2.end());
    for (const auto& v : a) maps.push_back(v.real());
    for (const auto& v : a) maps.push_back(v.imag());
    for (auto s : ph.maps.support) maps.push_back(s);
  }
  stamp_write(path("maps.ktar"),
              ktar::make_real({std::uint64_t(ph.maps.L()), 4, std::uint64_t(g.P), std::uint64_t(g.Q)}, maps), hash_);
}

void Experiment::mask() {
  ensure_dir();
  const Grid& g = cfg_.grid;
  const SamplingMask m = make_mask(g, cfg_.mask, cfg_.seed);
  std::vector<double> v(g.size());
  std::size_t i = 0;
  for (int x = 0; x < g.P; ++x)
    for (int y = 0; y < g.Q; ++y)
      for (int t = 0; t < g.T; ++t) v[i++] = m.at(x, y, t) ? 1.0 : 0.0;
  stamp_write(path("mask.ktar"),
              ktar::make_real({std::uint64_t(g.P), std::uint64_t(g.Q), std::uint64_t(g.T)}, v, ktar::DType::f32), hash_);
}

void Experiment::simulate() {
  phantom();
  mask();
  const Grid& g = cfg_.grid;
  const Phantom ph = make_phantom(cfg_.phantom, cfg_.seed);
  const SamplingMask m = make_mask(g, cfg_.mask, cfg_.seed);
  const CoilSet coils = make_coils(g, cfg_.coils, cfg_.seed);

  std::vector<cx> cv;
  for (const auto& map : coils.maps) cv.insert(cv.end(), map.begin(), map.end());
  stamp_write(path("coils.ktar"),
              ktar::make_complex({std::uint64_t(coils.count()), std::uint64_t(g.P), std::uint64_t(g.Q)}, cv), hash_);

  CoilData b = forward(dft2_forward(ph.series), coils, m);
  const double sigma = cfg_.noise.relative ? cfg_.noise.sigma * mean_sampled_magnitude(b, m) : cfg_.noise.sigma;
  b = add_noise(b, m, sigma, cfg_.seed);

  std::vector<cx> out(b.values.size());
  std::size_t i = 0;
  for (int c = 0; c < b.C; ++c)
    for (int x = 0; x < g.P; ++x)
      for (int y = 0; y < g.Q; ++y)
        for (int t = 0; t < g.T; ++t) out[i++] = b.frame(c, t)[std::size_t(x) * g.Q + y];
  stamp_write(path("meas.ktar"),
              ktar::make_complex({std::uint64_t(b.C), std::uint64_t(g.P), std::uint64_t(g.Q), std::uint64_t(g.T)}, out),
              hash_);
}

Measurements Experiment::load_measurements() const {
  const Grid& g = cfg_.grid;
  const std::vector<std::uint64_t> pqt{std::uint64_t(g.P), std::uint64_t(g.Q), std::uint64_t(g.T)};

  const ktar::Array ma = read_existing(path("mask.ktar"), "mask");
  require(ma.header.shape == pqt, Errc::shape_mismatch, "mask.ktar shape does not match the config grid");
  const auto mv = ma.as_real();
  Measurements meas;
  meas.mask.grid = g;
  meas.mask.kind = cfg_.mask.kind;
  meas.mask.bits.assign(g.size(), 0);
  std::size_t i = 0;
  for (int x = 0; x < g.P; ++x)
    for (int y = 0; y < g.Q; ++y)
      for (int t = 0; t < g.T; ++t) meas.mask.bits[(std::size_t(t) * g.P + x) * g.Q + y] = mv[i++] != 0.0;

  const ktar::Array ca = read_existing(path("coils.ktar"), "simulate");
  const auto& cs = ca.header.shape;
  require(cs.size() == 3 && cs[1] == pqt[0] && cs[2] == pqt[1] && cs[0] >= 1, Errc::shape_mismatch,
          "coils.ktar shape does not match the config grid");
  const auto cv = ca.as_complex();
  meas.coils.P = g.P;
  meas.coils.Q = g.Q;
  const std::size_t n = g.frame_size();
  for (std::uint64_t c = 0; c < cs[0]; ++c) meas.coils.maps.emplace_back(cv.begin() + std::ptrdiff_t(c * n), cv.begin() + std::ptrdiff_t((c + 1) * n));

  const ktar::Array ba = read_existing(path("meas.ktar"), "simulate");
  const auto& bs = ba.header.shape;
  require(bs.size() == 4 && bs[0] == cs[0] && bs[1] == pqt[0] && bs[2] == pqt[1] && bs[3] == pqt[2],
          Errc::shape_mismatch, "meas.ktar shape does not match coils and grid");
  const auto bv = ba.as_complex();
  meas.b = CoilData{g, int(cs[0]), std::vector<cx>(bv.size())};
  i = 0;
  for (int c = 0; c < meas.b.C; ++c)
    for (int x = 0; x < g.P; ++x)
      for (int y = 0; y < g.Q; ++y)
        for (int t = 0; t < g.T; ++t) meas.b.frame(c, t)[std::size_t(x) * g.Q + y] = bv[i++];
  return meas;
}

ReconOutcome Experiment::recon(const std::string& method) {
  require(std::find(recon_methods().begin(), recon_methods().end(), method) != recon_methods().end(),
          Errc::invalid_argument, "unknown method '" + method + "' (expected proposed, ktlr or zerofill)");
  ensure_dir();
  const Measurements meas = load_measurements();
  const auto t0 = std::chrono::steady_clock::now();
  ReconOutcome out;
  KtVolume rec;
  std::string report;
  if (method == "proposed") {
    SolveResult r = irls_solve(meas, cfg_.filter(), cfg_.solver);
    rec = std::move(r.rho_hat);
    out.converged = r.report.converged;
    out.iterations = int(r.report.iterations.size());
    report = r.report.to_csv();
  } else if (method == "ktlr") {
    double mu = cfg_.ktlr.mu;
    if (cfg_.ktlr.relative) {
      const auto sv = casorati_singular_values(dft2_inverse(recon_zerofill(meas)));
      mu *= sv.empty() ? 0.0 : sv.front();
    }
    KtLowRankResult r = recon_ktlowrank(meas, mu, cfg_.ktlr.iters);
    rec = std::move(r.rho_hat);
    out.iterations = int(r.objective.size());
    std::ostringstream os;
    os << "iter,objective\n";
    char buf[64];
    for (std::size_t k = 0; k < r.objective.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k + 1, r.objective[k]);
      os << buf;
    }
    report = os.str();
  } else {
    rec = recon_zerofill(meas);
    report = "iter,objective\n";
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  stamp_write(path("recon_" + method + ".ktar"), ktar::from_series(rec), hash_);
  write_text(path("report_" + method + ".csv"), "# config_hash " + hash_ + "\n" + report);
  char buf[64];
  std::snprintf(buf, sizeof buf, "seconds %.6f\n", out.seconds);
  write_text(path("timing_" + method + ".txt"), std::string(buf) + "config_hash " + hash_ + "\n");
  return out;
}

std::vector<std::string> Experiment::available_methods() const {
  std::vector<std::string> m;
  for (const auto& name : recon_methods())
    if (std::filesystem::exists(path("recon_" + name + ".ktar"))) m.push_back(name);
  return m;
}

namespace {

struct Truth {
  ImageSeries series;
  std::vector<double> t2;
  std::vector<std::uint8_t> support;
};

Truth load_truth(const std::filesystem::path& dir, const Grid& g) {
  Truth tr{ktar::to_series<ImageDomain>(read_existing(dir / "phantom.ktar", "phantom"), g.dt_ms), {}, {}};
  require(tr.series.grid().same_shape(g), Errc::shape_mismatch, "phantom.ktar shape does not match the config grid");
  const ktar::Array ma = read_existing(dir / "maps.ktar", "phantom");
  const auto& s = ma.header.shape;
  require(s.size() == 4 && s[1] == 4 && s[2] == std::uint64_t(g.P) && s[3] == std::uint64_t(g.Q), Errc::shape_mismatch,
          "maps.ktar shape does not match the config grid");
  const auto v = ma.as_real();
  const std::size_t n = g.frame_size();
  tr.t2.assign(v.begin(), v.begin() + std::ptrdiff_t(n));
  for (std::size_t i = 0; i < n; ++i) tr.support.push_back(v[3 * n + i] != 0.0);
  return tr;
}

ImageSeries load_recon_image(const std::filesystem::path& p, const Grid& g) {
  KtVolume k = ktar::to_series<KSpaceDomain>(ktar::read_array(p), g.dt_ms);
  require(k.grid().same_shape(g), Errc::shape_mismatch, p.string() + " shape does not match the config grid");
  return dft2_inverse(k);
}

}  // namespace

void Experiment::fit() {
  ensure_dir();
  const Grid& g = cfg_.grid;
  const Truth tr = load_truth(dir_, g);
  const auto te = echo_times(g, cfg_.te0_ms);
  auto save = [&](const std::string& label, const T2Map& m) {
    std::vector<double> v(m.t2_ms);
    v.insert(v.end(), m.amplitude.begin(), m.amplitude.end());
    stamp_write(path("t2_" + label + ".ktar"), ktar::make_real({2, std::uint64_t(g.P), std::uint64_t(g.Q)}, v), hash_);
  };
  save("truth", fit_t2(tr.series, te, tr.support));
  for (const auto& m : available_methods())
    save(m, fit_t2(load_recon_image(path("recon_" + m + ".ktar"), g), te, tr.support));
}

std::vector<MetricsRow> Experiment::eval() {
  ensure_dir();
  const Grid& g = cfg_.grid;
  const Truth tr = load_truth(dir_, g);
  const auto te = echo_times(g, cfg_.te0_ms);
  std::vector<MetricsRow> rows;
  for (const auto& m : available_methods()) {
    const ImageSeries img = load_recon_image(path("recon_" + m + ".ktar"), g);
    MetricsRow r;
    r.label = m == "ktlr" ? "ktlr_nuclear" : m;
    r.snr_db = snr_db(tr.series.values(), img.values());
    r.nrmse = nrmse(tr.series.values(), img.values());
    r.t2_mae_ms = t2_mae(fit_t2(img, te, tr.support), tr.t2, tr.support);
    r.config_hash = hash_;
    const auto timing = path("timing_" + m + ".txt");
    if (std::filesystem::exists(timing)) std::sscanf(read_text(timing).c_str(), "seconds %lf", &r.wall_seconds);
    rows.push_back(r);
  }
  write_text(path("metrics.csv"), metrics_csv(rows));
  return rows;
}

void Experiment::render() {
  const Grid& g = cfg_.grid;
  const Truth tr = load_truth(dir_, g);
  const auto te = echo_times(g, cfg_.te0_ms);
  const auto rdir = dir_ / "render";
  std::error_code ec;
  std::filesystem::create_directories(rdir, ec);
  require(!ec, Errc::io, "cannot create " + rdir.string());

  // Windows: magnitudes [0, max |truth echo 0|], errors at 20% of that,
  // T2 [0, 300] ms, T2 errors [0, 50] ms.
  double peak = 0.0;
  for (const auto& v : tr.series.frame(0)) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) peak = 1.0;
  const Window mag_w{0.0, peak}, err_w{0.0, 0.2 * peak}, t2_w{0.0, 300.0}, t2err_w{0.0, 50.0};
  const int last = g.T - 1;

  auto render_series = [&](const std::string& label, const ImageSeries& s) {
    for (int t : {0, last})
      write_pgm(rdir / (label + "_mag_e" + std::to_string(t) + ".pgm"), g.P, g.Q, magnitude(s.frame(t)), mag_w, hash_);
  };
  auto masked = [&](std::vector<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!tr.support[i]) v[i] = 0.0;
    return v;
  };
  render_series("truth", tr.series);
  write_pgm(rdir / "truth_t2.pgm", g.P, g.Q, masked(tr.t2), t2_w, hash_);

  for (const auto& m : available_methods()) {
    const ImageSeries img = load_recon_image(path("recon_" + m + ".ktar"), g);
    render_series(m, img);
    for (int t : {0, last}) {
      std::vector<double> e(g.frame_size());
      auto a = img.frame(t);
      auto b = tr.series.frame(t);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(a[i] - b[i]);
      write_pgm(rdir / (m + "_err_e" + std::to_string(t) + ".pgm"), g.P, g.Q, e, err_w, hash_);
    }
    const T2Map f = fit_t2(img, te, tr.support);
    write_pgm(rdir / (m + "_t2.pgm"), g.P, g.Q, masked(f.t2_ms), t2_w, hash_);
    std::vector<double> d(f.t2_ms.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (tr.support[i] && f.support[i]) d[i] = std::abs(f.t2_ms[i] - tr.t2[i]);
    write_pgm(rdir / (m + "_t2_err.pgm"), g.P, g.Q, d, t2err_w, hash_);
  }
}

}  // namespace exprec
