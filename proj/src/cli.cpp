#include "rcb/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcb/analysis.hpp"
#include "rcb/error.hpp"
#include "rcb/fractional.hpp"
#include "rcb/orchestrate.hpp"
#include "rcb/simulate.hpp"
#include "rcb/special.hpp"
#include "rcb/volterra.hpp"

namespace rcb::cli {
namespace {

using json = nlohmann::ordered_json;

const char* const kVersion = RCB_VERSION;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no inf/nan; those become null.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json jcplx(cplx z) { return json{{"re", jnum(z.real())}, {"im", jnum(z.imag())}}; }

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string dashed(std::string s) {
  for (char& ch : s)
    if (ch == '_') ch = '-';
  return s;
}

struct Key {
  std::string name;
  std::string fallback;
  std::string help;
};

enum class Source { Default, File, Env, Flag };

class Command {
 public:
  Command(CLI::App& root, const std::string& name, const std::string& about, std::vector<Key> keys)
      : name_(name), keys_(std::move(keys)) {
    app_ = root.add_subcommand(name, about);
    for (const Key& k : keys_) {
      const std::string help = k.fallback.empty() ? k.help : k.help + " [" + k.fallback + "]";
      flags_[k.name] = app_->add_option("--" + dashed(k.name), given_[k.name], help);
    }
    app_->add_option("--config", config_, "key=value file or an earlier output of this command");
    app_->add_option("--out", out_, "output file (default: stdout)");
    app_->add_option("--threads", threads_, "worker threads")->check(CLI::PositiveNumber);
  }

  CLI::App* app() const { return app_; }
  const std::string& name() const { return name_; }
  unsigned threads() const { return threads_; }

  void resolve() {
    std::map<std::string, std::string> file;
    if (!config_.empty()) file = read_config(config_);
    for (const auto& [k, v] : file) {
      if (k == "version") continue;
      if (k == "command") {
        if (v != name_) throw Error(ErrorCode::DomainError, "config was written by " + v);
        continue;
      }
      if (!flags_.count(k)) throw Error(ErrorCode::DomainError, "unknown config key '" + k + "'");
    }
    const char* env_seed = std::getenv("RCB_SEED");
    for (const Key& k : keys_) {
      if (flags_[k.name]->count() > 0) {
        values_[k.name] = given_[k.name];
        source_[k.name] = Source::Flag;
      } else if (file.count(k.name)) {
        values_[k.name] = file[k.name];
        source_[k.name] = Source::File;
      } else if (k.name == "seed" && env_seed && *env_seed) {
        values_[k.name] = env_seed;
        source_[k.name] = Source::Env;
      } else {
        values_[k.name] = k.fallback;
        source_[k.name] = Source::Default;
      }
    }
    // An exponential initial mass replaces zeta unless zeta was also given on the command line.
    if (values_.count("exp_mean") && !values_["exp_mean"].empty() && source_["zeta"] != Source::Flag)
      values_["zeta"] = "";
  }

  bool from_flag(const std::string& k) const { return source_.at(k) == Source::Flag; }
  const std::string& str(const std::string& k) const { return values_.at(k); }
  bool empty(const std::string& k) const { return values_.at(k).empty(); }

  double num(const std::string& k) const {
    const std::string& s = values_.at(k);
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::DomainError, k + ": '" + s + "' is not a number");
  }

  long long integer(const std::string& k) const {
    const std::string& s = values_.at(k);
    try {
      std::size_t used = 0;
      const long long x = std::stoll(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::DomainError, k + ": '" + s + "' is not an integer");
  }

  std::size_t count(const std::string& k) const {
    const long long x = integer(k);
    if (x < 1) throw Error(ErrorCode::DomainError, k + " must be >= 1");
    return static_cast<std::size_t>(x);
  }

  std::uint64_t seed() const {
    const std::string& s = values_.at("seed");
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(s, &used, 0);
      if (used == s.size() && s.front() != '-') return x;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::DomainError, "seed: '" + s + "' is not a 64-bit unsigned integer");
  }

  std::string csv_header() const {
    std::string h = "# version=" + std::string(kVersion) + "\n# command=" + name_ + "\n";
    for (const auto& [k, v] : values_) h += "# " + k + "=" + v + "\n";
    return h;
  }

  json meta() const {
    json cfg = json::object();
    for (const auto& [k, v] : values_) cfg[k] = v;
    return json{{"version", kVersion}, {"command", name_}, {"config", cfg}};
  }

  void emit(const std::string& text, std::ostream& out) const { write_to(out_, text, out); }

  static void write_to(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty()) {
      fallback << text;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::DomainError, "cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error(ErrorCode::DomainError, "write to '" + path + "' failed");
  }

 private:
  std::string name_;
  std::vector<Key> keys_;
  CLI::App* app_ = nullptr;
  std::map<std::string, CLI::Option*> flags_;
  std::map<std::string, std::string> given_;
  std::map<std::string, std::string> values_;  // sorted: stable echo order
  std::map<std::string, Source> source_;
  std::string config_;
  std::string out_;
  unsigned threads_ = default_threads();
};

ModelParams model(const Command& c) { return validate(c.num("alpha"), c.num("b"), c.num("c")); }

TimeGrid grid(const Command& c) {
  const long long n = c.integer("n_steps");
  if (n < 2) throw Error(ErrorCode::InvalidGrid, "n_steps must be >= 2");
  return TimeGrid(c.num("t_max"), static_cast<std::size_t>(n));
}

InitialState initial(const Command& c) {
  if (!c.empty("exp_mean")) {
    if (c.from_flag("zeta")) throw Error(ErrorCode::InvalidInitialState, "give zeta or exp_mean, not both");
    InitialState s = ExponentialInitial{c.num("exp_mean")};
    validate(s);
    return s;
  }
  InitialState s = FixedInitial{c.num("zeta")};
  validate(s);
  return s;
}

double fixed_zeta(const Command& c) {
  const double z = c.num("zeta");
  if (!(z >= 0.0) || !std::isfinite(z)) throw Error(ErrorCode::InvalidInitialState, "zeta must be >= 0");
  return z;
}

GFunction constant_g(double g_im) {
  if (g_im == 0.0) return {};
  return [g_im](double) { return cplx(0.0, g_im); };
}

SveOptions sve_options(const Command& c) {
  SveOptions o;
  const std::string& s = c.str("small_jumps");
  if (s == "gaussian") o.small_jumps = SmallJumps::Gaussian;
  else if (s == "drop") o.small_jumps = SmallJumps::Drop;
  else throw Error(ErrorCode::DomainError, "small_jumps must be 'gaussian' or 'drop'");
  return o;
}

double sve_eps(const Command& c, const TimeGrid& g) {
  return c.empty("eps") ? g.step() : c.num("eps");
}

bool json_format(const Command& c) {
  const std::string& f = c.str("format");
  if (f == "json") return true;
  if (f == "csv") return false;
  throw Error(ErrorCode::DomainError, "format must be 'csv' or 'json'");
}

std::vector<int> int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw Error(ErrorCode::DomainError, "bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::DomainError, "empty list");
  return out;
}

// Streams per-path values into either long CSV rows or running moments.
class PathSink {
 public:
  PathSink(const Command& c, const TimeGrid& g, bool as_json, std::string x_name, std::string t_name)
      : cmd_(c), as_json_(as_json), x_name_(std::move(x_name)), t_name_(std::move(t_name)), t_(g.nodes()) {
    sum_ = Eigen::VectorXd::Zero(t_.size());
    sq_ = Eigen::VectorXd::Zero(t_.size());
    if (!as_json_) body_ << c.csv_header() << "path," << t_name_ << "," << x_name_ << "\n";
  }

  void add(std::size_t i, const PathSample& p) {
    if (as_json_) {
      sum_ += p.values;
      sq_ += p.values.cwiseAbs2();
    } else {
      for (Eigen::Index k = 0; k < p.values.size(); ++k)
        body_ << i << "," << fmt(t_[k]) << "," << fmt(p.values[k]) << "\n";
    }
    clamps_ += p.clamp_events;
    jumps_ += p.n_jumps;
    ++n_;
  }

  std::size_t clamps() const { return clamps_; }

  std::string finish(const std::string& scheme, const Eigen::VectorXd& oracle_mean, json extra) const {
    if (!as_json_) return body_.str();
    const double n = static_cast<double>(n_);
    const Eigen::VectorXd mean = sum_ / n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(t_.size());
    if (n_ > 1) var = ((sq_ - n * mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
    const Eigen::VectorXd se = (var / n).cwiseSqrt();
    auto arr = [](const Eigen::VectorXd& v) {
      json a = json::array();
      for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(jnum(v[k]));
      return a;
    };
    json j;
    j["meta"] = cmd_.meta();
    j["scheme"] = scheme;
    j["n_paths"] = n_;
    j[t_name_] = arr(t_);
    j["mean"] = arr(mean);
    j["variance"] = arr(var);
    j["se"] = arr(se);
    if (oracle_mean.size()) {
      j["oracle_mean"] = arr(oracle_mean);
      double zmax = 0.0;
      for (Eigen::Index k = 0; k < mean.size(); ++k)
        zmax = std::max(zmax, std::abs(z_score(mean[k], oracle_mean[k], se[k])));
      j["max_abs_mean_z"] = jnum(zmax);
    }
    j["clamp_events"] = clamps_;
    j["jumps"] = jumps_;
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j.dump(2) + "\n";
  }

 private:
  const Command& cmd_;
  bool as_json_;
  std::string x_name_, t_name_;
  Eigen::VectorXd t_;
  Eigen::VectorXd sum_, sq_;
  std::ostringstream body_;
  std::size_t n_ = 0, clamps_ = 0, jumps_ = 0;
};

int scale_fn(const Command& c, std::ostream& out) {
  const ModelParams p = model(c);
  const TimeGrid g = grid(c);
  const ScaleFunction sf(p);
  std::ostringstream s;
  s << c.csv_header() << "t,W,Wp,K,LK\n";
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double t = g[k];
    if (k == 0)
      s << fmt(t) << "," << fmt(0.0) << "," << fmt(inf) << "," << fmt(inf) << "," << fmt(inf) << "\n";
    else
      s << fmt(t) << "," << fmt(sf.W(t)) << "," << fmt(sf.Wp(t)) << "," << fmt(sf.K(t)) << ","
        << fmt(sf.LK(t)) << "\n";
  }
  c.emit(s.str(), out);
  return Ok;
}

int solve_volterra(const Command& c, std::ostream& out) {
  const ModelParams p = model(c);
  const TimeGrid g = grid(c);
  const InitialState init = initial(c);
  const VolterraSolution sol = solve_v(cplx(0.0, c.num("lambda_im")), constant_g(c.num("g_im")), g, p);
  const cplx cf = characteristic_functional(sol, g.t_max(), init);
  std::ostringstream s;
  s << c.csv_header() << "t,re_v,im_v,re_Kv,im_Kv\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const cplx v = k == 0 ? cplx(std::nan(""), std::nan("")) : sol.v[i];
    s << fmt(g[k]) << "," << fmt(v.real()) << "," << fmt(v.imag()) << "," << fmt(sol.Kv[i].real()) << ","
      << fmt(sol.Kv[i].imag()) << "\n";
  }
  json footer{{"t", g.t_max()},
              {"characteristic_functional", jcplx(cf)},
              {"Kv", jcplx(sol.Kv[static_cast<Eigen::Index>(g.n_steps())])},
              {"Kv0_extrapolated", jcplx(sol.Kv0_extrapolated)},
              {"picard_iterations", sol.max_picard_iterations}};
  s << "# " << footer.dump() << "\n";
  c.emit(s.str(), out);
  return Ok;
}

int fractional_check(const Command& c, std::ostream& out) {
  const ModelParams p = model(c);
  const TimeGrid g = grid(c);
  const cplx lambda(0.0, c.num("lambda_im"));
  const RiccatiResidual r = riccati_residual(solve_v(lambda, {}, g, p), p);
  const TimeGrid fine(g.t_max(), 2 * g.n_steps());
  const RiccatiResidual r2 = riccati_residual(solve_v(lambda, {}, fine, p), p);
  const double order =
      r.residual_norm > 0.0 && r2.residual_norm > 0.0 ? std::log2(r.residual_norm / r2.residual_norm) : 0.0;
  json j;
  j["meta"] = c.meta();
  j["residual_norm"] = jnum(r.residual_norm);
  j["initial_gap"] = jnum(r.initial_gap);
  j["refinement_order"] = jnum(order);
  j["residual_norm_refined"] = jnum(r2.residual_norm);
  j["initial_gap_refined"] = jnum(r2.initial_gap);
  c.emit(j.dump(2) + "\n", out);
  return Ok;
}

int simulate_sve_cmd(const Command& c, const std::string& jumps_path, std::ostream& out,
                     std::ostream& err) {
  const ModelParams p = model(c);
  const TimeGrid g = grid(c);
  const double zeta = fixed_zeta(c);
  const std::size_t paths = c.count("paths");
  const std::uint64_t seed = c.seed();
  SveOptions o = sve_options(c);
  o.record_jumps = !jumps_path.empty();
  const SveSimulator sim(p, zeta, g, sve_eps(c, g), o);
  for (const std::string& w : sim.warnings()) err << "warning: " << w << "\n";

  const bool as_json = json_format(c);
  PathSink sink(c, g, as_json, "x", "t");
  std::ostringstream jumps;
  if (o.record_jumps) jumps << c.csv_header() << "path,s,y\n";
  for_each_ordered<PathSample>(
      paths, c.threads(), [&](std::size_t i) { return sim.run({seed, i}); },
      [&](std::size_t i, const PathSample& ps) {
        sink.add(i, ps);
        if (o.record_jumps)
          for (const JumpRecord& r : ps.jumps) jumps << i << "," << fmt(r.s) << "," << fmt(r.y) << "\n";
      });
  if (o.record_jumps) Command::write_to(jumps_path, jumps.str(), out);

  const ScaleFunction sf(p);
  Eigen::VectorXd oracle(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) oracle[static_cast<Eigen::Index>(k)] = zeta * (1.0 - p.b * sf.W(g[k]));
  json extra{{"eps", sim.eps()},
             {"predicted_variance_T", jnum(sim.predicted_variance())},
             {"dropped_variance_bound", jnum(sim.dropped_variance_bound())},
             {"warnings", sim.warnings()}};
  c.emit(sink.finish("sve_euler", oracle, extra), out);
  return Ok;
}

int simulate_cmj_cmd(const Command& c, std::ostream& out) {
  const double alpha = c.num("alpha");
  const double beta = c.num("beta");
  const long long n = c.integer("n");
  if (n < 1 || n > std::numeric_limits<int>::max()) throw Error(ErrorCode::DomainError, "n must be >= 1");
  const TimeGrid g = grid(c);
  const double zeta = fixed_zeta(c);
  const std::size_t paths = c.count("paths");
  const std::uint64_t seed = c.seed();
  const double gamma = cmj_rate(static_cast<int>(n), alpha, beta);
  PathSink sink(c, g, json_format(c), "x", "t");
  double x0 = 0.0;
  for_each_ordered<PathSample>(
      paths, c.threads(),
      [&](std::size_t i) { return simulate_cmj(static_cast<int>(n), zeta, alpha, beta, g, {seed, i}); },
      [&](std::size_t i, const PathSample& ps) {
        x0 = ps.values[0];
        sink.add(i, ps);
      });
  Eigen::VectorXd oracle;
  if (beta == 0.0) oracle = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), x0);
  c.emit(sink.finish("cmj_prelimit", oracle, json{{"gamma_n", gamma}, {"x0", x0}}), out);
  return Ok;
}

double cp_gamma(const Command& c) { return c.empty("gamma") ? c.num("alpha") : c.num("gamma"); }

int simulate_cp_cmd(const Command& c, std::ostream& out) {
  const double alpha = c.num("alpha");
  const double gamma = cp_gamma(c);
  const long long levels = c.integer("n_levels");
  if (levels < 2) throw Error(ErrorCode::InvalidGrid, "n_levels must be >= 2");
  const TimeGrid g(c.num("level_max"), static_cast<std::size_t>(levels));
  const std::size_t paths = c.count("paths");
  const std::uint64_t seed = c.seed();
  PathSink sink(c, g, json_format(c), "local_time", "level");
  for_each_ordered<PathSample>(
      paths, c.threads(), [&](std::size_t i) { return simulate_cp_localtime(gamma, alpha, g, {seed, i}); },
      [&](std::size_t i, const PathSample& ps) { sink.add(i, ps); });
  c.emit(sink.finish("cp_localtime", {}, json{{"gamma", gamma}}), out);
  return Ok;
}

struct CfSample {
  double x = 0.0;
  cplx gx = 0.0;
  std::size_t clamps = 0;
};

int verify_cf(const Command& c, std::ostream& out) {
  const std::string scheme = c.str("scheme");
  if (scheme != "sve" && scheme != "cmj") throw Error(ErrorCode::DomainError, "scheme must be 'sve' or 'cmj'");
  const bool cmj = scheme == "cmj";
  const TimeGrid g = grid(c);
  const double zeta = fixed_zeta(c);
  const double T = g.t_max();
  const double lambda_im = c.num("lambda_im");
  const GFunction gfn = constant_g(c.num("g_im"));
  const std::size_t paths = c.count("paths");
  const std::uint64_t seed = c.seed();
  const double n_se = c.num("n_se"), allowance = c.num("allowance");
  if (!(n_se >= 0.0) || !(allowance >= 0.0)) throw Error(ErrorCode::DomainError, "tolerances must be >= 0");
  const long long oracle_steps = c.integer("oracle_steps");
  if (oracle_steps < 2) throw Error(ErrorCode::InvalidGrid, "oracle_steps must be >= 2");

  // The prelimit is built on the canonical triple, for which c0 = 1.
  const ModelParams p = cmj ? canonical_params(c.num("alpha"), c.num("beta")) : model(c);
  validate(p);
  const long long n = c.integer("n");

  std::unique_ptr<SveSimulator> sim;
  if (!cmj) sim = std::make_unique<SveSimulator>(p, zeta, g, sve_eps(c, g), sve_options(c));
  if (cmj && (n < 1 || n > std::numeric_limits<int>::max())) throw Error(ErrorCode::DomainError, "n must be >= 1");

  Eigen::VectorXd xs(static_cast<Eigen::Index>(paths));
  Eigen::VectorXcd gxs(gfn ? static_cast<Eigen::Index>(paths) : 0);
  std::size_t clamps = 0;
  for_each_ordered<CfSample>(
      paths, c.threads(),
      [&](std::size_t i) {
        const PathSample ps = cmj ? simulate_cmj(static_cast<int>(n), zeta, p.alpha, c.num("beta"), g, {seed, i})
                                  : sim->run({seed, i});
        return CfSample{ps.values[ps.values.size() - 1], g_convolution(ps, gfn), ps.clamp_events};
      },
      [&](std::size_t i, const CfSample& s) {
        xs[static_cast<Eigen::Index>(i)] = s.x;
        if (gfn) gxs[static_cast<Eigen::Index>(i)] = s.gx;
        clamps += s.clamps;
      });
  const CfEstimate est = mc_char_fn(xs, gxs, lambda_im);

  const TimeGrid og(T, static_cast<std::size_t>(oracle_steps));
  const VolterraSolution sol = solve_v(cplx(0.0, lambda_im), gfn, og, p);
  const cplx oracle = characteristic_functional(sol, T, FixedInitial{zeta});
  const cplx diff = est.value - oracle;
  const bool pass_re = std::abs(diff.real()) <= n_se * est.se_re + allowance;
  const bool pass_im = std::abs(diff.imag()) <= n_se * est.se_im + allowance;

  json j;
  j["meta"] = c.meta();
  j["scheme"] = cmj ? "cmj_prelimit" : "sve_euler";
  j["params"] = json{{"alpha", p.alpha}, {"b", p.b}, {"c", p.c}};
  j["estimate"] = json{{"re", est.value.real()}, {"im", est.value.imag()}, {"se_re", est.se_re}, {"se_im", est.se_im}};
  j["oracle"] = jcplx(oracle);
  j["abs_diff"] = json{{"re", std::abs(diff.real())}, {"im", std::abs(diff.imag())}, {"modulus", std::abs(diff)}};
  j["tolerance"] = json{{"n_se", n_se}, {"allowance", allowance}};
  if (cmj) {
    if (!gfn) {
      const cplx anc = ancestral_limit_cf(sol, T, zeta);
      j["ancestral_limit"] = jcplx(anc);
      j["ancestral_limit_distance"] = std::abs(est.value - anc);
    }
  } else {
    j["clamp_events"] = clamps;
    j["warnings"] = sim->warnings();
  }
  j["pass"] = pass_re && pass_im;
  c.emit(j.dump(2) + "\n", out);
  return pass_re && pass_im ? Ok : VerificationFailed;
}

int resolvent_convergence(const Command& c, std::ostream& out) {
  const std::vector<int> ns = int_list(c.str("n_list"));
  const TimeGrid g = grid(c);
  const auto rows = resolvent_convergence_study(ns, c.num("beta"), c.num("alpha"), g, c.num("max_step"));
  json j;
  j["meta"] = c.meta();
  json arr = json::array();
  bool decreasing = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    arr.push_back(json{{"n", rows[i].n}, {"gamma_n", rows[i].gamma}, {"sup_error", jnum(rows[i].sup_error)}});
    if (i > 0 && !(rows[i].sup_error < rows[i - 1].sup_error)) decreasing = false;
  }
  j["rows"] = arr;
  j["pass"] = decreasing;
  c.emit(j.dump(2) + "\n", out);
  return decreasing ? Ok : VerificationFailed;
}

int lemma31_check(const Command& c, std::ostream& out) {
  const double alpha = c.num("alpha");
  const double gamma = cp_gamma(c);
  const double level = c.num("level");
  if (!(level > 0.0)) throw Error(ErrorCode::DomainError, "level must be positive");
  const std::size_t paths = c.count("paths");
  const std::uint64_t seed = c.seed();
  const double ks_max = c.num("ks_max");
  const TimeGrid g(level, 2);
  // The CMJ side uses the upper half of the stream space.
  const std::uint64_t offset = std::uint64_t{1} << 63;
  std::vector<double> lt(paths), pop(paths);
  using Pair = std::pair<double, double>;
  for_each_ordered<Pair>(
      paths, c.threads(),
      [&](std::size_t i) {
        const double a = simulate_cp_localtime(gamma, alpha, g, {seed, i}).values[2];
        const double b = cmj_population(1, gamma, alpha, g, {seed, offset + i})[2];
        return Pair{a, b};
      },
      [&](std::size_t i, const Pair& r) {
        lt[i] = r.first;
        pop[i] = r.second;
      });
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double ks = ks_distance(lt, pop);
  json j;
  j["meta"] = c.meta();
  j["gamma"] = gamma;
  j["mean_local_time"] = mean(lt);
  j["mean_population"] = mean(pop);
  j["ks_distance"] = ks;
  j["ks_max"] = ks_max;
  j["pass"] = ks <= ks_max;
  c.emit(j.dump(2) + "\n", out);
  return ks <= ks_max ? Ok : VerificationFailed;
}

std::vector<Key> with(std::vector<Key> a, const std::vector<Key>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<Key> kModel = {
    {"alpha", "0.5", "stable index minus one, in (0,1)"},
    {"b", "0", "drift coefficient"},
    {"c", "1", "stable scale"},
};
const std::vector<Key> kGrid = {
    {"t_max", "1", "time horizon"},
    {"n_steps", "512", "grid steps"},
};
const std::vector<Key> kSim = {
    {"paths", "1000", "number of paths"},
    {"seed", "0", "64-bit seed (falls back to RCB_SEED)"},
    {"format", "csv", "csv (per path) or json (summary)"},
};

}  // namespace

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::DomainError, "cannot read config '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  std::map<std::string, std::string> out;
  if (trim(text).rfind('{', 0) == 0) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DomainError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.contains("meta") || !j["meta"].contains("config"))
      throw Error(ErrorCode::DomainError, "JSON config lacks meta.config");
    out["command"] = j["meta"].value("command", "");
    for (const auto& [k, v] : j["meta"]["config"].items()) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return out;
  }
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string s = trim(line);
    if (s.rfind('#', 0) == 0) {
      s = trim(s.substr(1));
      // Only the key=value lines of a metadata block; other comments are skipped.
      if (s.empty() || s.front() == '{') continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) continue;
    out[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rough continuous-state branching: scale functions, Volterra solver, simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  using Handler = std::function<int()>;
  std::vector<std::pair<std::unique_ptr<Command>, Handler>> cmds;
  auto add = [&](const std::string& name, const std::string& about, std::vector<Key> keys) -> Command& {
    cmds.emplace_back(std::make_unique<Command>(app, name, about, std::move(keys)), Handler{});
    return *cmds.back().first;
  };

  Command& scale = add("scale-fn", "tabulate W, W', K, L_K", with(kModel, {{"t_max", "1", "time horizon"}, {"n_steps", "64", "grid steps"}}));
  cmds.back().second = [&] { return scale_fn(scale, out); };

  Command& volt = add("solve-volterra", "solve the nonlinear Volterra equation for v",
                      with(with(kModel, kGrid), {{"zeta", "1", "initial mass"},
                                                 {"exp_mean", "", "mean of an exponential initial mass"},
                                                 {"lambda_im", "1", "imaginary part of lambda"},
                                                 {"g_im", "0", "imaginary part of the constant g"}}));
  cmds.back().second = [&] { return solve_volterra(volt, out); };

  Command& frac = add("fractional-check", "Riccati residual of the Volterra solution",
                      with(with(kModel, kGrid), {{"lambda_im", "1", "imaginary part of lambda"}}));
  cmds.back().second = [&] { return fractional_check(frac, out); };

  std::string jumps_path;
  Command& sve = add("simulate-sve", "simulate the stochastic Volterra equation",
                     with(with(with(kModel, kGrid), kSim), {{"zeta", "1", "initial mass"},
                                                            {"eps", "", "mark truncation level (default: step)"},
                                                            {"small_jumps", "gaussian", "gaussian or drop"}}));
  sve.app()->add_option("--emit-jumps", jumps_path, "write the jump records (path,s,y) to this file");
  cmds.back().second = [&] { return simulate_sve_cmd(sve, jumps_path, out, err); };

  Command& cmj = add("simulate-cmj", "simulate the rescaled CMJ prelimit",
                     with(with(kSim, {{"t_max", "1", "time horizon"}, {"n_steps", "100", "grid steps"}}),
                          {{"alpha", "0.5", "stable index minus one, in (0,1)"},
                           {"beta", "0", "drift of the canonical process"},
                           {"n", "100", "scaling parameter"},
                           {"zeta", "1", "initial mass"}}));
  cmds.back().second = [&] { return simulate_cmj_cmd(cmj, out); };

  Command& cp = add("simulate-cp", "local times of the compound Poisson path",
                    with(kSim, {{"alpha", "0.5", "stable index minus one, in (0,1)"},
                                {"gamma", "", "jump rate (default: alpha)"},
                                {"level_max", "1", "top of the level grid"},
                                {"n_levels", "100", "level grid steps"}}));
  cmds.back().second = [&] { return simulate_cp_cmd(cp, out); };

  Command& vcf = add("verify-cf", "Monte Carlo characteristic functional against the Volterra oracle",
                     with(with(kModel, kGrid), {{"scheme", "sve", "sve or cmj"},
                                                {"beta", "0", "canonical drift (cmj)"},
                                                {"n", "100", "scaling parameter (cmj)"},
                                                {"zeta", "1", "initial mass"},
                                                {"lambda_im", "1", "imaginary part of lambda"},
                                                {"g_im", "0", "imaginary part of the constant g"},
                                                {"oracle_steps", "2048", "grid steps of the Volterra oracle"},
                                                {"paths", "10000", "number of paths"},
                                                {"seed", "0", "64-bit seed (falls back to RCB_SEED)"},
                                                {"eps", "", "mark truncation level (default: step)"},
                                                {"small_jumps", "gaussian", "gaussian or drop"},
                                                {"n_se", "3", "standard errors allowed"},
                                                {"allowance", "0.01", "discretization allowance per component"}}));
  cmds.back().second = [&] { return verify_cf(vcf, out); };

  Command& res = add("resolvent-convergence", "scaled Pareto resolvent against W0",
                     {{"alpha", "0.5", "stable index minus one, in (0,1)"},
                      {"beta", "0", "canonical drift"},
                      {"n_list", "10,50,200", "comma-separated scaling parameters"},
                      {"t_max", "1", "time horizon"},
                      {"n_steps", "100", "output grid steps"},
                      {"max_step", "0.05", "largest step on the unscaled clock"}});
  cmds.back().second = [&] { return resolvent_convergence(res, out); };

  Command& l31 = add("lemma31-check", "local time of the compound Poisson path against the CMJ population",
                     {{"alpha", "0.5", "stable index minus one, in (0,1)"},
                      {"gamma", "", "birth / jump rate (default: alpha)"},
                      {"level", "1", "level and time compared"},
                      {"paths", "10000", "samples on each side"},
                      {"seed", "0", "64-bit seed (falls back to RCB_SEED)"},
                      {"ks_max", "0.03", "largest accepted KS distance"}});
  cmds.back().second = [&] { return lemma31_check(l31, out); };

  CLI::App* active = nullptr;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    for (auto& [c, h] : cmds)
      if (c->app()->parsed()) active = c->app();
    out << (active ? active->help() : app.help());
    return Ok;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return Ok;
  } catch (const CLI::ParseError& e) {
    for (auto& [c, h] : cmds)
      if (c->app()->parsed()) active = c->app();
    err << "error: " << e.what() << "\n\n" << (active ? active->help() : app.help());
    return ValidationFailure;
  }

  for (auto& [c, h] : cmds) {
    if (!c->app()->parsed()) continue;
    try {
      c->resolve();
      return h();
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return is_validation_error(e.code()) ? ValidationFailure : NumericalFailure;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return NumericalFailure;
    }
  }
  return ValidationFailure;
}

}  // namespace rcb::cli
