#include "wpinn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "wpinn/config.hpp"
#include "wpinn/errors.hpp"
#include "wpinn/network.hpp"
#include "wpinn/reference.hpp"
#include "wpinn/suites.hpp"

#ifndef WPINN_REVISION
#define WPINN_REVISION "unknown"
#endif

namespace wpinn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::vector<std::string> overrides;
  std::string cache_dir;
  int threads = 0;
};

std::string default_cache_dir() {
  const char* v = std::getenv("WPINN_CACHE_DIR");
  return v && *v ? v : ".wpinn-cache";
}

config::ConfigText load(const std::string& path, const std::vector<std::string>& overrides) {
  config::ConfigText text = config::read_file(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    const auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
    };
    trim(key);
    trim(value);
    config::section_of(key);
    text.set(key, value);
  }
  return text;
}

reference::ReferenceSolution load_reference(const reference::ExperimentSpec& spec,
                                            const std::string& cache_dir) {
  if (spec.name != reference::Experiment::Sine) return reference::make_reference(spec);
  fs::create_directories(cache_dir);
  char name[64];
  std::snprintf(name, sizeof name, "sine_T%.6g_c8192.ref", spec.T);
  return reference::make_reference(spec, (fs::path(cache_dir) / name).string());
}

int thread_count(int requested) { return requested > 0 ? requested : trainer::threads_from_env(); }

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::optional<long> seed;
  std::string out_dir;
};

int cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  config::ConfigText text = load(a.config, c.overrides);
  if (a.seed) {
    if (*a.seed < 0) throw ConfigError("--seed must be nonnegative");
    text.set("seed", std::to_string(*a.seed));
  }
  const trainer::TrainConfig cfg = config::to_train_config(text);
  const std::string hash = config::config_hash(cfg);
  const reference::ExperimentSpec spec = reference::make_experiment(cfg.experiment, cfg.T);
  const reference::ReferenceSolution ref = load_reference(spec, c.cache_dir);
  const int threads = thread_count(c.threads);

  const fs::path dir = a.out_dir.empty()
                           ? fs::path("runs") / (std::string(reference::to_string(cfg.experiment)) +
                                                 "-" + hash.substr(0, 8))
                           : fs::path(a.out_dir);
  fs::create_directories(dir);

  const trainer::EnsembleResult ens =
      trainer::ensemble_train(cfg, spec, ref, cfg.ensemble_size, threads);

  std::vector<std::string> outputs{"config.cfg", "results.json"};
  write_text(dir / "config.cfg", config::serialize(cfg));
  json seeds = json::array(), members = json::array();
  for (std::size_t k = 0; k < ens.members.size(); ++k) {
    const trainer::RunResult& m = ens.members[k];
    const std::string stem = "member_" + std::to_string(m.seed);
    network::write_checkpoint((dir / (stem + ".ckpt")).string(), m.best_params,
                              {m.seed, m.best_epoch, m.best_loss});
    std::ofstream log(dir / (stem + "_loss.csv"));
    trainer::write_loss_log(log, m.log);
    if (!log) throw ConfigError("failed writing loss log");
    outputs.push_back(stem + ".ckpt");
    outputs.push_back(stem + "_loss.csv");
    seeds.push_back(m.seed);
    members.push_back({{"seed", m.seed},
                       {"best_epoch", m.best_epoch},
                       {"best_loss", m.best_loss},
                       {"E_T", m.E_T},
                       {"wall_time_s", m.wall_time}});
  }

  const json results = results_json(cfg, ens);
  validate_results(results);
  write_text(dir / "results.json", results.dump(2) + "\n");

  json failures = json::array();
  for (const auto& f : ens.failures) failures.push_back({{"seed", f.seed}, {"error", f.message}});
  const json manifest{{"config", config::serialize(cfg)},
                      {"config_hash", hash},
                      {"revision", WPINN_REVISION},
                      {"seeds", seeds},
                      {"members", members},
                      {"failures", failures},
                      {"threads", threads},
                      {"outputs", outputs},
                      {"timing", {{"wall_time_s", ens.wall_time}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const std::string& f : outputs) {
    if (!fs::exists(dir / f)) throw ContractError("manifest output missing: " + f);
  }

  out << "experiment " << reference::to_string(cfg.experiment) << "  entropy "
      << residual::to_string(cfg.entropy) << "  members " << ens.members.size() << '\n';
  for (const auto& m : ens.members) {
    out << "  seed " << m.seed << "  best L_max " << m.best_loss << " @" << m.best_epoch
        << "  E_T " << m.E_T << '\n';
  }
  for (const auto& f : ens.failures) out << "  seed " << f.seed << " failed: " << f.message << '\n';
  out << "ensemble E_T " << ens.E_T << "  (" << ens.wall_time << " s)\n"
      << "wrote " << (dir / "results.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- export

struct ExportArgs {
  std::string experiment;
  std::optional<double> T;
  std::vector<std::string> checkpoints;
  std::string grid;
  bool phi0 = false;
  bool exact = false;
  std::string out;
};

std::vector<long> parse_grid(const std::string& spec) {
  std::vector<long> sizes;
  std::stringstream in(spec);
  std::string part;
  while (std::getline(in, part, 'x')) {
    char* end = nullptr;
    const long v = std::strtol(part.c_str(), &end, 10);
    if (part.empty() || *end != '\0' || v < 1) {
      throw ConfigError("grid spec must look like 64x8x16 with positive sizes, got '" + spec + "'");
    }
    sizes.push_back(v);
  }
  if (sizes.empty()) throw ConfigError("empty grid spec");
  return sizes;
}

std::vector<double> linspace(double lo, double hi, long n) {
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

int cmd_export(const ExportArgs& a, const Common& c, std::ostream& out) {
  if (a.checkpoints.empty() == !a.exact) {
    throw ConfigError("export needs either --checkpoint files or --exact");
  }
  const std::vector<long> g = parse_grid(a.grid);
  if (g.size() != (a.phi0 ? 2u : 3u)) {
    throw ConfigError(a.phi0 ? "--phi0 expects a grid NLAMBDAxNT" : "grid must be NLAMBDAxNPHIxNT");
  }
  const reference::ExperimentSpec spec =
      reference::make_experiment(reference::parse_experiment(a.experiment), a.T);
  const geometry::Domain domain = spec.domain();
  const reference::ReferenceSolution ref = load_reference(spec, c.cache_dir);

  const std::vector<double> lam = linspace(domain.lambda.lo, domain.lambda.hi, g[0]);
  const std::vector<double> phi =
      a.phi0 ? std::vector<double>{0.0} : linspace(domain.phi.lo, domain.phi.hi, g[1]);
  const std::vector<double> ts = linspace(0.0, domain.T, g.back());
  Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(lam.size() * phi.size() * ts.size()));
  Eigen::Index j = 0;
  for (double t : ts) {
    for (double p : phi) {
      for (double l : lam) pts.col(j++) << l, p, t;
    }
  }

  reference::Predictor reference_fn = reference::lifted_predictor(ref);
  Eigen::RowVectorXd u_ref = reference_fn(pts);
  Eigen::RowVectorXd u_pred;
  if (a.exact) {
    u_pred = u_ref;
  } else {
    u_pred = Eigen::RowVectorXd::Zero(pts.cols());
    for (const std::string& path : a.checkpoints) {
      const network::MlpParams net = network::read_checkpoint(path);
      if (net.periodic_lambda != domain.periodic_lambda) {
        throw ConfigError("checkpoint '" + path + "' does not match the experiment's boundary");
      }
      u_pred += net.evaluate(pts);
    }
    u_pred /= static_cast<double>(a.checkpoints.size());
  }

  std::ofstream file;
  std::ostream* dst = &out;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw ConfigError("cannot write '" + a.out + "'");
    dst = &file;
  }
  *dst << "lambda,phi,t,u_pred,u_ref,abs_err\n";
  char line[256];
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.17g,%.17g,%.17g\n", pts(0, k), pts(1, k),
                  pts(2, k), u_pred(k), u_ref(k), std::abs(u_pred(k) - u_ref(k)));
    *dst << line;
  }
  if (!*dst) throw ConfigError("failed writing export");
  return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string config;
  std::optional<long> cap;
  std::string out_dir;
};

int cmd_sweep(const SweepArgs& a, const Common& c, std::ostream& out) {
  const config::ConfigText text = load(a.config, c.overrides);
  const std::size_t cap = a.cap ? static_cast<std::size_t>(std::max(1L, *a.cap))
                                : config::sweep_cap(text);
  const std::vector<config::SweepCell> cells = config::expand_sweep(text, cap);
  const int threads = thread_count(c.threads);

  struct Row {
    std::vector<std::string> values;
    double E_T = NAN;
    double best_loss = NAN;
    std::string hash;
    std::string error;
  };
  std::vector<Row> rows;
  bool aborted = false;
  for (const config::SweepCell& cell : cells) {
    Row row;
    for (const auto& kv : cell.assignment) row.values.push_back(kv.second);
    row.hash = config::config_hash(cell.cfg);
    try {
      const auto spec = reference::make_experiment(cell.cfg.experiment, cell.cfg.T);
      const auto ref = load_reference(spec, c.cache_dir);
      const auto ens = trainer::ensemble_train(cell.cfg, spec, ref, cell.cfg.ensemble_size, threads);
      std::vector<double> best;
      for (const auto& m : ens.members) best.push_back(m.best_loss);
      row.E_T = ens.E_T;
      row.best_loss = median(best);
    } catch (const NumericalError& e) {
      row.error = e.what();
      aborted = true;
    }
    rows.push_back(std::move(row));
  }
  // Failed cells (NaN) sort last.
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (std::isnan(x.E_T)) return false;
    if (std::isnan(y.E_T)) return true;
    return x.E_T < y.E_T;
  });

  std::ostringstream csv;
  for (const auto& kv : cells.front().assignment) csv << kv.first << ',';
  csv << "E_T,best_loss_median,config_hash\n";
  for (const Row& r : rows) {
    for (const std::string& v : r.values) csv << v << ',';
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,", r.E_T, r.best_loss);
    csv << buf << r.hash << '\n';
  }
  const fs::path dir = a.out_dir.empty() ? fs::path("runs") / "sweep" : fs::path(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "sweep.csv", csv.str());
  out << csv.str();
  for (const Row& r : rows) {
    if (!r.error.empty()) out << "cell " << r.hash << " aborted: " << r.error << '\n';
  }
  return aborted ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::string& tag, std::ostream& out) {
  const std::vector<suites::Check> checks = suites::run(tag);
  construct::print_table(out, checks);
  const bool ok = suites::all_pass(checks);
  out << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

json results_json(const trainer::TrainConfig& cfg, const trainer::EnsembleResult& ens) {
  json e_t = json::array(), best = json::array();
  for (const auto& m : ens.members) {
    e_t.push_back(m.E_T);
    best.push_back(m.best_loss);
  }
  return json{{"experiment", reference::to_string(cfg.experiment)},
              {"entropy", residual::to_string(cfg.entropy)},
              {"E_T_ensemble", ens.E_T},
              {"E_T_members", e_t},
              {"best_loss_members", best},
              {"config_hash", config::config_hash(cfg)},
              {"wall_time_s", ens.wall_time}};
}

void validate_results(const json& r) {
  const auto finite = [](const json& v) { return v.is_number() && std::isfinite(v.get<double>()); };
  for (const char* key : {"experiment", "entropy", "config_hash"}) {
    if (!r.contains(key) || !r[key].is_string()) {
      throw ContractError(std::string("results.json: '") + key + "' must be a string");
    }
  }
  for (const char* key : {"E_T_ensemble", "wall_time_s"}) {
    if (!r.contains(key) || !finite(r[key])) {
      throw ContractError(std::string("results.json: '") + key + "' must be a finite number");
    }
  }
  for (const char* key : {"E_T_members", "best_loss_members"}) {
    if (!r.contains(key) || !r[key].is_array() || r[key].empty()) {
      throw ContractError(std::string("results.json: '") + key + "' must be a non-empty array");
    }
    for (const json& v : r[key]) {
      if (!finite(v)) throw ContractError(std::string("results.json: non-finite entry in ") + key);
    }
  }
  if (r["E_T_members"].size() != r["best_loss_members"].size()) {
    throw ContractError("results.json: member arrays differ in length");
  }
  if (r.size() != 7) throw ContractError("results.json: unexpected extra fields");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"wPINN solver for scalar conservation laws on the sphere"};
  app.require_subcommand(1);
  Common common;
  common.cache_dir = default_cache_dir();
  const auto add_common = [&](CLI::App* sub, bool overrides) {
    if (overrides) sub->add_option("--set", common.overrides, "Override a config key, key=value");
    sub->add_option("--cache-dir", common.cache_dir, "Directory for cached reference solutions");
  };

  TrainArgs train;
  CLI::App* t = app.add_subcommand("train", "Train an ensemble from a config file");
  t->add_option("config", train.config, "Config file")->required();
  t->add_option("--seed", train.seed, "Override the base seed");
  t->add_option("--out", train.out_dir, "Output directory");
  t->add_option("--threads", common.threads, "Ensemble threads (default WPINN_THREADS or 1)");
  add_common(t, true);

  ExportArgs ex;
  CLI::App* e = app.add_subcommand("export", "Write predicted and reference solutions as CSV");
  e->add_option("--experiment", ex.experiment, "standing | moving | rarefaction | sine")->required();
  e->add_option("--T", ex.T, "Final time (experiment default when omitted)");
  e->add_option("--checkpoint", ex.checkpoints, "Checkpoint files, averaged as an ensemble");
  e->add_flag("--exact", ex.exact, "Use the reference solution as the prediction");
  e->add_option("--grid", ex.grid, "NLAMBDAxNPHIxNT, or NLAMBDAxNT with --phi0")->required();
  e->add_flag("--phi0", ex.phi0, "Slice at phi = 0");
  e->add_option("--out", ex.out, "Output CSV (stdout when omitted)");
  add_common(e, false);

  SweepArgs sw;
  CLI::App* s = app.add_subcommand("sweep", "Train every combination of list-valued keys");
  s->add_option("config", sw.config, "Config file with list values")->required();
  s->add_option("--cap", sw.cap, "Maximum number of combinations");
  s->add_option("--out", sw.out_dir, "Output directory for sweep.csv");
  s->add_option("--threads", common.threads, "Ensemble threads (default WPINN_THREADS or 1)");
  add_common(s, true);

  std::string tag;
  CLI::App* v = app.add_subcommand("verify", "Run an invariant suite");
  v->add_option("suite", tag, "construct | gradcheck | geometry | reference | entropy")->required();
  CLI::App* vc = app.add_subcommand("verify-construct", "Check the constructive network bounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << pe.what() << '\n';
    return kExitConfig;
  }

  try {
    if (t->parsed()) return cmd_train(train, common, out);
    if (e->parsed()) return cmd_export(ex, common, out);
    if (s->parsed()) return cmd_sweep(sw, common, out);
    if (v->parsed()) return cmd_verify(tag, out);
    if (vc->parsed()) return cmd_verify("construct", out);
  } catch (const ConfigError& x) {
    err << "config error: " << x.what() << '\n';
    return kExitConfig;
  } catch (const InputError& x) {
    err << "input error: " << x.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& x) {
    err << "numerical failure: " << x.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"wpinn"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace wpinn::cli
