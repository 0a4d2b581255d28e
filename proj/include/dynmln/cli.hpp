#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynmln/analysis.hpp"
#include "dynmln/chain_io.hpp"
#include "dynmln/gibbs.hpp"
#include "dynmln/net_data.hpp"
#include "dynmln/scenario.hpp"
#include "dynmln/text.hpp"
#include "dynmln/types.hpp"

namespace dynmln::cli {

namespace cli_detail {

inline std::string quote_arg(const std::string& a) {
  if (a.find_first_of(" \t\"'") == std::string::npos) return a;
  std::string out = "\"";
  for (char c : a) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string join_command(const std::vector<std::string>& args) {
  std::string out = "dynmln";
  for (const auto& a : args) out += " " + quote_arg(a);
  return out;
}

// Report sink: a file path or '-' for stdout.
class Report {
 public:
  explicit Report(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw data_error("cannot write '" + path + "'");
      path_ = path;
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    if (file_.is_open()) {
      file_.flush();
      if (!file_) throw data_error("write failed for '" + path_ + "'");
    }
  }

 private:
  std::ofstream file_;
  std::string path_;
};

inline HoldoutSpec gather_holdout(const std::vector<std::string>& inline_selectors,
                                  const std::string& file) {
  std::string text;
  for (const auto& s : inline_selectors) text += s + "\n";
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw data_error("cannot open holdout spec '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text += ss.str();
  }
  return HoldoutSpec::parse(text);
}

inline std::vector<std::string> load_group_labels(const std::string& path, int V) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open group file '" + path + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) labels.push_back(t);
  }
  if (static_cast<int>(labels.size()) != V)
    throw data_error("group file '" + path + "' has " + std::to_string(labels.size()) +
                     " labels, expected one per actor (" + std::to_string(V) + ")");
  return labels;
}

inline void progress_printer(const char* what, int sweep, int total) {
  const int tick = std::max(1, total / 10);
  if (sweep % tick == 0 || sweep == total)
    std::fprintf(stderr, "%s: sweep %d/%d\n", what, sweep, total);
}

struct SimulateOpts {
  std::string out_dir;
  std::uint64_t seed = 0;
  int replicates = 1;
  std::string format = "edge-csv";
  std::vector<std::string> holdout;
  std::string holdout_file;
  ScenarioLevels levels;
  bool no_kink = false;
  bool use_default = true;
};

inline int cmd_simulate(const SimulateOpts& o, const std::string& command) {
  namespace fs = std::filesystem;
  const NetFormat fmt = parse_format(o.format);
  const ScenarioSpec spec = build_default_scenario(o.levels, !o.no_kink);
  const HoldoutSpec hspec = gather_holdout(o.holdout, o.holdout_file);
  const auto pi0 = interpolate_probs(spec);
  const Dims d{spec.V, spec.K, spec.n};
  const auto nets = sample_networks(pi0, d, spec.grid, o.seed, o.replicates);

  fs::create_directories(o.out_dir);
  if (!fs::is_directory(o.out_dir))
    throw data_error("cannot create output directory '" + o.out_dir + "'");

  std::vector<std::string> artifacts;
  for (int rep = 0; rep < o.replicates; ++rep) {
    char name[32];
    std::snprintf(name, sizeof(name), "rep%03d", rep + 1);
    const DynMultiNet* to_write = &nets[rep];
    DynMultiNet masked;
    if (!hspec.selectors.empty()) {
      HoldoutResult hr = apply_holdout(nets[rep], hspec);
      for (const auto& w : hr.warnings)
        std::fprintf(stderr, "simulate: %s (replicate %d)\n", w.c_str(), rep + 1);
      masked = std::move(hr.masked);
      to_write = &masked;
      const std::string truth_name = std::string("truth") + (name + 3) + ".csv";
      write_truth(hr.truth, (fs::path(o.out_dir) / truth_name).string());
      artifacts.push_back(truth_name);
    }
    const std::string data_name =
        fmt == NetFormat::EdgeCsv ? std::string(name) + ".csv" : std::string(name);
    write_network(*to_write, (fs::path(o.out_dir) / data_name).string(), fmt);
    if (fmt == NetFormat::EdgeCsv) artifacts.push_back(data_name);
  }
  write_cell_table((fs::path(o.out_dir) / "pi0.csv").string(), d, pi0, "prob");
  artifacts.push_back("pi0.csv");
  std::string holdout_text;
  for (const auto& s : o.holdout) holdout_text += (holdout_text.empty() ? "" : "; ") + s;
  write_scenario_manifest((fs::path(o.out_dir) / "scenario_manifest.txt").string(), spec,
                          o.seed, o.replicates, holdout_text);
  artifacts.push_back("scenario_manifest.txt");

  nlohmann::json mani;
  mani["command"] = command;
  mani["seed"] = o.seed;
  mani["config"] = {{"replicates", o.replicates},
                    {"format", o.format},
                    {"kink_rule", !o.no_kink},
                    {"p_within", o.levels.within},
                    {"p_between", o.levels.between},
                    {"p_moderate", o.levels.moderate},
                    {"p_elevated", o.levels.elevated},
                    {"p_suppressed", o.levels.suppressed},
                    {"holdout", holdout_text}};
  for (const auto& f : artifacts) {
    mani["paths"][f] = (fs::path(o.out_dir) / f).string();
    mani["hashes"][f] = hash_hex(fnv1a_file((fs::path(o.out_dir) / f).string()));
  }
  std::ofstream mout(fs::path(o.out_dir) / "manifest.json");
  if (!mout) throw data_error("cannot write manifest.json in '" + o.out_dir + "'");
  mout << mani.dump(2) << "\n";
  if (!mout) throw data_error("write failed for manifest.json in '" + o.out_dir + "'");
  return 0;
}

struct FitOpts {
  std::string data;
  std::string format = "edge-csv";
  std::string out_dir;
  FitConfig cfg;
  std::vector<std::string> holdout;
  std::string holdout_file;
  bool quiet = false;
};

inline int cmd_fit(const FitOpts& o, const std::string& command) {
  namespace fs = std::filesystem;
  DynMultiNet net = load_network(o.data, parse_format(o.format));
  const HoldoutSpec hspec = gather_holdout(o.holdout, o.holdout_file);
  std::vector<TruthCell> truth;
  if (!hspec.selectors.empty()) {
    HoldoutResult hr = apply_holdout(net, hspec);
    for (const auto& w : hr.warnings) std::fprintf(stderr, "fit: %s\n", w.c_str());
    net = std::move(hr.masked);
    truth = std::move(hr.truth);
  }
  o.cfg.validate(net.dims());

  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorChain chain =
      run_chain(net, o.cfg, o.quiet ? ProgressFn() : ProgressFn([](int s, int total) {
        progress_printer("fit", s, total);
      }));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(o.out_dir);
  std::vector<std::string> extra;
  if (!truth.empty()) {
    write_truth(truth, (fs::path(o.out_dir) / "truth.csv").string());
    extra.push_back("truth.csv");
  }
  save_chain(chain, o.out_dir, command, wall, {{"data", o.data}}, extra);
  return 0;
}

inline void write_prediction_report(const PosteriorChain& chain,
                                    const std::vector<CellRef>& cells,
                                    const std::map<long, int>& truth_by_cell,
                                    const std::string& out_path) {
  const auto scores = predict_edges(chain, cells);
  Report rep(out_path);
  rep.out() << "layer,time,u,v,score,label\n";
  for (size_t j = 0; j < cells.size(); ++j) {
    const auto& c = cells[j];
    const long flat = chain.dims.flat(c.k, c.i, pair_index(c.v, c.u));
    const auto it = truth_by_cell.find(flat);
    rep.out() << (c.k + 1) << ',' << (c.i + 1) << ',' << (c.u + 1) << ',' << (c.v + 1)
              << ',' << fmt_double(scores[j]) << ','
              << (it == truth_by_cell.end() ? std::string("NA") : std::to_string(it->second))
              << "\n";
  }
  rep.finish();
}

struct PredictOpts {
  std::string chain_dir;
  std::string out = "-";
  std::string cells = "missing";
  std::string truth_file;
};

inline int cmd_predict(const PredictOpts& o) {
  const PosteriorChain chain = load_chain(o.chain_dir);
  std::vector<CellRef> cells;
  if (o.cells == "missing") {
    cells = chain.missing;
  } else if (o.cells == "all") {
    const Dims d = chain.dims;
    for (int k = 0; k < d.K; ++k)
      for (int i = 0; i < d.n; ++i)
        for (int v = 1; v < d.V; ++v)
          for (int u = 0; u < v; ++u) cells.push_back({k, i, v, u});
  } else {
    throw config_error("--cells must be 'missing' or 'all'");
  }
  std::map<long, int> truth_by_cell;
  if (!o.truth_file.empty())
    for (const auto& t : load_truth(o.truth_file))
      truth_by_cell[chain.dims.flat(t.cell.k, t.cell.i, pair_index(t.cell.v, t.cell.u))] =
          t.value;
  write_prediction_report(chain, cells, truth_by_cell, o.out);
  return 0;
}

struct SummarizeOpts {
  std::string chain_dir;
  std::string functional = "density";
  int actor = 0;  // 1-based
  std::string groups_file;
  double level = 0.95;
  std::string out = "-";
};

inline int cmd_summarize(const SummarizeOpts& o) {
  const PosteriorChain chain = load_chain(o.chain_dir);
  Report rep(o.out);
  if (o.functional == "density" || o.functional == "degree") {
    TrajectorySummary ts;
    if (o.functional == "density") {
      ts = density_trajectory(chain, o.level);
    } else {
      if (o.actor < 1 || o.actor > chain.dims.V)
        throw config_error("--actor must lie in 1.." + std::to_string(chain.dims.V));
      ts = degree_trajectory(chain, o.actor - 1, o.level);
    }
    rep.out() << "layer,time,mean,lo95,hi95\n";
    for (int k = 0; k < chain.dims.K; ++k)
      for (int i = 0; i < chain.dims.n; ++i)
        rep.out() << (k + 1) << ',' << (i + 1) << ',' << fmt_double(ts.mean(k, i)) << ','
                  << fmt_double(ts.lo(k, i)) << ',' << fmt_double(ts.hi(k, i)) << "\n";
  } else if (o.functional == "group") {
    if (o.groups_file.empty())
      throw config_error("--groups is required for the group functional");
    const auto labels = load_group_labels(o.groups_file, chain.dims.V);
    const auto gt = group_contact_trajectory(chain, labels);
    rep.out() << "group1,group2,layer,time,mean\n";
    for (const auto& [key, m] : gt)
      for (int k = 0; k < chain.dims.K; ++k)
        for (int i = 0; i < chain.dims.n; ++i)
          rep.out() << key.first << ',' << key.second << ',' << (k + 1) << ',' << (i + 1)
                    << ',' << fmt_double(m(k, i)) << "\n";
  } else {
    throw config_error("--functional must be density, degree or group");
  }
  rep.finish();
  return 0;
}

struct DiagnoseOpts {
  std::string chain_dir;
  int cells = 50;
  std::string out = "-";
};

inline int cmd_diagnose(const DiagnoseOpts& o) {
  if (o.cells < 1) throw config_error("--cells must be >= 1");
  const PosteriorChain chain = load_chain(o.chain_dir);
  const auto monitors = monitor_cells(chain.dims, o.cells);
  const int S = chain.retained();
  Report rep(o.out);
  rep.out() << "layer,time,u,v,ess,flagged\n";
  std::vector<double> series(S);
  for (long cell : monitors) {
    for (int s = 0; s < S; ++s) series[s] = chain.at(s, cell);
    const EssResult r = ess(series);
    const Dims d = chain.dims;
    const int k = static_cast<int>(cell / (static_cast<long>(d.n) * d.pairs()));
    const int i = static_cast<int>((cell / d.pairs()) % d.n);
    const ActorPair p = pair_at(static_cast<int>(cell % d.pairs()));
    rep.out() << (k + 1) << ',' << (i + 1) << ',' << (p.u + 1) << ',' << (p.v + 1) << ','
              << fmt_double(r.value) << ',' << (r.flagged ? 1 : 0) << "\n";
  }
  rep.finish();
  return 0;
}

struct EvaluateOpts {
  std::string chain_dir;
  std::string truth_file;
  std::string pi0_file;
  std::string out = "-";
  std::string metrics_out;
};

inline int cmd_evaluate(const EvaluateOpts& o) {
  const PosteriorChain chain = load_chain(o.chain_dir);
  const auto truth = load_truth(o.truth_file);
  if (truth.empty()) throw data_error("truth file '" + o.truth_file + "' holds no cells");
  if (!o.pi0_file.empty() && o.metrics_out.empty())
    throw config_error("--pi0 requires --metrics-out for the concentration report");

  std::vector<CellRef> cells;
  cells.reserve(truth.size());
  std::vector<int> labels;
  labels.reserve(truth.size());
  for (const auto& t : truth) {
    cells.push_back(t.cell);
    labels.push_back(t.value);
  }
  const auto scores = predict_edges(chain, cells);

  // per-(layer, time) breakdown over the held-out cells
  std::map<std::pair<int, int>, std::vector<size_t>> by_time;
  for (size_t j = 0; j < cells.size(); ++j)
    by_time[{cells[j].k, cells[j].i}].push_back(j);
  Report rep(o.out);
  rep.out() << "layer,time,auc\n";
  for (const auto& [kt, idxs] : by_time) {
    std::vector<double> sc;
    std::vector<int> lb;
    for (size_t j : idxs) {
      sc.push_back(scores[j]);
      lb.push_back(labels[j]);
    }
    bool both = false;
    for (size_t j = 1; j < lb.size(); ++j)
      if (lb[j] != lb[0]) both = true;
    rep.out() << (kt.first + 1) << ',' << (kt.second + 1) << ','
              << (both ? fmt_double(auc(sc, lb)) : std::string("NA")) << "\n";
  }
  rep.finish();

  if (!o.metrics_out.empty()) {
    Report mrep(o.metrics_out);
    mrep.out() << "metric,value\n";
    mrep.out() << "auc_overall," << fmt_double(auc(scores, labels)) << "\n";
    if (!o.pi0_file.empty()) {
      const auto pi0 = load_cell_table(o.pi0_file, chain.dims, "prob");
      const Concentration c = concentration_metrics(chain, pi0);
      mrep.out() << "sq_bias," << fmt_double(c.sq_bias) << "\n";
      mrep.out() << "variance," << fmt_double(c.variance) << "\n";
      mrep.out() << "total," << fmt_double(c.total) << "\n";
    }
    mrep.finish();
  }
  return 0;
}

}  // namespace cli_detail

// Build the CLI11 application over the option structs; returns the parsed
// subcommand runner.
inline int run(const std::vector<std::string>& args) {
  using namespace cli_detail;
  CLI::App app{"Bayesian dynamic multilayer network models: simulate, fit, predict, "
               "summarize, diagnose, evaluate"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "Generate synthetic contact networks");
  s->add_flag("--default", sim.use_default,
              "use the built-in household scenario (the only generator)");
  s->add_option("--out", sim.out_dir, "output directory")->required();
  s->add_option("--seed", sim.seed, "master rng seed")->required();
  s->add_option("--replicates", sim.replicates, "independent datasets to draw")
      ->check(CLI::PositiveNumber);
  s->add_option("--format", sim.format, "edge-csv or dense-csv");
  s->add_option("--holdout", sim.holdout, "holdout selector (repeatable)");
  s->add_option("--holdout-file", sim.holdout_file, "file with one selector per line");
  s->add_option("--p-within", sim.levels.within, "within-block contact probability");
  s->add_option("--p-between", sim.levels.between, "between-block contact probability");
  s->add_option("--p-moderate", sim.levels.moderate, "caregiver contact probability");
  s->add_option("--p-elevated", sim.levels.elevated, "sick-to-caregiver probability");
  s->add_option("--p-suppressed", sim.levels.suppressed, "sick isolation probability");
  s->add_flag("--no-kink", sim.no_kink, "disable the rapid-variation override at t4/t6");

  FitOpts fit;
  bool fit_no_parallel = false;
  double fit_kappa = -1.0;
  auto* f = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
  f->add_option("--data", fit.data, "input network file/directory")->required();
  f->add_option("--format", fit.format, "edge-csv or dense-csv");
  f->add_option("--out", fit.out_dir, "chain output directory")->required();
  f->add_option("--seed", fit.cfg.seed, "master rng seed")->required();
  std::string fit_variant = "joint";
  f->add_option("--variant", fit_variant, "joint, collapsed or separate");
  f->add_option("--R", fit.cfg.R, "shared latent dimensions");
  auto* hopt = f->add_option("--H", fit.cfg.H, "layer-specific latent dimensions");
  f->add_option("--iters", fit.cfg.iterations, "total Gibbs sweeps");
  f->add_option("--burnin", fit.cfg.burn_in, "discarded initial sweeps");
  f->add_option("--thin", fit.cfg.thin, "keep every thin-th sweep");
  f->add_option("--kappa", fit_kappa, "set all three smoothness parameters");
  f->add_option("--kappa-mu", fit.cfg.kappa_mu, "baseline smoothness");
  f->add_option("--kappa-xbar", fit.cfg.kappa_xbar, "shared-coordinate smoothness");
  f->add_option("--kappa-x", fit.cfg.kappa_x, "layer-coordinate smoothness");
  f->add_option("--a1", fit.cfg.a1, "first shrinkage shape");
  f->add_option("--a2", fit.cfg.a2, "later shrinkage shape");
  f->add_flag("--no-parallel", fit_no_parallel, "update layers sequentially");
  f->add_option("--holdout", fit.holdout, "mask cells before fitting (repeatable)");
  f->add_option("--holdout-file", fit.holdout_file, "file with one selector per line");
  f->add_flag("--quiet", fit.quiet, "suppress progress output");

  PredictOpts pred;
  auto* p = app.add_subcommand("predict", "Score cells by posterior mean probability");
  p->add_option("--chain", pred.chain_dir, "chain directory")->required();
  p->add_option("--out", pred.out, "report path or - for stdout");
  p->add_option("--cells", pred.cells, "missing or all");
  p->add_option("--truth", pred.truth_file, "truth table for label column");

  SummarizeOpts summ;
  auto* m = app.add_subcommand("summarize", "Posterior trajectory summaries");
  m->add_option("--chain", summ.chain_dir, "chain directory")->required();
  m->add_option("--functional", summ.functional, "density, degree or group");
  m->add_option("--actor", summ.actor, "actor (1-based) for the degree functional");
  m->add_option("--groups", summ.groups_file, "label file, one label per actor line");
  m->add_option("--level", summ.level, "credible level for the bands");
  m->add_option("--out", summ.out, "report path or - for stdout");

  DiagnoseOpts diag;
  auto* g = app.add_subcommand("diagnose", "Effective sample sizes of monitored cells");
  g->add_option("--chain", diag.chain_dir, "chain directory")->required();
  g->add_option("--cells", diag.cells, "number of monitored cells");
  g->add_option("--out", diag.out, "report path or - for stdout");

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "Held-out AUC and concentration metrics");
  e->add_option("--chain", ev.chain_dir, "chain directory")->required();
  e->add_option("--truth", ev.truth_file, "held-out truth table")->required();
  e->add_option("--pi0", ev.pi0_file, "generating probabilities for concentration");
  e->add_option("--out", ev.out, "per-time AUC report path or - for stdout");
  e->add_option("--metrics-out", ev.metrics_out, "scalar metric report path");

  std::vector<const char*> argv;
  argv.push_back("dynmln");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string command = join_command(args);
    if (s->parsed()) return cmd_simulate(sim, command);
    if (f->parsed()) {
      fit.cfg.variant = parse_variant(fit_variant);
      if (hopt->count() == 0 && fit.cfg.variant != Variant::Joint) fit.cfg.H = 0;
      if (fit_kappa > 0.0) {
        if (f->count("--kappa-mu") == 0) fit.cfg.kappa_mu = fit_kappa;
        if (f->count("--kappa-xbar") == 0) fit.cfg.kappa_xbar = fit_kappa;
        if (f->count("--kappa-x") == 0) fit.cfg.kappa_x = fit_kappa;
      }
      fit.cfg.parallel_layers = !fit_no_parallel;
      return cmd_fit(fit, command);
    }
    if (p->parsed()) return cmd_predict(pred);
    if (m->parsed()) return cmd_summarize(summ);
    if (g->parsed()) return cmd_diagnose(diag);
    if (e->parsed()) return cmd_evaluate(ev);
    return 2;
  } catch (const config_error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const data_error& ex) {
    std::fprintf(stderr, "data error: %s\n", ex.what());
    return 3;
  } catch (const numeric_error& ex) {
    std::fprintf(stderr, "numerical failure: %s\n", ex.what());
    return 4;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "failure: %s\n", ex.what());
    return 4;
  }
}

inline int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace dynmln::cli
