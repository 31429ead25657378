#include "fga/analysis.hpp"
#include "fga/dataset.hpp"
#include "fga/permutation.hpp"
#include "fga/persistence.hpp"
#include "fga/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fga;

namespace {

struct DataOptions {
  std::string data;
  std::string format = "libsvm";
  std::string target;
  std::string synthetic;
  Index n_train = 0;
  bool no_scale = false;
  std::uint64_t seed = 0;
};

struct ModelOptions {
  Index group_size = 4;
  std::string strategy = "loss-opt";
  Index perms = 50;
  double epsilon = 0.1;
  std::string c_grid;
  Index folds = 5;
  double eps_stop = 1e-4;
  int max_sweeps = 10;
  std::string preference = "correlated";
};

struct OutputOptions {
  std::string out;
  bool no_timestamp = false;
};

struct Prepared {
  Dataset train;
  Dataset test;
  std::string name;
};

// Seed streams so data, split, tuning and permutations never share draws.
enum Stream : std::uint64_t { kData = 1, kSplit = 2, kTune = 3, kPerms = 4 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " value '" + s + "'");
  }
}

Index parse_index(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v != std::floor(v) || v < 0) throw ConfigError(what + " must be a non-negative integer, got '" + s + "'");
  return static_cast<Index>(v);
}

struct SyntheticSpec {
  Index D = 25;
  int p = 2;
  Index m = 200;
};

SyntheticSpec parse_synthetic(const std::string& text) {
  SyntheticSpec spec;
  for (const std::string& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--synthetic expects KEY=VALUE pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "D")
      spec.D = parse_index(value, "D");
    else if (key == "p")
      spec.p = static_cast<int>(parse_index(value, "p"));
    else if (key == "m")
      spec.m = parse_index(value, "m");
    else
      throw ConfigError("unknown --synthetic key '" + key + "' (expected D, p, m)");
  }
  return spec;
}

std::vector<double> c_grid(const ModelOptions& o) {
  if (o.c_grid.empty()) return default_c_grid();
  std::vector<double> grid;
  for (const std::string& s : split_list(o.c_grid)) grid.push_back(parse_double(s, "--c-grid"));
  if (grid.empty()) throw ConfigError("--c-grid is empty");
  return grid;
}

PermutationPreference preference(const ModelOptions& o) {
  if (o.preference == "correlated") return PermutationPreference::CorrelatedEarly;
  if (o.preference == "decorrelated") return PermutationPreference::DecorrelatedEarly;
  throw ConfigError("--preference must be correlated or decorrelated");
}

void validate(const ModelOptions& o) {
  if (o.group_size < 2) throw ConfigError("--group-size must be at least 2");
  if (o.strategy != "layer" && o.strategy != "loss-opt" && o.strategy != "perm-search")
    throw ConfigError("--strategy must be layer, loss-opt or perm-search");
  if (o.perms < 1) throw ConfigError("--perms must be at least 1");
  if (o.folds < 2) throw ConfigError("--folds must be at least 2");
  preference(o);
  c_grid(o);
}

Prepared prepare(const DataOptions& o) {
  if (o.data.empty() == o.synthetic.empty()) throw ConfigError("give exactly one of --data or --synthetic");
  Prepared p;
  Dataset all;
  if (!o.synthetic.empty()) {
    const SyntheticSpec s = parse_synthetic(o.synthetic);
    all = gen_synthetic(s.D, s.m, s.p, derive_seed(o.seed, kData));
    p.name = "synthetic(D=" + std::to_string(s.D) + ",p=" + std::to_string(s.p) + ",m=" + std::to_string(s.m) + ")";
  } else {
    if (o.format == "libsvm")
      all = load_libsvm(o.data);
    else if (o.format == "csv") {
      if (o.target.empty()) throw ConfigError("--format csv needs --target");
      all = load_csv(o.data, o.target);
    } else
      throw ConfigError("--format must be libsvm or csv");
    p.name = fs::path(o.data).filename().string();
  }
  const Index m = all.num_samples();
  const Index n_train = o.n_train > 0 ? o.n_train : static_cast<Index>(std::llround(0.6 * static_cast<double>(m)));
  std::tie(p.train, p.test) = split(all, SplitSpec{n_train, derive_seed(o.seed, kSplit)});
  if (!o.no_scale) {
    const auto st = fit_standardizer(p.train);
    p.train = apply_standardizer(st, p.train);
    p.test = apply_standardizer(st, p.test);
  }
  return p;
}

TrainConfig train_config(const ModelOptions& o, const DataOptions& d, double C) {
  TrainConfig cfg;
  cfg.epsilon_stop = o.eps_stop;
  cfg.max_sweeps = o.max_sweeps;
  cfg.seed = d.seed;
  cfg.svr.C = C;
  cfg.svr.epsilon = o.epsilon;
  cfg.svr.scale = !d.no_scale;
  cfg.validate();
  return cfg;
}

SvrConfig svr_base(const ModelOptions& o, const DataOptions& d) {
  SvrConfig base;
  base.epsilon = o.epsilon;
  base.scale = !d.no_scale;
  return base;
}

Json config_json(const DataOptions& d, const ModelOptions* m, const std::string& command) {
  Json j{{"command", command},
         {"data", d.data},
         {"format", d.format},
         {"target", d.target},
         {"synthetic", d.synthetic},
         {"n_train", d.n_train},
         {"scale", !d.no_scale},
         {"seed", d.seed}};
  if (m != nullptr) {
    j["group_size"] = m->group_size;
    j["strategy"] = m->strategy;
    j["perms"] = m->perms;
    j["epsilon"] = m->epsilon;
    j["c_grid"] = c_grid(*m);
    j["folds"] = m->folds;
    j["eps_stop"] = m->eps_stop;
    j["max_sweeps"] = m->max_sweeps;
    j["preference"] = m->preference;
  }
  return j;
}

DocumentMetadata metadata(const Prepared& p, const DataOptions& d, Json config) {
  DocumentMetadata meta;
  meta.dataset = p.name;
  meta.seed = d.seed;
  meta.config = std::move(config);
  return meta;
}

fs::path out_dir(const OutputOptions& o) {
  if (o.out.empty()) return {};
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create output directory " + o.out);
  return o.out;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : rows_{std::move(header)} {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void print(std::ostream& os) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_)
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (width.size() <= c) width.push_back(0);
        width[c] = std::max(width[c], r[c].size());
      }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (std::size_t c = 0; c < rows_[i].size(); ++c)
        os << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << rows_[i][c];
      os << '\n';
      if (i == 0) {
        std::size_t total = 0;
        for (auto w : width) total += w + 2;
        os << std::string(total - 2, '-') << '\n';
      }
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double test_sse(const LinearModel<double>& m, const Dataset& ds) {
  return sse(predict_rows(m, ds.features), ds.targets);
}
double test_sse(const FeatureGraph<double>& g, const Dataset& ds) {
  return sse(evaluate_rows(g, ds.features), ds.targets);
}

void print_bound(const BoundReport& b) {
  std::cout << "\nbound: |V|=" << b.inputs.V << " r=" << num(b.inputs.r) << " Lambda=" << num(b.inputs.lambda)
            << " m=" << b.inputs.m << " delta=" << num(b.inputs.delta) << " eps=" << num(b.inputs.eps_loss) << '\n'
            << "  R_FGA - R_SVM (test estimate) = " << num(b.lhs_diff) << " <= " << num(b.rhs_diff) << " : "
            << (b.satisfied ? "satisfied" : "NOT satisfied") << " (confidence " << num(b.confidence_diff) << ")\n"
            << "  R_FGA (test estimate) = " << num(b.test_loss_fga) << " <= " << num(b.rhs_abs) << " : "
            << (b.abs_satisfied ? "satisfied" : "NOT satisfied") << " (confidence " << num(b.confidence_abs) << ")\n";
  if (!b.satisfied) std::cout << "warning: the probabilistic bound was not satisfied on this run\n";
}

// ---------------------------------------------------------------------------

int cmd_train(const DataOptions& d, const ModelOptions& o, const OutputOptions& out, double delta) {
  validate(o);
  const Prepared p = prepare(d);
  const fs::path dir = out_dir(out);
  const SvmBaseline<double> svm = svm_baseline(p.train, c_grid(o), o.folds, derive_seed(d.seed, kTune), svr_base(o, d));
  const TrainConfig cfg = train_config(o, d, svm.C);
  const Index M = o.group_size;
  const Permutation heuristic = heuristic_permutation(p.train, M, preference(o));

  Table table({"Dataset", "Method", "Kernel", "N_train", "N_test", "D", "train SSE", "test SSE"});
  auto row = [&](const std::string& method, double tr, double te, bool first) {
    table.add({first ? p.name : "", method, first ? "Linear" : "", first ? std::to_string(p.train.num_samples()) : "",
               first ? std::to_string(p.test.num_samples()) : "", first ? std::to_string(p.train.num_features()) : "",
               num(tr, 7), num(te, 7)});
  };
  row("Tuned simple SVM", sse(predict_rows(svm.model, p.train.features), p.train.targets), test_sse(svm.model, p.test), true);

  FeatureGraph<double> graph;
  TrainReport report;
  Json extra = Json::object();
  if (o.strategy == "layer") {
    auto r = train_layer_based(p.train, M, cfg, heuristic);
    graph = std::move(r.graph);
    report = std::move(r.report);
    row("Layer-based FGA-SVM", report.final_error, test_sse(graph, p.test), false);
  } else {
    auto r = train_loss_optimized(p.train, svm.model, M, heuristic, cfg);
    row("Loss-optimised FGA-SVM", r.report.final_error, test_sse(r.graph, p.test), false);
    if (o.strategy == "loss-opt") {
      graph = std::move(r.graph);
      report = std::move(r.report);
    } else {
      auto ps = random_perm_search(p.train, svm.model, M, cfg, o.perms, derive_seed(d.seed, kPerms), &p.test, preference(o));
      row("Loss-opt. max " + std::to_string(o.perms) + " perms", ps.best_train_sse, *ps.best_test_sse, false);
      extra["best_trial"] = ps.best_trial;
      extra["trials"] = to_json(ps.trials);
      extra["trace"] = to_json(improvement_trace(ps, p.train, M));
      graph = std::move(ps.best_graph);
      report = std::move(ps.best_report);
    }
  }
  std::cout << "C = " << num(svm.C) << ", M = " << M << ", L = " << graph.num_layers() << ", nodes = " << graph.node_count()
            << ", retrained = " << report.retrained_count << ", sweeps = " << report.sweeps_run << "\n\n";
  table.print(std::cout);
  const BoundReport bound = bound_report(svm.model, graph, p.train, p.test, delta, o.epsilon);
  print_bound(bound);

  if (!dir.empty()) {
    const SaveOptions so{!out.no_timestamp};
    Json cfg_json = config_json(d, &o, "train");
    cfg_json["delta"] = delta;
    const DocumentMetadata meta = metadata(p, d, cfg_json);
    save(make_document(svm.model, meta), dir / "svm.json", so);
    save(make_document(graph, meta), dir / "fga.json", so);
    Json payload{{"svm_C", svm.C},
                 {"cv_errors", svm.cv_errors},
                 {"svm_train_sse", sse(predict_rows(svm.model, p.train.features), p.train.targets)},
                 {"svm_test_sse", test_sse(svm.model, p.test)},
                 {"fga_train_sse", report.final_error},
                 {"fga_test_sse", test_sse(graph, p.test)},
                 {"train", to_json(report)},
                 {"bound", to_json(bound)}};
    for (auto& [k, v] : extra.items()) payload[k] = v;
    write_json_atomic(report_document("train", std::move(payload), meta, so), dir / "train_report.json");
    std::cout << "\nwrote " << (dir / "svm.json").string() << ", " << (dir / "fga.json").string() << ", "
              << (dir / "train_report.json").string() << '\n';
  }
  return 0;
}

int cmd_bound(const DataOptions& d, const std::string& svm_path, const std::string& fga_path, double delta,
              double epsilon, const OutputOptions& out) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("--delta must lie in (0, 1)");
  const LinearModel<double> svm = svm_from_document(load(svm_path));
  const FeatureGraph<double> graph = graph_from_document(load(fga_path));
  const Prepared p = prepare(d);
  const BoundReport b = bound_report(svm, graph, p.train, p.test, delta, epsilon);
  std::cout << "dataset " << p.name << ", N_train " << p.train.num_samples() << ", N_test " << p.test.num_samples() << '\n';
  print_bound(b);
  const fs::path dir = out_dir(out);
  if (!dir.empty()) {
    Json cfg = config_json(d, nullptr, "bound");
    cfg["svm"] = svm_path;
    cfg["fga"] = fga_path;
    cfg["delta"] = delta;
    cfg["epsilon"] = epsilon;
    write_json_atomic(report_document("bound", to_json(b), metadata(p, d, cfg), SaveOptions{!out.no_timestamp}),
                      dir / "bound_report.json");
  }
  return 0;
}

int cmd_stability(const DataOptions& d, const ModelOptions& o, const std::string& group_sizes, const OutputOptions& out) {
  validate(o);
  const Prepared p = prepare(d);
  const SvmBaseline<double> svm = svm_baseline(p.train, c_grid(o), o.folds, derive_seed(d.seed, kTune), svr_base(o, d));
  const TrainConfig cfg = train_config(o, d, svm.C);
  const Trainer<double> svm_trainer = [&](const Dataset& ds) { return svr_fit<double>(ds.features, ds.targets, cfg.svr); };
  const StabilityRun svm_run = loo_stability(p.train, svm_trainer, p.test);

  Table table({"L", "M", "mean |e - e_i|", "max |e - e_i|", "ratio", "predicted beta"});
  Json rows = Json::array();
  for (const std::string& s : split_list(group_sizes)) {
    const Index M = parse_index(s, "--group-sizes");
    const Permutation perm = identity_permutation(p.train.num_features());
    const Trainer<double> fga_trainer = [&](const Dataset& ds) {
      return flatten(train_loss_optimized(ds, svr_fit<double>(ds.features, ds.targets, cfg.svr), M, perm, cfg).graph);
    };
    StabilityReport rep;
    rep.svm = svm_run;
    rep.fga = loo_stability(p.train, fga_trainer, p.test);
    rep.ratio = svm_run.mean_norm > 0 ? rep.fga.mean_norm / svm_run.mean_norm : 0.0;
    const auto full = train_loss_optimized(p.train, svm.model, M, perm, cfg).graph;
    std::map<Index, double> betas;
    for (const auto& layer : full.layers)
      for (const auto& nd : layer)
        if (nd.retrained) betas[full.node_id(nd.layer, nd.position)] = svm_run.mean_norm;
    rep.predicted_beta = predicted_beta(full, betas, svm_run.mean_norm);
    const Index L = build_layout(p.train.num_features(), M).num_layers();
    table.add({std::to_string(L), std::to_string(M), num(rep.fga.mean_norm), num(rep.fga.max_norm), num(rep.ratio),
               num(rep.predicted_beta)});
    Json r = to_json(rep);
    r["L"] = L;
    r["M"] = M;
    rows.push_back(std::move(r));
  }
  table.add({"1", "simple SVM", num(svm_run.mean_norm), num(svm_run.max_norm), "1", num(svm_run.mean_norm)});
  std::cout << "leave-one-out stability on " << p.name << " (m = " << p.train.num_samples() << ", probe rows = "
            << p.test.num_samples() << ", C = " << num(svm.C) << ")\n\n";
  table.print(std::cout);

  const fs::path dir = out_dir(out);
  if (!dir.empty()) {
    Json cfg_json = config_json(d, &o, "stability");
    cfg_json["group_sizes"] = group_sizes;
    write_json_atomic(report_document("stability", Json{{"svm", to_json(svm_run)}, {"fga", std::move(rows)}},
                                      metadata(p, d, cfg_json), SaveOptions{!out.no_timestamp}),
                      dir / "stability_report.json");
  }
  return 0;
}

int cmd_permute(const DataOptions& d, const ModelOptions& o, double alpha, const OutputOptions& out) {
  validate(o);
  const Prepared p = prepare(d);
  const SvmBaseline<double> svm = svm_baseline(p.train, c_grid(o), o.folds, derive_seed(d.seed, kTune), svr_base(o, d));
  const TrainConfig cfg = train_config(o, d, svm.C);
  const auto ps = random_perm_search(p.train, svm.model, o.group_size, cfg, o.perms, derive_seed(d.seed, kPerms), &p.test,
                                     preference(o));
  const auto trace = improvement_trace(ps, p.train, o.group_size, alpha);
  Table table({"#", "trial", "best error", "sig. pairs", "sum p", "mean p", "mean |r|"});
  for (const auto& r : trace)
    table.add({std::to_string(r.improvement), std::to_string(r.trial), num(r.best_error, 7), std::to_string(r.sig_count),
               num(r.sig_p_sum, 4), num(r.sig_p_mean, 4), num(r.sig_r_mean, 4)});
  std::cout << "permutation search on " << p.name << ": " << o.perms << " trials, M = " << o.group_size
            << ", alpha = " << alpha << ", best trial " << ps.best_trial << ", test SSE " << num(*ps.best_test_sse, 7)
            << "\n\n";
  table.print(std::cout);
  const fs::path dir = out_dir(out);
  if (!dir.empty()) {
    Json cfg_json = config_json(d, &o, "permute");
    cfg_json["alpha"] = alpha;
    Json payload{{"best_trial", ps.best_trial},
                 {"best_train_sse", ps.best_train_sse},
                 {"best_test_sse", *ps.best_test_sse},
                 {"trace", to_json(trace)},
                 {"trials", to_json(ps.trials)}};
    write_json_atomic(report_document("permute", std::move(payload), metadata(p, d, cfg_json), SaveOptions{!out.no_timestamp}),
                      dir / "permute_report.json");
  }
  return 0;
}

int cmd_bench(const DataOptions& d, const ModelOptions& o, const OutputOptions& out, double delta) {
  validate(o);
  const Prepared p = prepare(d);
  const SvmBaseline<double> svm = svm_baseline(p.train, c_grid(o), o.folds, derive_seed(d.seed, kTune), svr_base(o, d));
  const TrainConfig cfg = train_config(o, d, svm.C);
  const Index M = o.group_size;
  const LinearModel<double> lr = linreg_baseline(p.train);
  const auto one = train_loss_optimized(p.train, svm.model, M, heuristic_permutation(p.train, M, preference(o)), cfg);
  const auto ps = random_perm_search(p.train, svm.model, M, cfg, o.perms, derive_seed(d.seed, kPerms), &p.test, preference(o));

  Table table({"Model", "train SSE", "test SSE"});
  Json rows = Json::array();
  auto add = [&](const std::string& name, double tr, double te) {
    table.add({name, num(tr, 7), num(te, 7)});
    rows.push_back(Json{{"model", name}, {"train_sse", tr}, {"test_sse", te}});
  };
  add("LR", sse(predict_rows(lr, p.train.features), p.train.targets), test_sse(lr, p.test));
  add("SVM", sse(predict_rows(svm.model, p.train.features), p.train.targets), test_sse(svm.model, p.test));
  add("FGA-SVM L-opt., one perm.", one.report.final_error, test_sse(one.graph, p.test));
  add("FGA-SVM L-opt., optimised perm.", ps.best_train_sse, *ps.best_test_sse);
  std::cout << p.name << ": N_train " << p.train.num_samples() << ", N_test " << p.test.num_samples() << ", C = " << num(svm.C)
            << ", M = " << M << "\n\n";
  table.print(std::cout);
  const BoundReport bound = bound_report(svm.model, ps.best_graph, p.train, p.test, delta, o.epsilon);
  print_bound(bound);

  const fs::path dir = out_dir(out);
  if (!dir.empty()) {
    {
      std::ofstream csv(dir / "plot.csv.tmp");
      csv << std::setprecision(17) << "actual,svm_pred,fga_pred\n";
      const Vector<double> sp = predict_rows(svm.model, p.test.features);
      const Vector<double> fp = evaluate_rows(ps.best_graph, p.test.features);
      for (Index i = 0; i < p.test.num_samples(); ++i) csv << p.test.targets(i) << ',' << sp(i) << ',' << fp(i) << '\n';
      if (!csv) throw IoError("failed writing plot.csv");
    }
    fs::rename(dir / "plot.csv.tmp", dir / "plot.csv");
    Json cfg_json = config_json(d, &o, "bench");
    cfg_json["delta"] = delta;
    write_json_atomic(report_document("bench", Json{{"rows", std::move(rows)}, {"svm_C", svm.C}, {"bound", to_json(bound)}},
                                      metadata(p, d, cfg_json), SaveOptions{!out.no_timestamp}),
                      dir / "bench_report.json");
    std::cout << "\nwrote " << (dir / "plot.csv").string() << " and " << (dir / "bench_report.json").string() << '\n';
  }
  return 0;
}

int cmd_complexity(const std::string& dims_text, Index m, Index group_size, int repeats, std::uint64_t seed,
                   const OutputOptions& out) {
  std::vector<Index> dims;
  for (const std::string& s : split_list(dims_text)) dims.push_back(parse_index(s, "--dims"));
  const ComplexityReport rep = complexity_probe(dims, m, group_size, repeats, seed);
  Table table({"D", "seconds", "log residual"});
  for (std::size_t i = 0; i < dims.size(); ++i)
    table.add({std::to_string(dims[i]), num(rep.seconds[i]), num(rep.fit.residuals[i], 3)});
  table.print(std::cout);
  std::cout << "\nlog-log slope " << num(rep.fit.slope, 4) << " (max |residual| " << num(rep.fit.max_abs_residual, 3) << ")\n";
  const fs::path dir = out_dir(out);
  if (!dir.empty()) {
    DocumentMetadata meta;
    meta.dataset = "synthetic";
    meta.seed = seed;
    meta.config = Json{{"command", "complexity"}, {"dims", dims}, {"m", m}, {"group_size", group_size}, {"repeats", repeats}};
    write_json_atomic(report_document("complexity", to_json(rep), meta, SaveOptions{!out.no_timestamp}),
                      dir / "complexity_report.json");
  }
  return 0;
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data, "dataset file");
  cmd->add_option("--format", d.format, "libsvm or csv")->capture_default_str();
  cmd->add_option("--target", d.target, "target column for CSV input");
  cmd->add_option("--synthetic", d.synthetic, "generate y = (sum x)^p, e.g. D=25,p=2,m=200");
  cmd->add_option("--n-train", d.n_train, "training rows (default 60%)");
  cmd->add_flag("--no-scale", d.no_scale, "skip feature and per-fit standardisation");
  cmd->add_option("--seed", d.seed, "master seed")->capture_default_str();
}

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--group-size", o.group_size, "features per leaf, M")->capture_default_str();
  cmd->add_option("--strategy", o.strategy, "layer, loss-opt or perm-search")->capture_default_str();
  cmd->add_option("--perms", o.perms, "permutation trials")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "epsilon-insensitive tube half-width")->capture_default_str();
  cmd->add_option("--c-grid", o.c_grid, "comma-separated C values (default 2^-2..2^5)");
  cmd->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
  cmd->add_option("--eps-stop", o.eps_stop, "relative sweep improvement to continue")->capture_default_str();
  cmd->add_option("--max-sweeps", o.max_sweeps, "sweep cap")->capture_default_str();
  cmd->add_option("--preference", o.preference, "heuristic permutation: correlated or decorrelated")->capture_default_str();
}

void add_output_options(CLI::App* cmd, OutputOptions& out) {
  cmd->add_option("--out", out.out, "directory for model and report files");
  cmd->add_flag("--no-timestamp", out.no_timestamp, "omit timestamps so reruns are byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature graph architectures over linear support vector regression"};
  app.require_subcommand(1);

  DataOptions d;
  ModelOptions o;
  OutputOptions out;
  double delta = 0.05;
  double alpha = 0.05;
  std::string svm_path, fga_path, group_sizes = "2,4,8,16,32", dims = "64,128,256,512";
  Index probe_m = 50;
  int repeats = 3;

  auto* train = app.add_subcommand("train", "tune the SVM, train an FGA and report errors and the bound");
  add_data_options(train, d);
  add_model_options(train, o);
  add_output_options(train, out);
  train->add_option("--delta", delta, "bound confidence parameter")->capture_default_str();

  auto* bound = app.add_subcommand("bound", "evaluate the generalisation bound for a saved SVM and FGA");
  add_data_options(bound, d);
  add_output_options(bound, out);
  bound->add_option("--svm", svm_path, "saved SVM document")->required();
  bound->add_option("--fga", fga_path, "saved FGA document")->required();
  bound->add_option("--delta", delta, "bound confidence parameter")->capture_default_str();
  bound->add_option("--epsilon", o.epsilon, "epsilon of the loss")->capture_default_str();

  auto* stability = app.add_subcommand("stability", "leave-one-out stability of the SVM and FGA");
  add_data_options(stability, d);
  add_model_options(stability, o);
  add_output_options(stability, out);
  stability->add_option("--group-sizes", group_sizes, "comma-separated M values")->capture_default_str();

  auto* permute = app.add_subcommand("permute", "random permutation search with the improvement trace");
  add_data_options(permute, d);
  add_model_options(permute, o);
  add_output_options(permute, out);
  permute->add_option("--alpha", alpha, "significance level for correlated pairs")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "LR, SVM and FGA comparison with plot data");
  add_data_options(bench, d);
  add_model_options(bench, o);
  add_output_options(bench, out);
  bench->add_option("--delta", delta, "bound confidence parameter")->capture_default_str();

  auto* complexity = app.add_subcommand("complexity", "time one loss-optimised sweep against D");
  add_output_options(complexity, out);
  complexity->add_option("--dims", dims, "comma-separated feature counts")->capture_default_str();
  complexity->add_option("--m", probe_m, "rows per synthetic dataset")->capture_default_str();
  complexity->add_option("--group-size", o.group_size, "features per leaf, M")->capture_default_str();
  complexity->add_option("--repeats", repeats, "best-of repeats per point")->capture_default_str();
  complexity->add_option("--seed", d.seed, "master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(d, o, out, delta);
    if (*bound) return cmd_bound(d, svm_path, fga_path, delta, o.epsilon, out);
    if (*stability) return cmd_stability(d, o, group_sizes, out);
    if (*permute) return cmd_permute(d, o, alpha, out);
    if (*bench) {
      if (d.data.empty() && d.synthetic.empty()) d.synthetic = "D=25,p=2,m=200";
      if (bench->count("--group-size") == 0) o.group_size = 5;
      return cmd_bench(d, o, out, delta);
    }
    if (*complexity) return cmd_complexity(dims, probe_m, o.group_size, repeats, d.seed, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
