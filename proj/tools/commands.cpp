#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "dapce/benchmarks.hpp"
#include "dapce/bytes.hpp"
#include "dapce/model.hpp"
#include "dapce/random.hpp"
#include "dapce/uq.hpp"
#include "dapce/version.hpp"

namespace dapce::cli {

namespace fs = std::filesystem;

namespace {

// Sample streams shared by every command so a given seed reproduces the same data.
constexpr std::uint64_t kPoolStream = 1;
constexpr std::uint64_t kLabeledStream = 2;
constexpr std::uint64_t kMcsStream = 4;
constexpr std::uint64_t kInitStream = 6;
constexpr std::uint64_t kFoldStream = 7;

std::uint64_t resolve_seed(const Json& config, const GlobalOptions& g) {
  if (g.seed) return *g.seed;
  const Json* v = find(config, "seed");
  if (!v) return 1;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
    config_type_error("$.seed", "a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

fs::path output_path(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out);
  return g.out / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

void write_bytes(const fs::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

Bytes read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const GlobalOptions& g, const std::string& command, const Json& config, std::uint64_t seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                    const OrderedJson& summary) {
  OrderedJson m;
  m["tool"] = "deep_apce";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["threads"] = g.threads;
  m["config"] = config;
  const std::string dumped = config.dump();
  m["config_hash"] = hex64(fnv1a64(reinterpret_cast<const std::uint8_t*>(dumped.data()), dumped.size()));
  OrderedJson in = OrderedJson::object();
  for (const auto& p : inputs) in[p.string()] = file_hash(p);
  m["inputs"] = in;
  OrderedJson out = OrderedJson::object();
  for (const auto& p : outputs) out[p.filename().string()] = file_hash(p);
  m["outputs"] = out;
  m["summary"] = summary;
  write_text(output_path(g, command + "_manifest.json"), m.dump(2) + "\n");
}

std::optional<Benchmark> benchmark_from(const Json& config) {
  const Json* name = find(config, "benchmark");
  if (!name) return std::nullopt;
  BenchmarkOptions opt;
  opt.rackwitz_n = static_cast<int>(get_int(config, "rackwitz_n", "$", 40, 1));
  const std::string n = as_string(*name, "$.benchmark");
  return at_location("$.benchmark", [&] { return get_benchmark(n, opt); });
}

struct SurrogateSettings {
  int order = 2;
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::Relu;
  TrainingConfig training;
  Index n_unlabeled = 100000;
  Index n_labeled = 40;
};

const std::vector<std::string> kNetworkKeys = {"hidden", "activation"};
const std::vector<std::string> kTrainingKeys = {"lambda", "epochs", "learning_rate", "decay", "decay_interval",
                                                "norm", "unlabeled_batch"};

SurrogateSettings settings_from(const Json& config, const std::optional<Benchmark>& bench) {
  SurrogateSettings s;
  if (bench) {
    s.order = bench->order;
    s.hidden = bench->hidden;
    s.activation = bench->activation;
    s.training = bench->training;
    s.n_unlabeled = bench->n_unlabeled;
    s.n_labeled = bench->n_labeled;
  }
  s.order = static_cast<int>(get_int(config, "order", "$", s.order, 0));
  const Json& net = object_at(config, "network", "$");
  check_keys(net, "$.network", kNetworkKeys);
  s.hidden = get_int_list(net, "hidden", "$.network", s.hidden);
  const std::string act = get_string(net, "activation", "$.network", to_string(s.activation));
  s.activation = at_location("$.network.activation", [&] { return activation_from_string(act); });

  const Json& tr = object_at(config, "training", "$");
  const std::string w = "$.training";
  check_keys(tr, w, kTrainingKeys);
  TrainingConfig& t = s.training;
  t.lambda = get_double(tr, "lambda", w, t.lambda);
  t.epochs = get_int(tr, "epochs", w, t.epochs, 0);
  t.schedule.initial = get_double(tr, "learning_rate", w, t.schedule.initial);
  t.schedule.decay = get_double(tr, "decay", w, t.schedule.decay);
  t.schedule.interval = get_int(tr, "decay_interval", w, t.schedule.interval, 1);
  const std::string norm = get_string(tr, "norm", w, to_string(t.norm));
  t.norm = at_location(w + ".norm", [&] { return loss_norm_from_string(norm); });
  t.unlabeled_batch = get_int(tr, "unlabeled_batch", w, t.unlabeled_batch, 0);
  at_location(w, [&] {
    t.validate();
    return 0;
  });
  return s;
}

OrderedJson cost_json(const CostTerms& c) {
  OrderedJson j;
  j["J"] = c.total;
  j["L_gd"] = c.gd;
  j["L_ce1"] = c.ce1;
  j["L_ce2M"] = c.ce2m;
  return j;
}

OrderedJson moments_json(const Moments& m, const std::optional<double>& p_fail) {
  OrderedJson j;
  j["mean"] = m.mean;
  j["std"] = m.std;
  j["skewness"] = m.skewness;
  j["kurtosis"] = m.kurtosis;
  if (p_fail) j["p_fail"] = *p_fail;
  return j;
}

void require_dim(Index got, int expected, const std::string& what) {
  require(got == expected, ErrorKind::InvalidInput,
          what + " has " + std::to_string(got) + " input columns, expected " + std::to_string(expected));
}

Matrix unlabeled_pool(const Json& data, const std::optional<RandomVector>& rv, Index n, std::uint64_t seed,
                      std::vector<fs::path>& inputs) {
  const std::string path = get_string(data, "unlabeled", "$.data", "");
  if (!path.empty()) {
    inputs.emplace_back(path);
    return read_csv(path, false).x;
  }
  if (!rv) fail(ErrorKind::Config, "$.data.unlabeled or a random vector ('benchmark' / 'random_vector') is required");
  return lhs_sample(*rv, n, stream_seed(seed, kPoolStream));
}

}  // namespace

OrderedJson cmd_train(const Json& config, const GlobalOptions& g) {
  check_keys(config, "$", {"benchmark", "rackwitz_n", "random_vector", "order", "network", "training", "data",
                           "output", "seed"});
  const std::uint64_t seed = resolve_seed(config, g);
  const auto bench = benchmark_from(config);
  const auto rv = random_vector_from(config);
  SurrogateSettings s = settings_from(config, bench);
  const Json& data = object_at(config, "data", "$");
  check_keys(data, "$.data", {"labeled", "unlabeled", "n_unlabeled"});
  const Json& output = object_at(config, "output", "$");
  check_keys(output, "$.output", {"model", "history"});
  s.n_unlabeled = get_int(data, "n_unlabeled", "$.data", s.n_unlabeled, 2);

  const std::string labeled_path = get_string(data, "labeled", "$.data", "");
  if (labeled_path.empty()) fail(ErrorKind::Config, "$.data.labeled: required");
  std::vector<fs::path> inputs = {labeled_path};
  const Table labeled = read_csv(labeled_path, true);
  const Matrix pool = unlabeled_pool(data, rv, s.n_unlabeled, seed, inputs);
  require_dim(pool.cols(), static_cast<int>(labeled.x.cols()), "unlabeled data");
  if (rv) require_dim(labeled.x.cols(), rv->dim(), "labeled data");

  DeepAPCEModel model = make_model(pool, s.order, s.hidden, s.activation, stream_seed(seed, kInitStream));
  s.training.seed = seed;
  const TrainingResult result = train(model, {labeled.x, *labeled.y}, pool, s.training);

  const fs::path model_path = output_path(g, get_string(output, "model", "$.output", "model.dapce"));
  const fs::path history_path = output_path(g, get_string(output, "history", "$.output", "history.csv"));
  write_bytes(model_path, save_model(model));
  {
    std::ofstream out(history_path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + history_path.string());
    write_history_csv(out, result.history);
  }
  OrderedJson summary;
  summary["model"] = model_path.string();
  summary["history"] = history_path.string();
  summary["labeled_rows"] = labeled.x.rows();
  summary["unlabeled_rows"] = pool.rows();
  summary["basis_size"] = model.size();
  summary["epochs"] = model.epoch;
  if (!result.history.empty()) summary["final"] = cost_json(result.history.back().cost);
  write_manifest(g, "train", config, seed, inputs, {model_path, history_path}, summary);
  return summary;
}

OrderedJson cmd_uq(const Json& config, const GlobalOptions& g) {
  check_keys(config, "$", {"model", "benchmark", "rackwitz_n", "random_vector", "mcs", "threshold", "direction",
                           "kde_points", "reference_data", "output", "seed"});
  const std::uint64_t seed = resolve_seed(config, g);
  const std::string model_file = get_string(config, "model", "$", "");
  if (model_file.empty()) fail(ErrorKind::Config, "$.model: required");
  const auto rv = random_vector_from(config);
  if (!rv) fail(ErrorKind::Config, "$: a random vector ('benchmark' or 'random_vector') is required");
  const auto bench = benchmark_from(config);
  const Index n = get_int(config, "mcs", "$", 1000000, 1000);
  const int kde_points = static_cast<int>(get_int(config, "kde_points", "$", 512, 0));
  std::optional<double> threshold;
  Direction direction = Direction::Below;
  if (bench) {
    threshold = bench->threshold;
    direction = bench->direction;
  }
  if (const Json* t = find(config, "threshold")) threshold = as_double(*t, "$.threshold");
  const std::string dir = get_string(config, "direction", "$", to_string(direction));
  direction = at_location("$.direction", [&] { return direction_from_string(dir); });
  const Json& output = object_at(config, "output", "$");
  check_keys(output, "$.output", {"report", "kde"});

  std::vector<fs::path> inputs = {model_file};
  const DeepAPCEModel model = load_model(read_bytes(model_file));
  require(model.dim() == rv->dim(), ErrorKind::InvalidInput,
          "model takes " + std::to_string(model.dim()) + " inputs but the random vector has " +
              std::to_string(rv->dim()));
  const Matrix x = mcs_sample(*rv, n, stream_seed(seed, kMcsStream), g.threads);
  const Vector y = model.predict(x, g.threads);
  const UQReport report = make_report(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                      threshold, direction, kde_points);

  std::optional<AccuracyReport> acc;
  const std::string ref = get_string(config, "reference_data", "$", "");
  if (!ref.empty()) {
    inputs.emplace_back(ref);
    const Table t = read_csv(ref, true);
    require_dim(t.x.cols(), model.dim(), "reference data");
    const Vector p = model.predict(t.x, g.threads);
    acc = accuracy(std::span<const double>(t.y->data(), static_cast<std::size_t>(t.y->size())),
                   std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }
  const fs::path report_path = output_path(g, get_string(output, "report", "$.output", "uq_report.json"));
  const std::string text = to_json(report, acc ? &*acc : nullptr);
  write_text(report_path, text + "\n");
  std::vector<fs::path> outputs = {report_path};
  if (report.kde) {
    const fs::path kde_path = output_path(g, get_string(output, "kde", "$.output", "uq_kde.csv"));
    std::ofstream out(kde_path, std::ios::binary);
    write_kde_csv(out, *report.kde);
    out.close();
    outputs.push_back(kde_path);
  }
  const OrderedJson summary = OrderedJson::parse(text);
  write_manifest(g, "uq", config, seed, inputs, outputs, summary);
  return summary;
}

namespace {

std::string cell(double v, int width = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.6g", width, v);
  return buf;
}

std::string percent(double v, int width = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.4f%%", width - 1, 100.0 * v);
  return buf;
}

std::string stats_line(const std::string& label, const StatsRow& r) {
  std::string s = label;
  s.resize(14, ' ');
  s += cell(r.moments.mean) + cell(r.moments.std) + cell(r.moments.skewness) + cell(r.moments.kurtosis);
  if (r.p_fail) s += cell(*r.p_fail);
  return s + "\n";
}

std::string error_line(const StatsRow& r, const StatsRow& ref) {
  std::string s = "  rel. error  ";
  s += percent(relative_error(r.moments.mean, ref.moments.mean)) + percent(relative_error(r.moments.std, ref.moments.std)) +
       percent(relative_error(r.moments.skewness, ref.moments.skewness)) +
       percent(relative_error(r.moments.kurtosis, ref.moments.kurtosis));
  if (r.p_fail && ref.p_fail && *ref.p_fail > 0) s += percent(relative_error(*r.p_fail, *ref.p_fail));
  return s + "\n";
}

OrderedJson row_json(const StatsRow& r, const StatsRow* ref) {
  OrderedJson j = moments_json(r.moments, r.p_fail);
  if (ref) {
    OrderedJson e;
    e["mean"] = relative_error(r.moments.mean, ref->moments.mean);
    e["std"] = relative_error(r.moments.std, ref->moments.std);
    e["skewness"] = relative_error(r.moments.skewness, ref->moments.skewness);
    e["kurtosis"] = relative_error(r.moments.kurtosis, ref->moments.kurtosis);
    if (r.p_fail && ref->p_fail && *ref->p_fail > 0) e["p_fail"] = relative_error(*r.p_fail, *ref->p_fail);
    j["relative_error"] = e;
  }
  return j;
}

OrderedJson accuracy_json(const AccuracyReport& a) {
  OrderedJson j;
  j["r2"] = a.r2;
  j["e"] = a.e;
  j["mae"] = a.mae;
  return j;
}

}  // namespace

OrderedJson cmd_benchmark(const std::string& name, const Json& overrides, const GlobalOptions& g) {
  check_keys(overrides, "$", {"rackwitz_n", "n_labeled", "n_unlabeled", "order", "network", "training", "n_reference",
                              "n_test", "n_residual", "classical", "seed"});
  const std::uint64_t seed = resolve_seed(overrides, g);
  BenchmarkOptions opt;
  opt.rackwitz_n = static_cast<int>(get_int(overrides, "rackwitz_n", "$", 40, 1));
  Benchmark bench = get_benchmark(name, opt);
  const SurrogateSettings s = settings_from(overrides, bench);
  bench.order = s.order;
  bench.hidden = s.hidden;
  bench.activation = s.activation;
  bench.training = s.training;
  bench.n_labeled = get_int(overrides, "n_labeled", "$", bench.n_labeled, 1);
  bench.n_unlabeled = get_int(overrides, "n_unlabeled", "$", bench.n_unlabeled, 2);
  RunOptions ro;
  ro.seed = seed;
  ro.threads = g.threads;
  ro.n_reference = get_int(overrides, "n_reference", "$", ro.n_reference, 1000);
  ro.n_test = get_int(overrides, "n_test", "$", ro.n_test, 10);
  ro.n_residual = get_int(overrides, "n_residual", "$", ro.n_residual, 2);
  ro.classical = get_bool(overrides, "classical", "$", true);

  const BenchmarkRun run = run_benchmark(bench, ro);

  std::string table = bench.description + "\n";
  table += "N_gd = " + std::to_string(bench.n_labeled) + ", N_ce = " + std::to_string(bench.n_unlabeled) +
           ", M = " + std::to_string(run.model.size()) + ", seed = " + std::to_string(seed) + "\n\n";
  std::string head = "method";
  head.resize(14, ' ');
  for (const char* c : {"mean", "std", "skewness", "kurtosis"}) head += std::string(12 - std::string(c).size(), ' ') + c;
  if (bench.threshold) head += "      p_fail";
  table += head + "\n";
  table += stats_line("MCS", run.reference);
  table += stats_line("Deep aPCE", run.deep) + error_line(run.deep, run.reference);
  if (run.classical) table += stats_line("aPC", *run.classical) + error_line(*run.classical, run.reference);
  if (bench.reference) {
    StatsRow published{bench.reference->moments, bench.reference->p_fail};
    table += stats_line("published", published);
  }
  table += "\nheld-out R2: Deep aPCE " + cell(run.deep_accuracy.r2, 0);
  if (run.classical_accuracy) table += ", aPC " + cell(run.classical_accuracy->r2, 0);
  table += "\nheld-out e:  Deep aPCE " + cell(run.deep_accuracy.e, 0);
  if (run.classical_accuracy) table += ", aPC " + cell(run.classical_accuracy->e, 0);
  table += "\n";

  OrderedJson j;
  j["benchmark"] = bench.name;
  j["n_labeled"] = bench.n_labeled;
  j["n_unlabeled"] = bench.n_unlabeled;
  j["basis_size"] = run.model.size();
  j["seed"] = seed;
  if (bench.threshold) {
    j["threshold"] = *bench.threshold;
    j["direction"] = to_string(bench.direction);
  }
  j["mcs"] = row_json(run.reference, nullptr);
  j["deep_apce"] = row_json(run.deep, &run.reference);
  if (run.classical) j["apc"] = row_json(*run.classical, &run.reference);
  if (bench.reference) j["published"] = moments_json(bench.reference->moments, bench.reference->p_fail);
  j["accuracy"]["deep_apce"] = accuracy_json(run.deep_accuracy);
  if (run.classical_accuracy) j["accuracy"]["apc"] = accuracy_json(*run.classical_accuracy);
  j["residuals"]["r_mean_over_std"] = run.residuals.r_mean / std::sqrt(run.residuals.variance);
  j["residuals"]["r_var_over_var"] = run.residuals.r_var / run.residuals.variance;
  j["excluded_reference_rows"] = run.excluded;
  j["train_seconds"] = run.train_seconds;
  if (!run.training.history.empty()) j["final_cost"] = cost_json(run.training.history.back().cost);

  const fs::path json_path = output_path(g, bench.name + "_benchmark.json");
  const fs::path table_path = output_path(g, bench.name + "_table.txt");
  const fs::path model_path = output_path(g, bench.name + "_model.dapce");
  const fs::path history_path = output_path(g, bench.name + "_history.csv");
  write_text(json_path, j.dump(2) + "\n");
  write_text(table_path, table);
  write_bytes(model_path, save_model(run.model));
  {
    std::ofstream out(history_path, std::ios::binary);
    write_history_csv(out, run.training.history);
  }
  Json effective = overrides;
  effective["benchmark"] = name;
  write_manifest(g, "benchmark", effective, seed, {}, {json_path, table_path, model_path, history_path}, j);
  j["table"] = table;
  return j;
}

OrderedJson cmd_crossval(const Json& config, const GlobalOptions& g) {
  check_keys(config, "$", {"benchmark", "rackwitz_n", "random_vector", "order", "network", "training", "data",
                           "n_labeled", "k", "seed"});
  const std::uint64_t seed = resolve_seed(config, g);
  const auto bench = benchmark_from(config);
  const auto rv = random_vector_from(config);
  SurrogateSettings s = settings_from(config, bench);
  const Json& data = object_at(config, "data", "$");
  check_keys(data, "$.data", {"labeled", "unlabeled", "n_unlabeled"});
  s.n_unlabeled = get_int(data, "n_unlabeled", "$.data", s.n_unlabeled, 2);
  s.n_labeled = get_int(config, "n_labeled", "$", s.n_labeled, 2);
  const int k = static_cast<int>(get_int(config, "k", "$", 5, 2));

  std::vector<fs::path> inputs;
  Matrix x;
  Vector y;
  const std::string labeled_path = get_string(data, "labeled", "$.data", "");
  if (!labeled_path.empty()) {
    inputs.emplace_back(labeled_path);
    Table t = read_csv(labeled_path, true);
    x = std::move(t.x);
    y = std::move(*t.y);
  } else {
    if (!bench) fail(ErrorKind::Config, "$.data.labeled: required unless 'benchmark' is given");
    const BenchmarkData d =
        evaluate_benchmark(*bench, lhs_sample(bench->inputs, s.n_labeled, stream_seed(seed, kLabeledStream)));
    x = d.x;
    y = d.y;
  }
  const Matrix pool = unlabeled_pool(data, rv, s.n_unlabeled, seed, inputs);
  require_dim(pool.cols(), static_cast<int>(x.cols()), "unlabeled data");
  TrainingConfig tc = s.training;
  tc.seed = seed;
  const FoldFitter fitter = [&](const Matrix& xt, const Vector& yt, const Matrix& xe, int) {
    DeepAPCEModel m = make_model(pool, s.order, s.hidden, s.activation, stream_seed(seed, kInitStream));
    train(m, {xt, yt}, pool, tc);
    return m.predict(xe, g.threads);
  };
  const CrossValidationResult cv = k_fold_cv(fitter, x, y, k, stream_seed(seed, kFoldStream));

  OrderedJson j;
  j["k"] = k;
  j["n"] = x.rows();
  OrderedJson folds = OrderedJson::array();
  std::string table = "fold      n_eval   MAE\n";
  std::string csv = "fold,n_eval,mae\n";
  for (std::size_t f = 0; f < cv.fold_mae.size(); ++f) {
    OrderedJson row;
    row["fold"] = f + 1;
    row["n_eval"] = cv.folds[f].size();
    row["mae"] = cv.fold_mae[f];
    folds.push_back(row);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-9zu %-8zu %.6g\n", f + 1, cv.folds[f].size(), cv.fold_mae[f]);
    table += buf;
    csv += std::to_string(f + 1) + "," + std::to_string(cv.folds[f].size()) + "," + format_double(cv.fold_mae[f]) + "\n";
  }
  table += "average            " + cell(cv.mean_mae, 0) + "\n";
  j["folds"] = folds;
  j["mean_mae"] = cv.mean_mae;
  const fs::path json_path = output_path(g, "crossval.json");
  const fs::path csv_path = output_path(g, "crossval.csv");
  write_text(json_path, j.dump(2) + "\n");
  write_text(csv_path, csv);
  write_manifest(g, "crossval", config, seed, inputs, {json_path, csv_path}, j);
  j["table"] = table;
  return j;
}

OrderedJson cmd_generate(const Json& config, const GlobalOptions& g) {
  check_keys(config, "$", {"benchmark", "rackwitz_n", "n", "method", "labeled", "output", "seed"});
  const std::uint64_t seed = resolve_seed(config, g);
  const auto bench = benchmark_from(config);
  if (!bench) fail(ErrorKind::Config, "$.benchmark: required");
  const Index n = get_int(config, "n", "$", bench->n_labeled, 1);
  const std::string method = get_string(config, "method", "$", "lhs");
  if (method != "lhs" && method != "mcs") fail(ErrorKind::Config, "$.method: expected 'lhs' or 'mcs'");
  const bool labeled = get_bool(config, "labeled", "$", true);
  const Matrix x = method == "lhs" ? lhs_sample(bench->inputs, n, stream_seed(seed, kLabeledStream))
                                   : mcs_sample(bench->inputs, n, stream_seed(seed, kMcsStream), g.threads);
  const fs::path path = output_path(g, get_string(config, "output", "$", bench->name + "_" + method + ".csv"));
  OrderedJson j;
  j["benchmark"] = bench->name;
  j["method"] = method;
  if (labeled) {
    const BenchmarkData d = evaluate_benchmark(*bench, x, g.threads);
    write_csv(path, d.x, &d.y);
    j["rows"] = d.x.rows();
    j["excluded"] = d.excluded;
  } else {
    write_csv(path, x);
    j["rows"] = x.rows();
    j["excluded"] = 0;
  }
  j["file"] = path.string();
  write_manifest(g, "generate", config, seed, {}, {path}, j);
  return j;
}

OrderedJson cmd_basis(const Json& config, const GlobalOptions& g) {
  check_keys(config, "$", {"benchmark", "rackwitz_n", "random_vector", "data", "n", "order", "mode", "output", "seed"});
  const std::uint64_t seed = resolve_seed(config, g);
  const auto rv = random_vector_from(config);
  const int order = static_cast<int>(get_int(config, "order", "$", 2, 0));
  const std::string mode_name = get_string(config, "mode", "$", "orthonormal");
  if (mode_name != "orthonormal" && mode_name != "monic") fail(ErrorKind::Config, "$.mode: expected 'orthonormal' or 'monic'");
  const BasisMode mode = mode_name == "monic" ? BasisMode::Monic : BasisMode::Orthonormal;
  std::vector<fs::path> inputs;
  Matrix samples;
  const std::string data = get_string(config, "data", "$", "");
  if (!data.empty()) {
    inputs.emplace_back(data);
    samples = read_csv(data, false).x;
  } else {
    if (!rv) fail(ErrorKind::Config, "$: 'data', 'benchmark' or 'random_vector' is required");
    samples = mcs_sample(*rv, get_int(config, "n", "$", 100000, 2), stream_seed(seed, kPoolStream), g.threads);
  }
  const auto [xi, norm] = normalize(samples);
  const MultiDimBasis basis = build_basis(xi, order, mode);

  OrderedJson j;
  j["dim"] = basis.dim();
  j["order"] = order;
  j["mode"] = mode_name;
  j["size"] = basis.size();
  j["samples"] = samples.rows();
  j["normalization"]["mean"] = std::vector<double>(norm.mean.data(), norm.mean.data() + norm.mean.size());
  j["normalization"]["std"] = std::vector<double>(norm.std.data(), norm.std.data() + norm.std.size());
  OrderedJson vars = OrderedJson::array();
  const UnivariateBasis& uni = basis.univariate();
  for (int k = 0; k < uni.dim(); ++k) {
    OrderedJson v;
    OrderedJson rows = OrderedJson::array();
    const Matrix& c = uni.coefficients[static_cast<std::size_t>(k)];
    for (Index r = 0; r < c.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(r + 1));
      for (Index q = 0; q <= r; ++q) row[static_cast<std::size_t>(q)] = c(r, q);
      rows.push_back(row);
    }
    v["coefficients"] = rows;
    const Vector& nv = uni.norms[static_cast<std::size_t>(k)];
    v["norms"] = std::vector<double>(nv.data(), nv.data() + nv.size());
    vars.push_back(v);
  }
  j["variables"] = vars;
  OrderedJson idx = OrderedJson::array();
  for (const auto& s : basis.indices().indices) idx.push_back(s);
  j["indices"] = idx;
  j["gram_deviation"] = gram_deviation(basis, xi);
  const fs::path path = output_path(g, get_string(config, "output", "$", "basis.json"));
  write_text(path, j.dump(2) + "\n");
  OrderedJson summary;
  summary["file"] = path.string();
  summary["size"] = basis.size();
  summary["gram_deviation"] = j["gram_deviation"];
  write_manifest(g, "basis", config, seed, inputs, {path}, summary);
  return j;
}

}  // namespace dapce::cli
