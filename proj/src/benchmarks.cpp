#include "dapce/benchmarks.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "dapce/errors.hpp"
#include "dapce/parallel.hpp"

namespace dapce {

namespace {

constexpr Index kEvalBlock = 65536;

TrainingConfig recommended(double lambda, std::int64_t epochs, double decay, int interval, Index batch) {
  TrainingConfig c;
  c.lambda = lambda;
  c.epochs = epochs;
  c.schedule = {0.01, decay, interval};
  c.norm = LossNorm::L1;
  c.unlabeled_batch = batch;
  return c;
}

Benchmark make_fortini() {
  Benchmark b;
  b.name = "fortini";
  b.description = "Fortini's clutch contact angle (rad), four normal inputs";
  b.inputs.marginals = {Marginal::normal(55.29, 0.0793), Marginal::normal(22.86, 0.0043),
                        Marginal::normal(22.86, 0.0043), Marginal::normal(101.6, 0.0793)};
  b.response = fortini_clutch;
  b.threshold = std::numbers::pi / 30.0;
  b.direction = Direction::Below;
  b.reference = ReferenceStats{{0.1219, 0.0118, -0.3156, 3.2763}, 0.07881, 4, "MCS with 1e6 samples"};
  b.hidden = {64, 128, 256, 128, 64};
  b.training = recommended(1.0, 7000, 0.8, 300, 1024);
  b.n_labeled = 40;
  b.n_unlabeled = 100000;
  return b;
}

Benchmark make_cantilever() {
  Benchmark b;
  b.name = "cantilever";
  b.description = "Elastic cantilever beam displacement limit state (mm), q F1 F2 E I L dlim";
  b.inputs.marginals = {Marginal::from_cov(Family::Gumbel, 50.0, 0.15),  Marginal::from_cov(Family::Gumbel, 7e4, 0.18),
                        Marginal::from_cov(Family::Gumbel, 1e5, 0.20),   Marginal::from_cov(Family::Lognormal, 2.6e5, 0.12),
                        Marginal::from_cov(Family::Normal, 5.3594e8, 0.10), Marginal::from_cov(Family::Normal, 3e3, 0.05),
                        Marginal::from_cov(Family::Lognormal, 30.0, 0.30)};
  b.response = cantilever_beam;
  b.threshold = 0.0;
  b.direction = Direction::Below;
  b.reference = ReferenceStats{{18.0946, 9.5305, 0.7507, 4.2713}, std::nullopt, 4, "MCS with 1e6 samples"};
  b.hidden = {64, 128, 256, 256, 256};
  b.training = recommended(1.0, 7000, 0.7, 300, 1024);
  b.n_labeled = 90;
  b.n_unlabeled = 100000;
  return b;
}

Benchmark make_rackwitz(int n) {
  require(n >= 1, ErrorKind::Config, "rackwitz dimension must be at least 1");
  Benchmark b;
  b.name = "rackwitz";
  b.description = "Linear limit state n + 3 sigma sqrt(n) - sum x_i with lognormal(1, 0.2) inputs, n = " + std::to_string(n);
  for (int i = 0; i < n; ++i) b.inputs.marginals.push_back(Marginal::lognormal(1.0, 0.2));
  b.response = [](std::span<const double> x) { return rackwitz(x, 0.2); };
  b.threshold = 0.0;
  b.direction = Direction::Below;
  if (n == 40) b.reference = ReferenceStats{{3.7944, 1.2634, -0.0964, 3.0077}, std::nullopt, 4, "MCS with 1e6 samples"};
  if (n == 100) b.reference = ReferenceStats{{6.0000, 2.0036, -0.0642, 3.0104}, 1.81e-3, 4, "MCS with 1e6 samples"};
  b.hidden = {100, 600, 800, 900, 900};
  b.training = recommended(1.0, 2000, 0.6, 200, 1024);
  b.n_labeled = 2000;
  b.n_unlabeled = 50000;
  return b;
}

Benchmark make_synthetic() {
  Benchmark b;
  b.name = "multimodal";
  b.description = "Synthetic smooth response over two bimodal Gaussian-mixture inputs and two normal inputs";
  b.inputs.marginals = {Marginal::mixture({{0.5, -1.0, 0.35}, {0.5, 1.2, 0.4}}),
                        Marginal::mixture({{0.35, -0.8, 0.3}, {0.65, 0.9, 0.35}}), Marginal::normal(1.0, 0.1),
                        Marginal::normal(0.5, 0.05)};
  b.response = synthetic_multimodal;
  b.hidden = {64, 128, 256, 128, 64};
  b.activation = Activation::Gelu;
  b.training = recommended(100.0, 7000, 0.8, 300, 1024);
  b.n_labeled = 60;
  b.n_unlabeled = 100000;
  return b;
}

}  // namespace

double fortini_clutch(std::span<const double> x) {
  require(x.size() == 4, ErrorKind::InvalidInput, "fortini_clutch takes 4 inputs");
  const double half = 0.5 * (x[1] + x[2]);
  const double arg = (x[0] + half) / (x[3] - half);
  if (!(arg >= -1.0 && arg <= 1.0)) {
    fail(ErrorKind::DomainError, "arccos argument " + std::to_string(arg) + " is outside [-1, 1]");
  }
  return std::acos(arg);
}

double cantilever_beam(std::span<const double> x) {
  require(x.size() == 7, ErrorKind::InvalidInput, "cantilever_beam takes 7 inputs");
  const double q = x[0], f1 = x[1], f2 = x[2], e = x[3], i = x[4], l = x[5], dlim = x[6];
  const double ei = e * i;
  if (!(ei > 0.0)) fail(ErrorKind::DomainError, "cantilever_beam needs E*I > 0");
  const double l3 = l * l * l;
  return dlim - (q * l3 * l / (8.0 * ei) + 5.0 * f1 * l3 / (48.0 * ei) + f2 * l3 / (3.0 * ei));
}

double rackwitz(std::span<const double> x, double sigma) {
  require(!x.empty(), ErrorKind::InvalidInput, "rackwitz needs at least one input");
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  return n + 3.0 * sigma * std::sqrt(n) - sum;
}

double synthetic_multimodal(std::span<const double> x) {
  require(x.size() == 4, ErrorKind::InvalidInput, "synthetic_multimodal takes 4 inputs");
  return 4.5 + 0.6 * x[0] - 0.35 * x[1] * x[1] + 0.25 * x[0] * x[1] + 0.8 * (x[2] - 1.0) +
         0.3 * std::sin(1.5 * x[0] + x[3]) * x[2];
}

std::vector<std::string> benchmark_names() { return {"fortini", "cantilever", "rackwitz", "multimodal"}; }

Benchmark get_benchmark(const std::string& name, const BenchmarkOptions& options) {
  if (name == "fortini") return make_fortini();
  if (name == "cantilever") return make_cantilever();
  if (name == "rackwitz") return make_rackwitz(options.rackwitz_n);
  if (name == "multimodal") return make_synthetic();
  std::string list;
  for (const auto& n : benchmark_names()) list += (list.empty() ? "" : ", ") + n;
  fail(ErrorKind::Config, "unknown benchmark '" + name + "'; available: " + list);
}

BenchmarkData evaluate_benchmark(const Benchmark& bench, const Matrix& x, int threads) {
  require(x.cols() == bench.inputs.dim(), ErrorKind::InvalidInput,
          "benchmark " + bench.name + " expects " + std::to_string(bench.inputs.dim()) + " inputs");
  const Index n = x.rows();
  Vector y(n);
  std::vector<char> ok(static_cast<std::size_t>(n), 1);
  const auto blocks = static_cast<std::size_t>((n + kEvalBlock - 1) / kEvalBlock);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    const Index start = static_cast<Index>(b) * kEvalBlock;
    const Index stop = std::min(n, start + kEvalBlock);
    for (Index i = start; i < stop; ++i) {
      for (Index k = 0; k < x.cols(); ++k) row[static_cast<std::size_t>(k)] = x(i, k);
      try {
        y(i) = bench.response(row);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DomainError) throw;
        ok[static_cast<std::size_t>(i)] = 0;
      }
    }
  });
  BenchmarkData out;
  Index kept = 0;
  for (char v : ok) kept += v;
  out.excluded = static_cast<std::size_t>(n - kept);
  if (out.excluded == 0) {
    out.x = x;
    out.y = std::move(y);
    return out;
  }
  out.x.resize(kept, x.cols());
  out.y.resize(kept);
  Index r = 0;
  for (Index i = 0; i < n; ++i) {
    if (!ok[static_cast<std::size_t>(i)]) continue;
    out.x.row(r) = x.row(i);
    out.y(r) = y(i);
    ++r;
  }
  return out;
}

namespace {

StatsRow stats_of(const Vector& y, const Benchmark& bench) {
  StatsRow r;
  const std::span<const double> s(y.data(), static_cast<std::size_t>(y.size()));
  r.moments = four_moments(s);
  if (bench.threshold) r.p_fail = failure_probability(s, *bench.threshold, bench.direction);
  return r;
}

AccuracyReport accuracy_of(const Vector& y, const Vector& pred) {
  return accuracy(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                  std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
}

}  // namespace

BenchmarkRun run_benchmark(const Benchmark& bench, const RunOptions& options) {
  const std::uint64_t seed = options.seed;
  const Matrix pool = lhs_sample(bench.inputs, bench.n_unlabeled, stream_seed(seed, 1));
  const BenchmarkData labeled = evaluate_benchmark(bench, lhs_sample(bench.inputs, bench.n_labeled, stream_seed(seed, 2)));
  require(labeled.y.size() >= 1, ErrorKind::InvalidInput, "no labeled rows left after domain exclusions");

  BenchmarkRun run;
  run.model = make_model(pool, bench.order, bench.hidden, bench.activation, stream_seed(seed, 6));
  TrainingConfig cfg = bench.training;
  cfg.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  run.training = train(run.model, {labeled.x, labeled.y}, pool, cfg, options.observer);
  run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const BenchmarkData reference =
      evaluate_benchmark(bench, mcs_sample(bench.inputs, options.n_reference, stream_seed(seed, 4), options.threads),
                         options.threads);
  run.excluded = reference.excluded;
  run.reference = stats_of(reference.y, bench);
  run.deep = stats_of(run.model.predict(reference.x, options.threads), bench);

  const BenchmarkData test =
      evaluate_benchmark(bench, mcs_sample(bench.inputs, options.n_test, stream_seed(seed, 3), options.threads));
  run.deep_accuracy = accuracy_of(test.y, run.model.predict(test.x, options.threads));

  if (options.classical) {
    const ClassicalFit fit =
        fit_classical_apc(run.model.basis, run.model.normalization.apply(labeled.x), labeled.y);
    run.classical = stats_of(predict_classical(run.model, fit.coefficients, reference.x), bench);
    run.classical_accuracy = accuracy_of(test.y, predict_classical(run.model, fit.coefficients, test.x));
  }
  run.residuals = property_residuals(
      run.model, mcs_sample(bench.inputs, options.n_residual, stream_seed(seed, 5), options.threads));
  return run;
}

double relative_error(double a, double b) { return std::abs(a / b - 1.0); }

}  // namespace dapce
