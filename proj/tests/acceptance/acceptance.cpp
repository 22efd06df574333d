// Acceptance checks. Prints one PASS/FAIL line per criterion of the selected
// group and exits non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "dapce/benchmarks.hpp"
#include "dapce/model.hpp"
#include "dapce/neural.hpp"
#include "dapce/polychaos.hpp"
#include "dapce/random.hpp"
#include "dapce/stochastic.hpp"
#include "dapce/uq.hpp"

using namespace dapce;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// Reference monic coefficients by solving the moment system with full-pivot LU.
Vector hankel_monic(const std::vector<double>& mu, int degree) {
  if (degree == 0) return Vector::Ones(1);
  Matrix a(degree, degree);
  Vector b(degree);
  for (int r = 0; r < degree; ++r) {
    for (int c = 0; c < degree; ++c) a(r, c) = mu[static_cast<std::size_t>(r + c)];
    b(r) = -mu[static_cast<std::size_t>(r + degree)];
  }
  Vector out(degree + 1);
  out.head(degree) = a.fullPivLu().solve(b);
  out(degree) = 1.0;
  return out;
}

void criterion_basis() {
  const auto t0 = std::chrono::steady_clock::now();
  // Normal, lognormal E of the cantilever table, Gumbel q, two-component mixture.
  const std::vector<Marginal> families = {Marginal::normal(55.29, 0.0793), Marginal::from_cov(Family::Lognormal, 2.6e5, 0.12),
                                          Marginal::from_cov(Family::Gumbel, 50.0, 0.15),
                                          Marginal::mixture({{0.5, -1.0, 0.35}, {0.5, 1.2, 0.4}})};
  double worst = 0.0;
  double worst_hankel = 0.0;
  for (std::size_t f = 0; f < families.size(); ++f) {
    const Matrix x = mcs_sample(RandomVector{{families[f]}}, 100000, 100 + f);
    const auto [xi, norm] = normalize(x);
    const RawMoments mom = compute_raw_moments(xi, 6);
    const UnivariateBasis basis = build_univariate_basis(mom, 3, BasisMode::Monic);
    const std::vector<double> mu = mom.of(0);
    for (int deg = 0; deg <= 3; ++deg) {
      const Vector closed = closed_form_coeffs(mu, deg);
      const Vector hankel = hankel_monic(mu, deg);
      for (int q = 0; q <= deg; ++q) {
        worst = std::max(worst, std::abs(basis.coefficients[0](deg, q) - closed(q)));
        worst_hankel = std::max(worst_hankel, std::abs(basis.coefficients[0](deg, q) - hankel(q)));
      }
    }
  }
  const double t = seconds_since(t0);
  report(1, "basis vs closed form, degrees 0-3, four families", worst < 1e-9 && worst_hankel < 1e-9 && t < 1.0,
         fmt("max |diff| closed form %.2e, moment system %.2e, %.2f s", worst, worst_hankel, t));
}

void criterion_gram() {
  const auto t0 = std::chrono::steady_clock::now();
  RandomVector normal{{Marginal::normal(55.29, 0.0793), Marginal::normal(22.86, 0.0043), Marginal::normal(22.86, 0.0043),
                       Marginal::normal(101.6, 0.0793)}};
  RandomVector lognormal{{Marginal::lognormal(1.0, 0.2), Marginal::from_cov(Family::Lognormal, 2.6e5, 0.12),
                          Marginal::from_cov(Family::Lognormal, 30.0, 0.30)}};
  std::string detail;
  bool pass = true;
  int s = 0;
  for (const auto* rv : {&normal, &lognormal}) {
    const Matrix fit = mcs_sample(*rv, 1000000, 200 + s);
    const auto [xi, norm] = normalize(fit);
    const MultiDimBasis basis = build_basis(xi, 2);
    const double same = gram_deviation(basis, xi);
    // Independent draws: the deviation reflects sampling error, not the fit itself.
    const Matrix fresh = norm.apply(mcs_sample(*rv, 1000000, 300 + s));
    const double held = gram_deviation(basis, fresh);
    pass = pass && same < 0.02 && held < 0.02;
    detail += fmt("%s: fit %.2e, fresh %.2e; ", s == 0 ? "normal" : "lognormal", same, held);
    ++s;
  }
  const double t = seconds_since(t0);
  report(2, "Gram deviation of p=2 bases at n=1e6", pass && t < 30.0, detail + fmt("%.1f s", t));
}

std::uint64_t binomial(int n, int k) {
  std::vector<std::vector<std::uint64_t>> c(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    c[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i + 1), 1);
    for (int j = 1; j < i; ++j) {
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
          c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
    }
  }
  return c[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

void criterion_indices() {
  const auto t0 = std::chrono::steady_clock::now();
  bool counts = true;
  for (int d = 1; d <= 10; ++d) {
    for (int p = 0; p <= 4; ++p) {
      const std::uint64_t expected = binomial(d + p, p);
      counts = counts && static_cast<std::uint64_t>(generate_multi_indices(d, p).size()) == expected &&
               total_degree_count(d, p) == expected;
    }
  }
  const std::vector<MultiIndex> listed = {{0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 2}, {0, 0, 1, 0}, {0, 0, 1, 1},
                                          {0, 0, 2, 0}, {0, 1, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 2, 0, 0},
                                          {1, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}, {2, 0, 0, 0}};
  const bool order = generate_multi_indices(4, 2).indices == listed;
  const double t = seconds_since(t0);
  report(3, "multi-index counts for d<=10, p<=4 and the d=4, p=2 list", counts && order && t < 1.0,
         fmt("counts %s, 15-set order %s, %.3f s", counts ? "match" : "differ", order ? "matches" : "differs", t));
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4242);
  double worst = 0.0;
  int probes = 0;
  for (int arch = 0; arch < 10; ++arch) {
    NetworkSpec spec;
    spec.input = 1 + static_cast<int>(rng.below(6));
    const int depth = 1 + static_cast<int>(rng.below(4));
    for (int l = 0; l < depth; ++l) spec.hidden.push_back(2 + static_cast<int>(rng.below(15)));
    spec.output = 1 + static_cast<int>(rng.below(10));
    spec.activation = arch % 2 == 0 ? Activation::Relu : Activation::Gelu;
    spec.seed = 1000 + static_cast<std::uint64_t>(arch);
    NetworkParams p = init_params(spec);
    // Generic point: zero biases can leave pre-activations exactly on a ReLU kink.
    for (auto& layer : p.layers)
      for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * rng.normal();
    Matrix x(7, spec.input), w(7, spec.output);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    ForwardTape tape;
    forward(spec, p, x, &tape);
    const NetworkParams g = backward(spec, p, tape, w);
    const auto same_pattern = [&](const ForwardTape& other) {
      for (std::size_t l = 0; l < tape.preacts.size(); ++l)
        if (((tape.preacts[l].array() > 0.0) != (other.preacts[l].array() > 0.0)).any()) return false;
      return true;
    };
    // ReLU probes whose step crosses a kink are redrawn; the difference quotient mixes two slopes there.
    int checked = 0;
    for (int attempt = 0; checked < 50 && attempt < 1000; ++attempt) {
      const std::size_t idx = static_cast<std::size_t>(rng.below(p.parameter_count()));
      const double orig = p.at(idx);
      const double h = 1e-5;
      ForwardTape up_tape, down_tape;
      p.at(idx) = orig + h;
      const double up = forward(spec, p, x, &up_tape).cwiseProduct(w).sum();
      p.at(idx) = orig - h;
      const double down = forward(spec, p, x, &down_tape).cwiseProduct(w).sum();
      p.at(idx) = orig;
      if (spec.activation == Activation::Relu && !(same_pattern(up_tape) && same_pattern(down_tape))) continue;
      const double fd = (up - down) / (2.0 * h);
      const double an = g.at(idx);
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-3, std::max(std::abs(fd), std::abs(an))));
      ++checked;
    }
    probes += checked;
  }
  const double t = seconds_since(t0);
  report(4, "backward vs central differences, 10 architectures x 50 coordinates",
         worst < 1e-4 && probes == 500 && t < 10.0, fmt("max relative error %.2e over %d probes, %.2f s", worst, probes, t));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "dapce_acceptance_determinism";
  fs::remove_all(root);
  cli::GlobalOptions g;
  g.out = root;
  g.seed = 11;
  cli::Json gen = {{"benchmark", "fortini"}, {"n", 40}, {"method", "lhs"}, {"output", "labeled.csv"}};
  cli::cmd_generate(gen, g);
  cli::Json cfg = {{"benchmark", "fortini"},
                   {"data", {{"labeled", (root / "labeled.csv").string()}, {"n_unlabeled", 20000}}},
                   {"training", {{"epochs", 300}, {"unlabeled_batch", 512}}},
                   {"output", {{"model", "a.dapce"}, {"history", "a.csv"}}}};
  cli::cmd_train(cfg, g);
  cfg["output"] = {{"model", "b.dapce"}, {"history", "b.csv"}};
  cli::cmd_train(cfg, g);
  const std::string a = read_file(root / "a.csv");
  const std::string b = read_file(root / "b.csv");
  const bool models = read_file(root / "a.dapce") == read_file(root / "b.dapce");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  report(11, "repeated cmd_train gives byte-identical loss history", !a.empty() && a == b && lines == 301,
         fmt("%zu bytes, %ld lines, histories %s, bundles %s", a.size(), static_cast<long>(lines),
             a == b ? "identical" : "differ", models ? "identical" : "differ"));
  fs::remove_all(root);
}

struct Residual {
  std::string label;
  double r_mean;
  double r_var;
};

std::vector<Residual> residuals;

void record_residuals(const std::string& label, const BenchmarkRun& run) {
  residuals.push_back({label, run.residuals.r_mean / std::sqrt(run.residuals.variance),
                       run.residuals.r_var / run.residuals.variance});
}

void criterion_residuals(const std::string& group) {
  bool pass = !residuals.empty();
  std::string detail;
  for (const auto& r : residuals) {
    pass = pass && r.r_mean < 0.02 && r.r_var < 0.05;
    detail += fmt("%s r_mean/std %.4f r_var/var %.4f; ", r.label.c_str(), r.r_mean, r.r_var);
  }
  report(9, "property residuals of the " + group + " models on 1e5 fresh samples", pass, detail);
}

double rel(double a, double b) { return relative_error(a, b); }

std::string moments_detail(const BenchmarkRun& run) {
  const Moments& m = run.deep.moments;
  const Moments& r = run.reference.moments;
  return fmt("errors mean %.3f%% std %.3f%% skew %.3f%% kurt %.3f%%", 100 * rel(m.mean, r.mean), 100 * rel(m.std, r.std),
             100 * rel(m.skewness, r.skewness), 100 * rel(m.kurtosis, r.kurtosis));
}

RunOptions run_options(std::uint64_t seed, int threads) {
  RunOptions o;
  o.seed = seed;
  o.threads = threads;
  return o;
}

void group_fortini(std::uint64_t seed, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const Benchmark bench = get_benchmark("fortini");
  const BenchmarkRun run = run_benchmark(bench, run_options(seed, threads));
  record_residuals("fortini", run);
  const Moments& mcs = run.reference.moments;
  const double n = 1e6 - static_cast<double>(run.excluded);
  // Published values carry 4 decimals: allow 3 standard errors plus half a unit of the last digit.
  const double half_unit = 0.5e-4;
  const double se_mean = mcs.std / std::sqrt(n);
  const double se_std = mcs.std * std::sqrt((mcs.kurtosis - 1.0) / (4.0 * n));
  const bool mcs_ok = std::abs(mcs.mean - 0.1219) <= 3 * se_mean + half_unit &&
                      std::abs(mcs.std - 0.0118) <= 3 * se_std + half_unit;
  const double e_mean = rel(run.deep.moments.mean, mcs.mean);
  const double e_std = rel(run.deep.moments.std, mcs.std);
  const double e_pf = rel(*run.deep.p_fail, *run.reference.p_fail);
  const bool deep_ok = e_mean <= 0.005 && e_std <= 0.02 && e_pf <= 0.05 && run.deep_accuracy.r2 >= 0.999;
  report(5, "Fortini reproduction, N_gd=40", mcs_ok && deep_ok,
         fmt("MCS mean %.5f std %.5f (published 0.1219, 0.0118); Deep aPCE mean err %.3f%% std err %.3f%% "
             "P_f %.5f vs %.5f err %.2f%% R2 %.6f; train %.0f s, total %.0f s",
             mcs.mean, mcs.std, 100 * e_mean, 100 * e_std, *run.deep.p_fail, *run.reference.p_fail, 100 * e_pf,
             run.deep_accuracy.r2, run.train_seconds, seconds_since(t0)));

  const auto t1 = std::chrono::steady_clock::now();
  const fs::path root = fs::temp_directory_path() / "dapce_acceptance_crossval";
  fs::remove_all(root);
  cli::GlobalOptions g;
  g.out = root;
  g.seed = seed;
  g.threads = threads;
  const cli::OrderedJson cv = cli::cmd_crossval({{"benchmark", "fortini"}, {"n_labeled", 40}, {"k", 5}}, g);
  bool cv_ok = cv["folds"].size() == 5;
  std::string detail = "fold MAE";
  for (const auto& f : cv["folds"]) {
    const double mae = f["mae"].get<double>();
    cv_ok = cv_ok && mae < 1e-3;
    detail += fmt(" %.2e", mae);
  }
  report(12, "5-fold cross-validation on Fortini N_gd=40", cv_ok,
         detail + fmt(", mean %.2e rad, %.0f s", cv["mean_mae"].get<double>(), seconds_since(t1)));
  fs::remove_all(root);
  criterion_residuals("Fortini");
}

void group_cantilever(std::uint64_t seed, int threads) {
  const RunOptions opt = run_options(seed, threads);
  Benchmark b90 = get_benchmark("cantilever");
  const BenchmarkRun r90 = run_benchmark(b90, opt);
  record_residuals("N_gd=90", r90);
  {
    const Moments& m = r90.deep.moments;
    const Moments& r = r90.reference.moments;
    const bool pass = rel(m.mean, r.mean) <= 0.005 && rel(m.std, r.std) <= 0.01 &&
                      rel(m.skewness, r.skewness) <= 0.05 && rel(m.kurtosis, r.kurtosis) <= 0.03;
    report(6, "cantilever reproduction, N_gd=90", pass,
           moments_detail(r90) + fmt("; R2 %.6f; train %.0f s", r90.deep_accuracy.r2, r90.train_seconds));
  }

  Benchmark b40 = get_benchmark("cantilever");
  b40.n_labeled = 40;
  const BenchmarkRun semi = run_benchmark(b40, opt);
  record_residuals("N_gd=40 lambda=1 L1", semi);
  Benchmark sup = b40;
  sup.training.lambda = 0.0;
  const BenchmarkRun supervised = run_benchmark(sup, opt);
  record_residuals("N_gd=40 lambda=0", supervised);
  {
    const Moments& r = semi.reference.moments;
    const Moments& a = semi.deep.moments;
    const Moments& s = supervised.deep.moments;
    const bool pass = rel(a.mean, r.mean) < rel(s.mean, r.mean) && rel(a.std, r.std) < rel(s.std, r.std) &&
                      rel(a.skewness, r.skewness) < rel(s.skewness, r.skewness) &&
                      rel(a.kurtosis, r.kurtosis) < rel(s.kurtosis, r.kurtosis);
    report(8, "semi-supervised beats supervised-only at N_gd=40", pass,
           "lambda=1 " + moments_detail(semi) + "; lambda=0 " + moments_detail(supervised));
  }

  Benchmark l2 = b40;
  l2.training.norm = LossNorm::L2;
  const BenchmarkRun squared = run_benchmark(l2, opt);
  record_residuals("N_gd=40 lambda=1 L2", squared);
  {
    const Moments& r = semi.reference.moments;
    const bool pass = rel(semi.deep.moments.mean, r.mean) < rel(squared.deep.moments.mean, r.mean) &&
                      rel(semi.deep.moments.std, r.std) < rel(squared.deep.moments.std, r.std);
    report(10, "L1 beats L2 on mean and std at N_gd=40", pass,
           "L1 " + moments_detail(semi) + "; L2 " + moments_detail(squared));
  }
  criterion_residuals("cantilever");
}

void group_rackwitz(std::uint64_t seed, int threads) {
  Benchmark bench = get_benchmark("rackwitz", {40});
  RunOptions opt = run_options(seed, threads);
  opt.classical = false;
  const BenchmarkRun run = run_benchmark(bench, opt);
  record_residuals("rackwitz n=40", run);
  const Moments& m = run.deep.moments;
  const Moments& r = run.reference.moments;
  const bool pass = run.deep_accuracy.r2 >= 0.999 && rel(m.mean, r.mean) <= 0.005 && rel(m.std, r.std) <= 0.01 &&
                    rel(m.skewness, r.skewness) <= 0.10 && rel(m.kurtosis, r.kurtosis) <= 0.02;
  report(7, "Rackwitz n=40, N_gd=2000", pass,
         moments_detail(run) + fmt("; R2 %.6f; train %.0f s", run.deep_accuracy.r2, run.train_seconds));
  criterion_residuals("Rackwitz");
}

void group_core() {
  criterion_basis();
  criterion_gram();
  criterion_indices();
  criterion_gradients();
  criterion_determinism();
}

}  // namespace

int main(int argc, char** argv) {
  std::string group = "core";
  std::uint64_t seed = 1;
  int threads = 1;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--group" && i + 1 < argc) {
      group = argv[++i];
    } else if (a == "--seed" && i + 1 < argc) {
      seed = std::stoull(argv[++i]);
    } else if (a == "--threads" && i + 1 < argc) {
      threads = std::stoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--group core|fortini|cantilever|rackwitz|all] [--seed N] [--threads N]\n");
      return 1;
    }
  }
  const std::vector<std::pair<std::string, std::function<void()>>> groups = {
      {"core", [] { group_core(); }},
      {"fortini", [&] { group_fortini(seed, threads); }},
      {"cantilever", [&] { group_cantilever(seed, threads); }},
      {"rackwitz", [&] { group_rackwitz(seed, threads); }}};
  bool ran = false;
  for (const auto& [name, fn] : groups) {
    if (group != "all" && group != name) continue;
    ran = true;
    residuals.clear();
    try {
      fn();
    } catch (const std::exception& e) {
      std::printf("FAIL group %s aborted: %s\n", name.c_str(), e.what());
      ++failures;
    }
  }
  if (!ran) {
    std::fprintf(stderr, "unknown group '%s'\n", group.c_str());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
