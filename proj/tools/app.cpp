#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "dapce/version.hpp"

namespace dapce::cli {

int run(int argc, char** argv) {
  CLI::App app{"Deep adaptive aPC surrogate modelling and uncertainty quantification", "deep_apce"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 1;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the config");
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1, 1024));

  auto* train = app.add_subcommand("train", "Train a surrogate from labeled and unlabeled data");
  auto* uq = app.add_subcommand("uq", "Monte Carlo uncertainty analysis of a trained surrogate");
  auto* bench = app.add_subcommand("benchmark", "Reproduce a built-in benchmark end to end");
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation of the surrogate");
  auto* generate = app.add_subcommand("generate", "Write benchmark samples as CSV");
  auto* basis = app.add_subcommand("basis", "Emit basis coefficients for inspection");

  std::string bench_name;
  std::optional<std::int64_t> ngd, dim, epochs, mcs, batch;
  std::optional<double> lambda;
  std::optional<std::string> norm;
  bench->add_option("name", bench_name, "Benchmark name")->required();
  bench->add_option("--ngd", ngd, "Number of labeled samples");
  bench->add_option("--n", dim, "Dimension of the rackwitz problem");
  bench->add_option("--epochs", epochs, "Training epochs");
  bench->add_option("--lambda", lambda, "Weight of the unlabeled terms");
  bench->add_option("--norm", norm, "Supervised loss norm (l1 or l2)");
  bench->add_option("--mcs", mcs, "Reference Monte Carlo sample count");
  bench->add_option("--batch", batch, "Unlabeled rows per epoch (0 = full pool)");

  std::optional<std::int64_t> folds;
  crossval->add_option("--k", folds, "Number of folds");

  std::optional<std::string> gen_bench, gen_method;
  std::optional<std::int64_t> gen_n;
  generate->add_option("--benchmark", gen_bench, "Benchmark name");
  generate->add_option("--n", gen_n, "Number of rows");
  generate->add_option("--method", gen_method, "lhs or mcs");

  std::optional<std::int64_t> basis_order;
  std::optional<std::string> basis_bench;
  basis->add_option("--order", basis_order, "Total polynomial degree");
  basis->add_option("--benchmark", basis_bench, "Benchmark supplying the random vector");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    GlobalOptions g;
    if (*seed_opt) g.seed = seed;
    g.out = out;
    g.threads = threads;
    Json config = config_path.empty() ? Json::object() : load_config(config_path);
    const auto needs_config = [&](const char* command) {
      if (config_path.empty()) fail(ErrorKind::Config, std::string(command) + " requires --config");
    };
    OrderedJson result;
    if (train->parsed()) {
      needs_config("train");
      result = cmd_train(config, g);
    } else if (uq->parsed()) {
      needs_config("uq");
      result = cmd_uq(config, g);
    } else if (bench->parsed()) {
      if (ngd) config["n_labeled"] = *ngd;
      if (dim) config["rackwitz_n"] = *dim;
      if (epochs) config["training"]["epochs"] = *epochs;
      if (lambda) config["training"]["lambda"] = *lambda;
      if (norm) config["training"]["norm"] = *norm;
      if (batch) config["training"]["unlabeled_batch"] = *batch;
      if (mcs) config["n_reference"] = *mcs;
      result = cmd_benchmark(bench_name, config, g);
      std::cout << result["table"].get<std::string>();
      return 0;
    } else if (crossval->parsed()) {
      needs_config("crossval");
      if (folds) config["k"] = *folds;
      result = cmd_crossval(config, g);
      std::cout << result["table"].get<std::string>();
      return 0;
    } else if (generate->parsed()) {
      if (gen_bench) config["benchmark"] = *gen_bench;
      if (gen_n) config["n"] = *gen_n;
      if (gen_method) config["method"] = *gen_method;
      result = cmd_generate(config, g);
    } else if (basis->parsed()) {
      if (basis_bench) config["benchmark"] = *basis_bench;
      if (basis_order) config["order"] = *basis_order;
      result = cmd_basis(config, g);
      result.erase("variables");
      result.erase("indices");
    }
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "deep_apce: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "deep_apce: io: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "deep_apce: internal: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace dapce::cli
