#pragma once

// Command implementations behind the deep_apce executable. Each command reads
// a JSON config, writes its artifacts into the output directory and returns a
// summary object that is also stored in the command's manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dapce/errors.hpp"
#include "dapce/polychaos.hpp"
#include "dapce/stochastic.hpp"

namespace dapce::cli {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::filesystem::path out = ".";
  int threads = 1;
};

/// 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
int exit_code(ErrorKind kind);

// Config helpers. Locations are reported as JSON paths such as $.training.lambda.

/// Parses a config file; syntax errors become Config errors with the file name.
Json load_config(const std::filesystem::path& path);

/// Throws Config naming the first key of `object` that is not in `allowed`.
void check_keys(const Json& object, const std::string& where, const std::vector<std::string>& allowed);

/// Random vector from "benchmark" (+ "rackwitz_n") or an explicit "random_vector" list.
std::optional<RandomVector> random_vector_from(const Json& config, const std::string& where = "$");

// CSV interchange: header x1..xd with an optional trailing y column.

struct Table {
  Matrix x;
  std::optional<Vector> y;
};

Table read_csv(const std::filesystem::path& path, bool require_y);
void write_csv(const std::filesystem::path& path, const Matrix& x, const Vector* y = nullptr);

/// FNV-1a 64 of the file contents as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

// Commands.

OrderedJson cmd_train(const Json& config, const GlobalOptions& global);
OrderedJson cmd_uq(const Json& config, const GlobalOptions& global);
OrderedJson cmd_benchmark(const std::string& name, const Json& overrides, const GlobalOptions& global);
OrderedJson cmd_crossval(const Json& config, const GlobalOptions& global);
OrderedJson cmd_generate(const Json& config, const GlobalOptions& global);
OrderedJson cmd_basis(const Json& config, const GlobalOptions& global);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace dapce::cli
