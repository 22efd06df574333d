#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dapce/benchmarks.hpp"
#include "dapce/bytes.hpp"
#include "dapce/uq.hpp"

namespace dapce::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 1;
    case ErrorKind::NumericOverflow:
    case ErrorKind::NumericFailure:
    case ErrorKind::UndefinedStatistic:
      return 3;
    default:
      return 2;
  }
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config file " + path.string());
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) fail(ErrorKind::Config, path.string() + ": top level must be an object");
    return j;
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

void check_keys(const Json& object, const std::string& where, const std::vector<std::string>& allowed) {
  if (!object.is_object()) config_type_error(where, "an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const auto& a : allowed) known = known || a == key;
    if (!known) fail(ErrorKind::Config, "unknown key '" + key + "' at " + where);
  }
}

namespace {

Marginal marginal_from(const Json& m, const std::string& where) {
  if (!m.is_object()) config_type_error(where, "an object");
  const std::string family_name = get_string(m, "family", where, "");
  if (family_name.empty()) fail(ErrorKind::Config, child(where, "family") + ": required");
  const Family family = at_location(child(where, "family"), [&] { return family_from_string(family_name); });
  return at_location(where, [&]() -> Marginal {
    switch (family) {
      case Family::Normal:
      case Family::Lognormal:
      case Family::Gumbel: {
        check_keys(m, where, {"family", "mean", "std", "cov"});
        const Json* mean = find(m, "mean");
        if (!mean) fail(ErrorKind::Config, "'mean' is required");
        const double mu = as_double(*mean, child(where, "mean"));
        const bool has_std = find(m, "std") != nullptr;
        const bool has_cov = find(m, "cov") != nullptr;
        if (has_std == has_cov) fail(ErrorKind::Config, "exactly one of 'std' or 'cov' is required");
        if (has_cov) return Marginal::from_cov(family, mu, get_double(m, "cov", where, 0.0));
        const double sd = get_double(m, "std", where, 0.0);
        if (family == Family::Normal) return Marginal::normal(mu, sd);
        if (family == Family::Lognormal) return Marginal::lognormal(mu, sd);
        return Marginal::gumbel(mu, sd);
      }
      case Family::GaussianMixture: {
        check_keys(m, where, {"family", "components"});
        const Json* comps = find(m, "components");
        if (!comps || !comps->is_array()) config_type_error(child(where, "components"), "an array");
        std::vector<MixtureComponent> parts;
        for (std::size_t i = 0; i < comps->size(); ++i) {
          const std::string cw = child(where, "components") + "[" + std::to_string(i) + "]";
          const Json& c = (*comps)[i];
          check_keys(c, cw, {"weight", "mean", "std"});
          parts.push_back({get_double(c, "weight", cw, NAN), get_double(c, "mean", cw, NAN), get_double(c, "std", cw, NAN)});
        }
        return Marginal::mixture(std::move(parts));
      }
      case Family::Deterministic:
        check_keys(m, where, {"family", "value"});
        return Marginal::deterministic(get_double(m, "value", where, NAN));
      case Family::Uniform:
        check_keys(m, where, {"family", "lower", "upper"});
        return Marginal::uniform(get_double(m, "lower", where, NAN), get_double(m, "upper", where, NAN));
    }
    fail(ErrorKind::Config, "unsupported family");
  });
}

}  // namespace

std::optional<RandomVector> random_vector_from(const Json& config, const std::string& where) {
  const Json* bench = find(config, "benchmark");
  const Json* list = find(config, "random_vector");
  if (bench && list) fail(ErrorKind::Config, where + ": give either 'benchmark' or 'random_vector', not both");
  if (bench) {
    BenchmarkOptions opt;
    opt.rackwitz_n = static_cast<int>(get_int(config, "rackwitz_n", where, 40, 1));
    const std::string name = as_string(*bench, child(where, "benchmark"));
    return at_location(child(where, "benchmark"), [&] { return get_benchmark(name, opt).inputs; });
  }
  if (!list) return std::nullopt;
  if (!list->is_array() || list->empty()) config_type_error(child(where, "random_vector"), "a non-empty array");
  RandomVector rv;
  for (std::size_t i = 0; i < list->size(); ++i) {
    rv.marginals.push_back(marginal_from((*list)[i], child(where, "random_vector") + "[" + std::to_string(i) + "]"));
  }
  return rv;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

}  // namespace

Table read_csv(const std::filesystem::path& path, bool require_y) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open data file " + path.string());
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::BadFormat, name + ": missing header row");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  const bool has_y = !header.empty() && header.back() == "y";
  const std::size_t d = header.size() - (has_y ? 1 : 0);
  if (d == 0) fail(ErrorKind::BadFormat, name + ": header has no x columns");
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != "x" + std::to_string(k + 1)) {
      fail(ErrorKind::BadFormat, name + ": header column " + std::to_string(k + 1) + " is '" + header[k] +
                                     "', expected 'x" + std::to_string(k + 1) + "'");
    }
  }
  if (require_y && !has_y) fail(ErrorKind::BadFormat, name + ": labeled data needs a trailing 'y' column");

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    const std::string where = name + ": row " + std::to_string(rows) + " (line " + std::to_string(line_no) + ")";
    if (cells.size() != header.size()) {
      fail(ErrorKind::BadFormat, where + " has " + std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last) {
        fail(ErrorKind::BadFormat, where + ", column " + header[c] + ": cannot parse '" + cell + "'");
      }
      if (!std::isfinite(v)) {
        fail(ErrorKind::NonFiniteInput, where + ", column " + header[c] + ": non-finite value");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::BadFormat, name + ": no data rows");
  Table t;
  const std::size_t width = header.size();
  t.x.resize(static_cast<Index>(rows), static_cast<Index>(d));
  if (has_y) t.y = Vector(static_cast<Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < d; ++k) t.x(static_cast<Index>(r), static_cast<Index>(k)) = values[r * width + k];
    if (has_y) (*t.y)(static_cast<Index>(r)) = values[r * width + d];
  }
  return t;
}

void write_csv(const std::filesystem::path& path, const Matrix& x, const Vector* y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (Index k = 0; k < x.cols(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
  if (y) out << ",y";
  out << '\n';
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < x.cols(); ++k) out << (k ? "," : "") << format_double(x(i, k));
    if (y) out << ',' << format_double((*y)(i));
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data.data(), data.size())));
  return buf;
}

}  // namespace dapce::cli
