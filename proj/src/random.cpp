#include "dapce/random.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

namespace dapce {

double Rng::normal() {
  const double u = uniform_open();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(out));
  return out;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t count) {
  if (count > n) count = n;
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace dapce
