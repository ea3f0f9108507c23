#pragma once
#include <cstdint>
#include <random>
#include <vector>

namespace odt {

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic sub-seed for a (stream, index) pair below a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

// mt19937_64 engine plus explicit sampling algorithms. The standard
// distribution classes are implementation-defined, so every draw here is
// spelled out to keep streams identical across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();  // Box-Muller
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape, double scale = 1.0);  // Marsaglia-Tsang
  int poisson(double lambda);
  int negative_binomial(double mu, double dispersion);  // gamma-Poisson mixture
  /// Index draw proportional to non-negative weights.
  int categorical(const double* weights, int n);
  int categorical(const std::vector<double>& w) { return categorical(w.data(), static_cast<int>(w.size())); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from 0..n-1, in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 gen_;
};

}  // namespace odt
