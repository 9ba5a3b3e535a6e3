#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace digmix {

/// Seeded random source shared by every sampler and generator.
///
/// Wraps a 64-bit Mersenne twister. All draws go through the member functions
/// so a chain is reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma(shape, scale = 1). Shapes below one are drawn in log space.
  double gamma(double shape);
  /// log of a Gamma(shape, 1) draw; stays finite for tiny shapes.
  double log_gamma_draw(double shape);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Index drawn proportionally to the (nonnegative, not necessarily normalized) weights.
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// InverseGamma(shape, rate) draw, i.e. rate / Gamma(shape, 1).
double draw_inverse_gamma(double shape, double rate, Rng& rng);

/// Dirichlet draw. Entries are strictly positive and sum to one.
std::vector<double> draw_dirichlet(std::span<const double> concentration, Rng& rng);

}  // namespace digmix
