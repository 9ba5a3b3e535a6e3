#include "digmix/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace digmix {

double Rng::uniform() {
  // 53 random bits mapped to the midpoints of a grid on (0, 1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }
  return std::exp(log_gamma_draw(shape));
}

double Rng::log_gamma_draw(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(engine_));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  const double g = dist(engine_);
  return std::log(g) + std::log(uniform()) / shape;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("index range must be nonempty");
  }
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) {
    throw std::invalid_argument("categorical needs at least one weight");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform() * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) {
      return k;
    }
  }
  // Rounding can leave a sliver past the last boundary; skip trailing zero weights.
  std::size_t last = weights.size() - 1;
  while (last > 0 && weights[last] <= 0.0) {
    --last;
  }
  return last;
}

double draw_inverse_gamma(double shape, double rate, Rng& rng) {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("inverse gamma rate must be positive");
  }
  return rate / rng.gamma(shape);
}

std::vector<double> draw_dirichlet(std::span<const double> concentration, Rng& rng) {
  std::vector<double> out(concentration.size());
  if (out.empty()) {
    return out;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = rng.log_gamma_draw(concentration[k]);
  }
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  constexpr double kFloor = std::numeric_limits<double>::min();
  double renorm = 0.0;
  for (double& v : out) {
    v = std::max(v / total, kFloor);
    renorm += v;
  }
  for (double& v : out) {
    v /= renorm;
  }
  return out;
}

}  // namespace digmix
