#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace comc::sim {

// Shifted-exponential headways: h_min + Exp(mean 1/rate - h_min).
class ArrivalStream {
 public:
  // Throws InfeasibleDemandError when 1/rate <= h_min and ValidationError for
  // a non-positive rate.
  ArrivalStream(double rate, double h_min, std::uint64_t seed, std::uint64_t stream_id,
                double t0 = 0.0);

  double peek() const { return next_; }
  double pop();

 private:
  double h_min_;
  std::mt19937_64 rng_;
  std::exponential_distribution<double> exp_;
  double next_;
};

// All arrival times in [t0, horizon) of one source.
std::vector<double> generate_arrivals(double rate, double h_min, double horizon,
                                      std::uint64_t seed, std::uint64_t stream_id = 0);

}  // namespace comc::sim
