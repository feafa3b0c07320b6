#include "comc/sim/arrivals.hpp"

#include <sstream>

#include "comc/error.hpp"

namespace comc::sim {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), 0x636f6d63u};
  return std::mt19937_64(seq);
}

}  // namespace

ArrivalStream::ArrivalStream(double rate, double h_min, std::uint64_t seed,
                             std::uint64_t stream_id, double t0)
    : h_min_(h_min), rng_(make_rng(seed, stream_id)) {
  if (!(rate > 0.0)) throw ValidationError("demand", "arrival rate must be > 0");
  const double mean = 1.0 / rate;
  if (mean <= h_min) {
    std::ostringstream os;
    os << "demand " << rate * 3600.0 << " veh/h needs headway " << mean
       << " s, below the minimum " << h_min << " s";
    throw InfeasibleDemandError(os.str());
  }
  exp_ = std::exponential_distribution<double>(1.0 / (mean - h_min));
  next_ = t0 + h_min_ + exp_(rng_);
}

double ArrivalStream::pop() {
  const double t = next_;
  next_ += h_min_ + exp_(rng_);
  return t;
}

std::vector<double> generate_arrivals(double rate, double h_min, double horizon,
                                      std::uint64_t seed, std::uint64_t stream_id) {
  ArrivalStream s(rate, h_min, seed, stream_id);
  std::vector<double> out;
  while (s.peek() < horizon) out.push_back(s.pop());
  return out;
}

}  // namespace comc::sim
