#include <cmath>
#include <stdexcept>
#include <string>

#include "sceneparse/nn.hpp"

namespace sceneparse {

FilterBank::FilterBank(int in_channels, int out_channels, int kernel_size,
                       std::vector<Connection> connections)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_size_(kernel_size),
      connections_(std::move(connections)) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw std::invalid_argument("FilterBank: kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (in_channels < 1 || out_channels < 1) {
    throw std::invalid_argument("FilterBank: channel counts must be positive");
  }
  into_.assign(out_channels, {});
  from_.assign(in_channels, {});
  for (int i = 0; i < static_cast<int>(connections_.size()); ++i) {
    const auto& c = connections_[i];
    if (c.out < 0 || c.out >= out_channels || c.in < 0 || c.in >= in_channels) {
      throw std::out_of_range("FilterBank: connection (" + std::to_string(c.out) + ", " +
                              std::to_string(c.in) + ") out of range");
    }
    into_[c.out].push_back(i);
    from_[c.in].push_back(i);
  }
  for (int p = 0; p < out_channels; ++p) {
    if (into_[p].empty()) {
      throw std::invalid_argument("FilterBank: output map " + std::to_string(p) + " has no connection");
    }
  }
  weights_.assign(connections_.size() * kernel_area(), 0.0);
  biases_.assign(out_channels, 0.0);
}

FilterBank FilterBank::fully_connected(int in_channels, int out_channels, int kernel_size) {
  std::vector<Connection> conns;
  conns.reserve(static_cast<std::size_t>(in_channels) * out_channels);
  for (int p = 0; p < out_channels; ++p) {
    for (int q = 0; q < in_channels; ++q) conns.push_back({p, q});
  }
  return FilterBank(in_channels, out_channels, kernel_size, std::move(conns));
}

void FilterBank::init_uniform(std::mt19937_64& rng) {
  for (int p = 0; p < out_channels_; ++p) {
    const double fan_in = static_cast<double>(into_[p].size()) * kernel_area();
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int conn : into_[p]) {
      for (double& w : kernel(conn)) w = dist(rng);
    }
    biases_[p] = dist(rng);
  }
}

}  // namespace sceneparse
