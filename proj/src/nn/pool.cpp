#include <cmath>
#include <stdexcept>

#include "sceneparse/nn.hpp"

namespace sceneparse {

PoolResult maxpool2(const FeatureVolume& input) {
  const int out_h = (input.height() + 1) / 2;
  const int out_w = (input.width() + 1) / 2;
  PoolResult result{FeatureVolume(input.channels(), out_h, out_w), {}};
  result.argmax.resize(result.output.size());

#pragma omp parallel for
  for (int c = 0; c < input.channels(); ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        // Cells past an odd border behave as -inf and are never selected.
        std::size_t best = input.index(c, 2 * oy, 2 * ox);
        double best_value = input.data()[best];
        for (int dy = 0; dy < 2; ++dy) {
          const int y = 2 * oy + dy;
          if (y >= input.height()) break;
          for (int dx = 0; dx < 2; ++dx) {
            const int x = 2 * ox + dx;
            if (x >= input.width()) break;
            const std::size_t idx = input.index(c, y, x);
            if (input.data()[idx] > best_value) {
              best_value = input.data()[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = result.output.index(c, oy, ox);
        result.output.data()[o] = best_value;
        result.argmax[o] = best;
      }
    }
  }
  return result;
}

FeatureVolume maxpool2_backward(const FeatureVolume& input, const PoolResult& pooled,
                                const FeatureVolume& grad_output) {
  if (!grad_output.same_shape(pooled.output)) {
    throw std::invalid_argument("maxpool2_backward: gradient shape mismatch");
  }
  FeatureVolume grad_input(input.channels(), input.height(), input.width());
  auto g = grad_output.data();
  auto gi = grad_input.data();
  for (std::size_t i = 0; i < g.size(); ++i) gi[pooled.argmax[i]] += g[i];
  return grad_input;
}

FeatureVolume tanh_map(const FeatureVolume& input) {
  FeatureVolume out(input.channels(), input.height(), input.width());
  auto src = input.data();
  auto dst = out.data();
  const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for
  for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = std::tanh(src[i]);
  return out;
}

FeatureVolume tanh_backward(const FeatureVolume& output, const FeatureVolume& grad_output) {
  if (!output.same_shape(grad_output)) throw std::invalid_argument("tanh_backward: shape mismatch");
  FeatureVolume grad(output.channels(), output.height(), output.width());
  auto y = output.data();
  auto g = grad_output.data();
  auto dst = grad.data();
  for (std::size_t i = 0; i < y.size(); ++i) dst[i] = g[i] * (1.0 - y[i] * y[i]);
  return grad;
}

}  // namespace sceneparse
