// OpenMP convolution kernels. Work is split over independent outputs (output
// maps, input maps, or connections) so every sum is accumulated by a single
// thread in a fixed order and results do not depend on the thread count.

#include <algorithm>
#include <stdexcept>
#include <string>

#include "sceneparse/nn.hpp"

namespace sceneparse {
namespace {

void check_inputs(const FeatureVolume& input, const FilterBank& bank, int pad) {
  if (pad < 0) throw std::invalid_argument("conv2d: negative padding");
  for (const auto& c : bank.connections()) {
    if (c.in >= input.channels()) {
      throw std::out_of_range("conv2d: connection reads channel " + std::to_string(c.in) +
                              " of a " + std::to_string(input.channels()) + "-channel input");
    }
  }
  const int k = bank.kernel_size();
  if (input.height() + 2 * pad < k || input.width() + 2 * pad < k) {
    throw std::invalid_argument("conv2d: input smaller than kernel");
  }
}

// Output columns x whose tap x + kx - pad lands inside [0, in_w).
struct ColumnRange {
  int begin;
  int end;
};

ColumnRange valid_columns(int kx, int pad, int in_w, int out_w) {
  const int shift = kx - pad;
  return {std::max(0, -shift), std::min(out_w, in_w - shift)};
}

}  // namespace

FeatureVolume conv2d(const FeatureVolume& input, const FilterBank& bank, int pad) {
  check_inputs(input, bank, pad);
  const int k = bank.kernel_size();
  const int in_h = input.height();
  const int in_w = input.width();
  const int out_h = in_h + 2 * pad - k + 1;
  const int out_w = in_w + 2 * pad - k + 1;
  FeatureVolume out(bank.out_channels(), out_h, out_w);

#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < bank.out_channels(); ++p) {
    auto plane = out.plane(p);
    std::fill(plane.begin(), plane.end(), bank.biases()[p]);
    for (int conn : bank.connections_into(p)) {
      const int q = bank.connections()[conn].in;
      const auto kernel = bank.kernel(conn);
      for (int ky = 0; ky < k; ++ky) {
        const int y_begin = std::max(0, pad - ky);
        const int y_end = std::min(out_h, in_h + pad - ky);
        for (int kx = 0; kx < k; ++kx) {
          const double w = kernel[ky * k + kx];
          const auto cols = valid_columns(kx, pad, in_w, out_w);
          const int shift = kx - pad;
          for (int y = y_begin; y < y_end; ++y) {
            const double* src = input.row(q, y + ky - pad).data() + shift;
            double* dst = out.row(p, y).data();
            for (int x = cols.begin; x < cols.end; ++x) dst[x] += w * src[x];
          }
        }
      }
    }
  }
  return out;
}

FeatureVolume conv2d_backward(const FeatureVolume& input, const FilterBank& bank, int pad,
                              const FeatureVolume& grad_output, FilterBankGrad& grad) {
  check_inputs(input, bank, pad);
  const int k = bank.kernel_size();
  const int in_h = input.height();
  const int in_w = input.width();
  const int out_h = in_h + 2 * pad - k + 1;
  const int out_w = in_w + 2 * pad - k + 1;
  if (grad_output.channels() != bank.out_channels() || grad_output.height() != out_h ||
      grad_output.width() != out_w) {
    throw std::invalid_argument("conv2d_backward: gradient shape mismatch");
  }
  if (grad.weights.size() != bank.weights().size() || grad.biases.size() != bank.biases().size()) {
    throw std::invalid_argument("conv2d_backward: parameter gradient shape mismatch");
  }

  for (int p = 0; p < bank.out_channels(); ++p) {
    double sum = 0.0;
    for (double g : grad_output.plane(p)) sum += g;
    grad.biases[p] += sum;
  }

  const int n_conn = static_cast<int>(bank.connections().size());
#pragma omp parallel for schedule(dynamic)
  for (int conn = 0; conn < n_conn; ++conn) {
    const auto& c = bank.connections()[conn];
    double* gk = grad.weights.data() + static_cast<std::size_t>(conn) * bank.kernel_area();
    for (int ky = 0; ky < k; ++ky) {
      const int y_begin = std::max(0, pad - ky);
      const int y_end = std::min(out_h, in_h + pad - ky);
      for (int kx = 0; kx < k; ++kx) {
        const auto cols = valid_columns(kx, pad, in_w, out_w);
        const int shift = kx - pad;
        double acc = 0.0;
        for (int y = y_begin; y < y_end; ++y) {
          const double* src = input.row(c.in, y + ky - pad).data() + shift;
          const double* g = grad_output.row(c.out, y).data();
          for (int x = cols.begin; x < cols.end; ++x) acc += g[x] * src[x];
        }
        gk[ky * k + kx] += acc;
      }
    }
  }

  FeatureVolume grad_input(input.channels(), in_h, in_w);
#pragma omp parallel for schedule(dynamic)
  for (int q = 0; q < input.channels(); ++q) {
    for (int conn : bank.connections_from(q)) {
      const int p = bank.connections()[conn].out;
      const auto kernel = bank.kernel(conn);
      for (int ky = 0; ky < k; ++ky) {
        const int y_begin = std::max(0, pad - ky);
        const int y_end = std::min(out_h, in_h + pad - ky);
        for (int kx = 0; kx < k; ++kx) {
          const double w = kernel[ky * k + kx];
          const auto cols = valid_columns(kx, pad, in_w, out_w);
          const int shift = kx - pad;
          for (int y = y_begin; y < y_end; ++y) {
            double* dst = grad_input.row(q, y + ky - pad).data() + shift;
            const double* g = grad_output.row(p, y).data();
            for (int x = cols.begin; x < cols.end; ++x) dst[x] += w * g[x];
          }
        }
      }
    }
  }
  return grad_input;
}

}  // namespace sceneparse
