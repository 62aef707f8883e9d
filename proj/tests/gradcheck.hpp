#pragma once

#include <cmath>
#include <vector>

#include "grok/tensor.hpp"

// Central finite differences vs the analytic gradient, in 64-bit so the
// eps=1e-3 stencil is far above rounding noise. The relative error denominator
// floors at 1e-3: below that the comparison degrades gracefully into an
// absolute check instead of dividing noise by noise.
template <class Builder>
double max_grad_rel_err(std::vector<grok::nn::Tensor<double>> params, Builder build,
                        double eps = 1e-3) {
  for (auto& p : params) p.zero_grad();
  auto loss = build();
  grok::nn::backward(loss);
  double worst = 0;
  for (auto& p : params) {
    auto g = p.grad();
    auto x = p.data();
    for (long i = 0; i < p.size(); ++i) {
      double keep = x[i];
      x[i] = keep + eps;
      double up = build().item();
      x[i] = keep - eps;
      double dn = build().item();
      x[i] = keep;
      double fd = (up - dn) / (2 * eps);
      double an = g[i];
      double denom = std::max(std::max(std::abs(fd), std::abs(an)), 1e-3);
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

inline grok::nn::Tensor<double> random_tensor(grok::nn::Shape shape, grok::Rng& rng,
                                              bool requires_grad = true,
                                              double scale = 1.0) {
  auto t = grok::nn::Tensor<double>::zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = rng.normal(0.0, scale);
  return t;
}
