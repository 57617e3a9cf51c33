// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "protoscene/simd/kernels.hpp"

namespace protoscene::model {

Linear Linear::create(ParamStore& store, const std::string& name, ParamGroup group, int in, int out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add(name + ".weight", group, {static_cast<std::size_t>(out), static_cast<std::size_t>(in)});
  l.bias = store.add(name + ".bias", group, {static_cast<std::size_t>(out)});
  return l;
}

void Linear::init_uniform(ParamStore& store, std::mt19937_64& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : store[weight].value) w = u(rng);
  for (double& b : store[bias].value) b = u(rng);
}

void Linear::init_zero(ParamStore& store) const {
  std::fill(store[weight].value.begin(), store[weight].value.end(), 0.0);
  std::fill(store[bias].value.begin(), store[bias].value.end(), 0.0);
}

void Linear::forward(const ParamStore& store, const double* x, double* y) const {
  const auto& k = simd::kernels();
  const double* w = store.value(weight);
  const double* b = store.value(bias);
  for (int o = 0; o < out; ++o) y[o] = b[o] + k.dot(w + static_cast<std::size_t>(o) * in, x, in);
}

void Linear::backward(ParamStore& store, const double* x, const double* dy, double* dx) const {
  const auto& k = simd::kernels();
  const double* w = store.value(weight);
  double* gw = store.grad(weight);
  double* gb = store.grad(bias);
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    gb[o] += g;
    k.axpy(g, x, gw + static_cast<std::size_t>(o) * in, in);
    if (dx != nullptr) k.axpy(g, w + static_cast<std::size_t>(o) * in, dx, in);
  }
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, ParamGroup group, int dim) {
  LayerNorm n;
  n.dim = dim;
  n.gain = store.add(name + ".gain", group, {static_cast<std::size_t>(dim)});
  n.bias = store.add(name + ".bias", group, {static_cast<std::size_t>(dim)});
  std::fill(store[n.gain].value.begin(), store[n.gain].value.end(), 1.0);
  return n;
}

void LayerNorm::forward(const ParamStore& store, const double* x, std::size_t rows, double* y,
                        double* xhat, double* rstd) const {
  const double* g = store.value(gain);
  const double* b = store.value(bias);
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mean) * rs;
      xhat[r * d + i] = h;
      y[r * d + i] = h * g[i] + b[i];
    }
  }
}

void LayerNorm::backward(ParamStore& store, const double* xhat, const double* rstd, std::size_t rows,
                         const double* dy, double* dx) const {
  const double* g = store.value(gain);
  double* gg = store.grad(gain);
  double* gb = store.grad(bias);
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> dh(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* hr = xhat + r * d;
    const double* dyr = dy + r * d;
    double mean_dh = 0.0;
    double mean_dh_h = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      gg[i] += dyr[i] * hr[i];
      gb[i] += dyr[i];
      dh[i] = dyr[i] * g[i];
      mean_dh += dh[i];
      mean_dh_h += dh[i] * hr[i];
    }
    mean_dh /= static_cast<double>(d);
    mean_dh_h /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
      dx[r * d + i] += rstd[r] * (dh[i] - mean_dh - hr[i] * mean_dh_h);
    }
  }
}

void leaky_relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : kLeakySlope * x[i];
}

void leaky_relu_backward(const double* pre, const double* dy, double* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : kLeakySlope * dy[i];
}

DenseBlock DenseBlock::create(ParamStore& store, const std::string& name, ParamGroup group, int in,
                              int out) {
  return {Linear::create(store, name + ".linear", group, in, out),
          LayerNorm::create(store, name + ".norm", group, out)};
}

void DenseBlock::forward(const ParamStore& store, const std::vector<double>& x, Cache& c) const {
  const auto n = static_cast<std::size_t>(linear.out);
  c.input = x;
  std::vector<double> lin(n);
  linear.forward(store, x.data(), lin.data());
  c.xhat.resize(n);
  c.normed.resize(n);
  c.out.resize(n);
  norm.forward(store, lin.data(), 1, c.normed.data(), c.xhat.data(), &c.rstd);
  leaky_relu(c.normed.data(), c.out.data(), n);
}

void DenseBlock::backward(ParamStore& store, const Cache& c, const std::vector<double>& dy,
                          std::vector<double>* dx) const {
  const auto n = static_cast<std::size_t>(linear.out);
  std::vector<double> dnormed(n);
  leaky_relu_backward(c.normed.data(), dy.data(), dnormed.data(), n);
  std::vector<double> dlin(n, 0.0);
  norm.backward(store, c.xhat.data(), &c.rstd, 1, dnormed.data(), dlin.data());
  linear.backward(store, c.input.data(), dlin.data(), dx ? dx->data() : nullptr);
}

Mlp3 Mlp3::create(ParamStore& store, const std::string& name, ParamGroup group, int in, int hidden,
                  int out) {
  return {DenseBlock::create(store, name + ".0", group, in, hidden),
          DenseBlock::create(store, name + ".1", group, hidden, hidden),
          Linear::create(store, name + ".out", group, hidden, out)};
}

void Mlp3::init(ParamStore& store, std::mt19937_64& rng, bool zero_output) const {
  hidden1.linear.init_uniform(store, rng);
  hidden2.linear.init_uniform(store, rng);
  if (zero_output) {
    output.init_zero(store);
  } else {
    output.init_uniform(store, rng);
  }
}

void Mlp3::forward(const ParamStore& store, const std::vector<double>& x, Cache& c) const {
  hidden1.forward(store, x, c.h1);
  hidden2.forward(store, c.h1.out, c.h2);
  c.out.resize(static_cast<std::size_t>(output.out));
  output.forward(store, c.h2.out.data(), c.out.data());
}

void Mlp3::backward(ParamStore& store, const Cache& c, const std::vector<double>& dy,
                    std::vector<double>& dx) const {
  std::vector<double> dh2(static_cast<std::size_t>(output.in), 0.0);
  output.backward(store, c.h2.out.data(), dy.data(), dh2.data());
  std::vector<double> dh1(static_cast<std::size_t>(hidden2.linear.in), 0.0);
  hidden2.backward(store, c.h2, dh2, &dh1);
  hidden1.backward(store, c.h1, dh1, &dx);
}

}  // namespace protoscene::model
