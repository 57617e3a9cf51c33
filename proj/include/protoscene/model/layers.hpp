// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense layers with explicit backward passes. Activations are cached
// by the caller; layers only hold parameter indices into a ParamStore.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "protoscene/model/params.hpp"

namespace protoscene::model {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kLayerNormEps = 1e-5;

/// y = W x + b with W stored row-major (out x in).
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int in = 0;
  int out = 0;

  static Linear create(ParamStore& store, const std::string& name, ParamGroup group, int in, int out);

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(ParamStore& store, std::mt19937_64& rng) const;
  void init_zero(ParamStore& store) const;

  void forward(const ParamStore& store, const double* x, double* y) const;

  /// Accumulates parameter gradients; adds W^T dy into `dx` when non-null.
  void backward(ParamStore& store, const double* x, const double* dy, double* dx) const;
};

/// Row-wise layer normalisation with learnable gain and bias.
struct LayerNorm {
  std::size_t gain = 0;
  std::size_t bias = 0;
  int dim = 0;

  static LayerNorm create(ParamStore& store, const std::string& name, ParamGroup group, int dim);

  /// `rows` rows of width `dim`; stores normalised inputs and 1/std per row.
  void forward(const ParamStore& store, const double* x, std::size_t rows, double* y, double* xhat,
               double* rstd) const;

  /// Adds the input gradient into `dx`.
  void backward(ParamStore& store, const double* xhat, const double* rstd, std::size_t rows,
                const double* dy, double* dx) const;
};

void leaky_relu(const double* x, double* y, std::size_t n);

/// dx = dy * leaky'(pre)  (overwrites dx)
void leaky_relu_backward(const double* pre, const double* dy, double* dx, std::size_t n);

/// Linear -> LayerNorm -> LeakyReLU on a single row.
struct DenseBlock {
  Linear linear;
  LayerNorm norm;

  struct Cache {
    std::vector<double> input;
    std::vector<double> xhat;
    std::vector<double> normed;
    std::vector<double> out;
    double rstd = 0.0;
  };

  static DenseBlock create(ParamStore& store, const std::string& name, ParamGroup group, int in, int out);
  void forward(const ParamStore& store, const std::vector<double>& x, Cache& cache) const;
  void backward(ParamStore& store, const Cache& cache, const std::vector<double>& dy,
                std::vector<double>* dx) const;
};

/// Three-layer MLP: two dense blocks followed by a linear output layer.
struct Mlp3 {
  DenseBlock hidden1;
  DenseBlock hidden2;
  Linear output;

  struct Cache {
    DenseBlock::Cache h1;
    DenseBlock::Cache h2;
    std::vector<double> out;
  };

  static Mlp3 create(ParamStore& store, const std::string& name, ParamGroup group, int in, int hidden,
                     int out);
  void init(ParamStore& store, std::mt19937_64& rng, bool zero_output) const;
  void forward(const ParamStore& store, const std::vector<double>& x, Cache& cache) const;
  void backward(ParamStore& store, const Cache& cache, const std::vector<double>& dy,
                std::vector<double>& dx) const;
};

}  // namespace protoscene::model
