// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protoscene/errors.hpp"
#include "protoscene/simd/kernels.hpp"

namespace protoscene::model {

namespace {

std::int64_t site_id(int x, int y, int z, int res) {
  return (static_cast<std::int64_t>(x) * res + y) * res + z;
}

std::int32_t find_site(const std::vector<std::int64_t>& sites, std::int64_t id) {
  const auto it = std::lower_bound(sites.begin(), sites.end(), id);
  if (it == sites.end() || *it != id) return -1;
  return static_cast<std::int32_t>(it - sites.begin());
}

void norm_act_forward(const ParamStore& store, const LayerNorm& norm, std::size_t rows,
                      SceneEncoder::NormAct& na) {
  const std::size_t n = na.pre.size();
  na.xhat.resize(n);
  na.normed.resize(n);
  na.out.resize(n);
  na.rstd.resize(rows);
  norm.forward(store, na.pre.data(), rows, na.normed.data(), na.xhat.data(), na.rstd.data());
  leaky_relu(na.normed.data(), na.out.data(), n);
}

std::vector<double> norm_act_backward(ParamStore& store, const LayerNorm& norm,
                                      const SceneEncoder::NormAct& na, const std::vector<double>& dout) {
  const std::size_t n = na.pre.size();
  std::vector<double> dnormed(n);
  leaky_relu_backward(na.normed.data(), dout.data(), dnormed.data(), n);
  std::vector<double> dpre(n, 0.0);
  norm.backward(store, na.xhat.data(), na.rstd.data(), na.rstd.size(), dnormed.data(), dpre.data());
  return dpre;
}

}  // namespace

SparseConv SparseConv::create(ParamStore& store, const std::string& name, int taps, int in, int out) {
  SparseConv c;
  c.taps = taps;
  c.in = in;
  c.out = out;
  c.weight = store.add(name + ".weight", ParamGroup::kEncoder,
                       {static_cast<std::size_t>(taps), static_cast<std::size_t>(out),
                        static_cast<std::size_t>(in)});
  c.bias = store.add(name + ".bias", ParamGroup::kEncoder, {static_cast<std::size_t>(out)});
  return c;
}

void SparseConv::init_uniform(ParamStore& store, std::mt19937_64& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(taps * in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : store[weight].value) w = u(rng);
  for (double& b : store[bias].value) b = u(rng);
}

void SparseConv::forward(const ParamStore& store, const std::vector<double>& x,
                         const std::vector<std::int32_t>& tap_index, std::size_t n_out,
                         std::vector<double>& y) const {
  const auto& k = simd::kernels();
  const double* w = store.value(weight);
  const double* b = store.value(bias);
  y.assign(n_out * out, 0.0);
  const std::size_t tap_stride = static_cast<std::size_t>(out) * in;
  for (std::size_t j = 0; j < n_out; ++j) {
    double* yj = y.data() + j * out;
    for (int o = 0; o < out; ++o) yj[o] = b[o];
    for (int t = 0; t < taps; ++t) {
      const std::int32_t src = tap_index[j * taps + t];
      if (src < 0) continue;
      const double* xs = x.data() + static_cast<std::size_t>(src) * in;
      const double* wt = w + t * tap_stride;
      for (int o = 0; o < out; ++o) yj[o] += k.dot(wt + static_cast<std::size_t>(o) * in, xs, in);
    }
  }
}

void SparseConv::backward(ParamStore& store, const std::vector<double>& x,
                          const std::vector<std::int32_t>& tap_index, const std::vector<double>& dy,
                          std::vector<double>& dx) const {
  const auto& k = simd::kernels();
  const double* w = store.value(weight);
  double* gw = store.grad(weight);
  double* gb = store.grad(bias);
  const std::size_t n_out = dy.size() / out;
  const std::size_t tap_stride = static_cast<std::size_t>(out) * in;
  for (std::size_t j = 0; j < n_out; ++j) {
    const double* dyj = dy.data() + j * out;
    for (int o = 0; o < out; ++o) gb[o] += dyj[o];
    for (int t = 0; t < taps; ++t) {
      const std::int32_t src = tap_index[j * taps + t];
      if (src < 0) continue;
      const double* xs = x.data() + static_cast<std::size_t>(src) * in;
      double* dxs = dx.data() + static_cast<std::size_t>(src) * in;
      const double* wt = w + t * tap_stride;
      double* gwt = gw + t * tap_stride;
      for (int o = 0; o < out; ++o) {
        const double g = dyj[o];
        if (g == 0.0) continue;
        k.axpy(g, xs, gwt + static_cast<std::size_t>(o) * in, in);
        k.axpy(g, wt + static_cast<std::size_t>(o) * in, dxs, in);
      }
    }
  }
}

Rulebook build_rulebook(const std::vector<std::int64_t>& level0_sites, int resolution) {
  Rulebook rb;
  rb.sites.push_back(level0_sites);
  for (int res = resolution; res > 1; res /= 2) {
    const auto& sites = rb.sites.back();
    // Submanifold neighbourhood at this level.
    std::vector<std::int32_t> nb(sites.size() * 27, -1);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const std::int64_t id = sites[i];
      const int z = static_cast<int>(id % res);
      const int y = static_cast<int>((id / res) % res);
      const int x = static_cast<int>(id / (static_cast<std::int64_t>(res) * res));
      int t = 0;
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz, ++t) {
            const int nx = x + dx;
            const int ny = y + dy;
            const int nz = z + dz;
            if (nx < 0 || ny < 0 || nz < 0 || nx >= res || ny >= res || nz >= res) continue;
            nb[i * 27 + t] = find_site(sites, site_id(nx, ny, nz, res));
          }
        }
      }
    }
    rb.neighbors.push_back(std::move(nb));

    // Coarser level: parents of the active sites.
    const int coarse = res / 2;
    std::vector<std::int64_t> parents;
    parents.reserve(sites.size());
    for (std::int64_t id : sites) {
      const int z = static_cast<int>(id % res);
      const int y = static_cast<int>((id / res) % res);
      const int x = static_cast<int>(id / (static_cast<std::int64_t>(res) * res));
      parents.push_back(site_id(x / 2, y / 2, z / 2, coarse));
    }
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    std::vector<std::int32_t> ch(parents.size() * 8, -1);
    for (std::size_t j = 0; j < parents.size(); ++j) {
      const std::int64_t id = parents[j];
      const int z = static_cast<int>(id % coarse);
      const int y = static_cast<int>((id / coarse) % coarse);
      const int x = static_cast<int>(id / (static_cast<std::int64_t>(coarse) * coarse));
      int t = 0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          for (int c = 0; c < 2; ++c, ++t) {
            ch[j * 8 + t] = find_site(sites, site_id(2 * x + a, 2 * y + b, 2 * z + c, res));
          }
        }
      }
    }
    rb.children.push_back(std::move(ch));
    rb.sites.push_back(std::move(parents));
  }
  return rb;
}

geom::VoxelGrid encoder_grid(const geom::PointCloud& patch, int resolution) {
  return geom::voxelize(patch, {resolution, resolution, resolution}, 2.0 / resolution,
                        geom::Vec3(-1.0, -1.0, 0.0));
}

std::vector<double> point_descriptors(const geom::PointCloud& patch, const geom::VoxelGrid& grid) {
  std::vector<double> d(patch.size() * kDescriptorWidth);
  for (std::size_t i = 0; i < patch.size(); ++i) {
    double* row = d.data() + i * kDescriptorWidth;
    const geom::Vec3& p = patch.positions[i];
    row[0] = p.x();
    row[1] = p.y();
    row[2] = p.z();
    for (int c = 0; c < 3; ++c) row[3 + c] = patch.color ? (*patch.color)[i][c] : kMissingChannelFill;
    row[6] = patch.intensity ? (*patch.intensity)[i] : kMissingChannelFill;
    const geom::Vec3 center = grid.center_of(grid.index_of(grid.point_voxel[i]));
    const geom::Vec3 off = (p - center) / grid.voxel_size;
    row[7] = off.x();
    row[8] = off.y();
    row[9] = off.z();
  }
  return d;
}

SceneEncoder SceneEncoder::create(ParamStore& store, const ModelConfig& cfg) {
  cfg.validate();
  SceneEncoder e;
  e.resolution_ = cfg.grid_resolution;
  e.point_ = Linear::create(store, "encoder.point", ParamGroup::kEncoder, kDescriptorWidth, cfg.point_width);
  const int levels = cfg.encoder_levels();
  for (int l = 0; l < levels; ++l) {
    const int w = cfg.level_width(l);
    const int w_next = cfg.level_width(l + 1);
    const std::string base = "encoder.level" + std::to_string(l);
    e.subm_.push_back(SparseConv::create(store, base + ".subm", 27, w, w));
    e.subm_norm_.push_back(LayerNorm::create(store, base + ".subm_norm", ParamGroup::kEncoder, w));
    e.down_.push_back(SparseConv::create(store, base + ".down", 8, w, w_next));
    e.down_norm_.push_back(LayerNorm::create(store, base + ".down_norm", ParamGroup::kEncoder, w_next));
  }
  return e;
}

void SceneEncoder::init(ParamStore& store, std::mt19937_64& rng) const {
  point_.init_uniform(store, rng);
  for (const auto& c : subm_) c.init_uniform(store, rng);
  for (const auto& c : down_) c.init_uniform(store, rng);
}

std::vector<double> SceneEncoder::forward(const ParamStore& store, const geom::PointCloud& patch,
                                          Cache& c) const {
  if (patch.empty()) throw DomainError("encoder: empty patch");
  const geom::VoxelGrid grid = encoder_grid(patch, resolution_);
  c.descriptors = point_descriptors(patch, grid);

  const int w0 = point_.out;
  const std::size_t n_points = patch.size();
  c.point_features.resize(n_points * w0);
  for (std::size_t i = 0; i < n_points; ++i) {
    point_.forward(store, c.descriptors.data() + i * kDescriptorWidth, c.point_features.data() + i * w0);
  }

  const std::size_t n0 = grid.occupied.size();
  std::vector<double> pooled(n0 * w0, -std::numeric_limits<double>::infinity());
  c.pool_argmax.assign(n0 * w0, -1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const std::size_t v = static_cast<std::size_t>(grid.point_slot[i]);
    const double* f = c.point_features.data() + i * w0;
    for (int ch = 0; ch < w0; ++ch) {
      // Strict comparison: the first point attaining the max wins.
      if (f[ch] > pooled[v * w0 + ch]) {
        pooled[v * w0 + ch] = f[ch];
        c.pool_argmax[v * w0 + ch] = static_cast<std::int32_t>(i);
      }
    }
  }

  c.rulebook = build_rulebook(grid.occupied, resolution_);
  const std::size_t levels = subm_.size();
  c.level_input.assign(levels + 1, {});
  c.subm.assign(levels, {});
  c.down.assign(levels, {});
  c.level_input[0] = std::move(pooled);
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t n_l = c.rulebook.sites[l].size();
    subm_[l].forward(store, c.level_input[l], c.rulebook.neighbors[l], n_l, c.subm[l].pre);
    norm_act_forward(store, subm_norm_[l], n_l, c.subm[l]);
    const std::size_t n_next = c.rulebook.sites[l + 1].size();
    down_[l].forward(store, c.subm[l].out, c.rulebook.children[l], n_next, c.down[l].pre);
    norm_act_forward(store, down_norm_[l], n_next, c.down[l]);
    c.level_input[l + 1] = c.down[l].out;
  }
  return c.level_input[levels];
}

void SceneEncoder::backward(ParamStore& store, const Cache& c, const std::vector<double>& dfeature) const {
  const std::size_t levels = subm_.size();
  std::vector<double> dv = dfeature;
  for (std::size_t l = levels; l-- > 0;) {
    const std::vector<double> ddown = norm_act_backward(store, down_norm_[l], c.down[l], dv);
    std::vector<double> du(c.subm[l].out.size(), 0.0);
    down_[l].backward(store, c.subm[l].out, c.rulebook.children[l], ddown, du);
    const std::vector<double> dsubm = norm_act_backward(store, subm_norm_[l], c.subm[l], du);
    std::vector<double> dprev(c.level_input[l].size(), 0.0);
    subm_[l].backward(store, c.level_input[l], c.rulebook.neighbors[l], dsubm, dprev);
    dv = std::move(dprev);
  }
  const int w0 = point_.out;
  const std::size_t n_points = c.point_features.size() / w0;
  std::vector<double> dpoint(n_points * w0, 0.0);
  for (std::size_t v = 0; v < c.pool_argmax.size() / w0; ++v) {
    for (int ch = 0; ch < w0; ++ch) {
      const std::int32_t i = c.pool_argmax[v * w0 + ch];
      dpoint[static_cast<std::size_t>(i) * w0 + ch] += dv[v * w0 + ch];
    }
  }
  for (std::size_t i = 0; i < n_points; ++i) {
    point_.backward(store, c.descriptors.data() + i * kDescriptorWidth, dpoint.data() + i * w0, nullptr);
  }
}

}  // namespace protoscene::model
