// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/candidates.hpp"

#include <cmath>

namespace protoscene::model {

namespace {

Eigen::Matrix3d d_rotation_z(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Eigen::Matrix3d r;
  r << -s, -c, 0.0,
       c, -s, 0.0,
       0.0, 0.0, 0.0;
  return r;
}

Eigen::Matrix3d d_rotation_y(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Eigen::Matrix3d r;
  r << -s, 0.0, c,
       0.0, 0.0, 0.0,
       -c, 0.0, -s;
  return r;
}

}  // namespace

geom::PointCloud CandidateSet::candidate(int s, int k) const {
  geom::PointCloud c;
  const geom::Vec3* p = cloud(s, k);
  c.positions.assign(p, p + points_per_prototype);
  c.intensity = std::vector<double>(points_per_prototype, intensity[k]);
  c.frame = geom::Frame::kPatchNormalized;
  return c;
}

CandidateGrad::CandidateGrad(const CandidateSet& c)
    : slots(c.slots, SlotParamsGrad(c.prototypes)),
      points(c.points.size(), geom::Vec3::Zero()),
      intensity(c.prototypes, 0.0) {}

CandidateSet build_candidates(const std::vector<SlotParams>& params, const PrototypeBank& bank) {
  CandidateSet c;
  c.slots = static_cast<int>(params.size());
  c.prototypes = bank.count;
  c.points_per_prototype = bank.points_per_prototype;
  c.params = params;
  c.intensity = bank.intensity;
  c.points.resize(static_cast<std::size_t>(c.slots) * c.prototypes * c.points_per_prototype);
  std::vector<geom::Vec3> mult(bank.count);
  for (int k = 0; k < bank.count; ++k) mult[k] = bank.multiplier(k);
  for (int s = 0; s < c.slots; ++s) {
    const Eigen::Matrix3d m = params[s].transform.matrix();
    const geom::Vec3& t = params[s].transform.translation;
    for (int k = 0; k < c.prototypes; ++k) {
      geom::Vec3* out = c.points.data() + c.offset(s, k);
      for (int p = 0; p < c.points_per_prototype; ++p) {
        out[p] = m * bank.point(k, p).cwiseProduct(mult[k]) + t;
      }
    }
  }
  return c;
}

void candidates_backward(const CandidateSet& c, const PrototypeBank& bank, CandidateGrad& g,
                         PrototypeBankGrad& bg) {
  std::vector<geom::Vec3> mult(bank.count);
  std::vector<geom::Vec3> dmult(bank.count, geom::Vec3::Zero());
  for (int k = 0; k < bank.count; ++k) mult[k] = bank.multiplier(k);

  for (int s = 0; s < c.slots; ++s) {
    const geom::AffineTransform& tr = c.params[s].transform;
    const Eigen::Matrix3d m = tr.matrix();
    Eigen::Matrix3d dm = Eigen::Matrix3d::Zero();
    geom::Vec3 dt = geom::Vec3::Zero();
    for (int k = 0; k < c.prototypes; ++k) {
      const geom::Vec3* dy = g.points.data() + c.offset(s, k);
      for (int p = 0; p < c.points_per_prototype; ++p) {
        if (dy[p].isZero()) continue;
        const geom::Vec3& raw = bank.point(k, p);
        const geom::Vec3 q = raw.cwiseProduct(mult[k]);
        dm += dy[p] * q.transpose();
        dt += dy[p];
        const geom::Vec3 dq = m.transpose() * dy[p];
        bg.points[static_cast<std::size_t>(k) * bank.points_per_prototype + p] += dq.cwiseProduct(mult[k]);
        dmult[k] += dq.cwiseProduct(raw);
      }
    }
    SlotParamsGrad& sg = g.slots[s];
    sg.translation += dt;
    const Eigen::Matrix3d rz = geom::rotation_z(tr.rot_z);
    const Eigen::Matrix3d ry = geom::rotation_y(tr.tilt_y);
    const Eigen::Matrix3d inner = tr.linear ? *tr.linear : Eigen::Matrix3d(tr.scale.asDiagonal());
    sg.rot_z += (dm.cwiseProduct(d_rotation_z(tr.rot_z) * ry * inner)).sum();
    sg.tilt += (dm.cwiseProduct(rz * d_rotation_y(tr.tilt_y) * inner)).sum();
    const Eigen::Matrix3d dinner = (rz * ry).transpose() * dm;
    if (tr.linear) {
      sg.linear += dinner;
    } else {
      sg.scale += dinner.diagonal();
    }
  }

  for (int k = 0; k < bank.count; ++k) {
    const geom::Vec3 da = dmult[k].cwiseProduct(mult[k]);
    bg.aniso_scale[k] += da;
    bg.base_scale[k] += da.sum();
    bg.intensity[k] += g.intensity[k];
  }
}

}  // namespace protoscene::model
