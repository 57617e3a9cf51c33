// SPDX-License-Identifier: Apache-2.0

#include "protoscene/geometry/point_cloud.hpp"

#include <string>

#include "protoscene/errors.hpp"

namespace protoscene::geom {

namespace {

template <typename T>
void check_channel(const std::optional<std::vector<T>>& ch, std::size_t n, const char* name) {
  if (ch && ch->size() != n) {
    throw FormatError(std::string("channel '") + name + "' has " + std::to_string(ch->size()) +
                      " entries, expected " + std::to_string(n));
  }
}

template <typename T>
void copy_subset(const std::optional<std::vector<T>>& src, std::optional<std::vector<T>>& dst,
                 std::span<const std::size_t> indices) {
  if (!src) return;
  dst.emplace();
  dst->reserve(indices.size());
  for (std::size_t i : indices) dst->push_back((*src)[i]);
}

template <typename T>
void append_one(const std::optional<std::vector<T>>& src, std::optional<std::vector<T>>& dst,
                std::size_t i, std::size_t old_size) {
  if (!src) return;
  if (!dst) {
    if (old_size != 0) throw FormatError("append_from: channel sets differ");
    dst.emplace();
  }
  dst->push_back((*src)[i]);
}

}  // namespace

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  check_channel(intensity, n, "intensity");
  check_channel(color, n, "color");
  check_channel(class_label, n, "class");
  check_channel(instance_label, n, "instance");
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.frame = frame;
  out.positions.reserve(indices.size());
  for (std::size_t i : indices) out.positions.push_back(positions[i]);
  copy_subset(intensity, out.intensity, indices);
  copy_subset(color, out.color, indices);
  copy_subset(class_label, out.class_label, indices);
  copy_subset(instance_label, out.instance_label, indices);
  return out;
}

void PointCloud::append_from(const PointCloud& other, std::size_t i) {
  const std::size_t old = positions.size();
  positions.push_back(other.positions[i]);
  append_one(other.intensity, intensity, i, old);
  append_one(other.color, color, i, old);
  append_one(other.class_label, class_label, i, old);
  append_one(other.instance_label, instance_label, i, old);
}

void PointCloud::reserve(std::size_t n) {
  positions.reserve(n);
  if (intensity) intensity->reserve(n);
  if (color) color->reserve(n);
  if (class_label) class_label->reserve(n);
  if (instance_label) instance_label->reserve(n);
}

FeatureCloud positions_only(const PointCloud& p) {
  FeatureCloud f;
  f.dim = 3;
  f.coords.reserve(p.size() * 3);
  for (const Vec3& v : p.positions) {
    f.coords.push_back(v.x());
    f.coords.push_back(v.y());
    f.coords.push_back(v.z());
  }
  return f;
}

Bounds3 bounding_box(const PointCloud& p) {
  if (p.empty()) throw DomainError("bounding_box of an empty cloud");
  Bounds3 b{p.positions.front(), p.positions.front()};
  for (const Vec3& v : p.positions) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

}  // namespace protoscene::geom
