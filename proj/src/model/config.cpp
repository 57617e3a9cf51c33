// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/config.hpp"

#include <algorithm>
#include <bit>

#include "protoscene/errors.hpp"

namespace protoscene::model {

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("model config: ") + what);
  };
  require(slots >= 1, "slots must be >= 1");
  require(prototypes >= 1, "prototypes must be >= 1");
  require(points_per_prototype >= 1, "points_per_prototype must be >= 1");
  require(grid_resolution >= 2 && std::has_single_bit(static_cast<unsigned>(grid_resolution)),
          "grid_resolution must be a power of two >= 2");
  require(voxel_size_m > 0.0, "voxel_size_m must be positive");
  require(point_width >= 1 && scene_width >= 1 && slot_width >= 1, "widths must be positive");
  require(scale_min < 1.0 && scale_max > 1.0, "scale bounds must bracket 1");
  require(max_tilt >= 0.0, "max_tilt must be non-negative");
  require(init_half_extent_min > 0.0 && init_half_extent_max >= init_half_extent_min,
          "init half extents must satisfy 0 < min <= max");
}

int ModelConfig::encoder_levels() const {
  return std::countr_zero(static_cast<unsigned>(grid_resolution));
}

int ModelConfig::level_width(int level) const {
  const int levels = encoder_levels();
  if (level >= levels) return scene_width;
  int w = point_width;
  for (int i = 0; i < level; ++i) w = std::min(2 * w, scene_width);
  return w;
}

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kSlotFeatures: return "slot_features";
    case ParamGroup::kHeadProba: return "head_proba";
    case ParamGroup::kHeadRotY: return "head_rot_y";
    case ParamGroup::kHeadRotZ: return "head_rot_z";
    case ParamGroup::kHeadTranslate: return "head_translate";
    case ParamGroup::kProtoIntensity: return "proto_intensity";
    case ParamGroup::kProtoBaseScale: return "proto_base_scale";
    case ParamGroup::kHeadScale: return "head_scale";
    case ParamGroup::kProtoPoints: return "proto_points";
    case ParamGroup::kProtoAnisoScale: return "proto_aniso_scale";
  }
  return "?";
}

bool is_prototype_group(ParamGroup g) {
  return g == ParamGroup::kProtoIntensity || g == ParamGroup::kProtoBaseScale ||
         g == ParamGroup::kProtoPoints || g == ParamGroup::kProtoAnisoScale;
}

int CurriculumStage::unlock_stage(ParamGroup g) {
  switch (g) {
    case ParamGroup::kProtoIntensity: return 2;
    case ParamGroup::kProtoBaseScale:
    case ParamGroup::kHeadScale: return 3;
    case ParamGroup::kProtoPoints: return 4;
    case ParamGroup::kProtoAnisoScale: return 5;
    default: return 1;
  }
}

namespace {

bool group_enabled(ParamGroup g, const ModelConfig& cfg) {
  switch (g) {
    case ParamGroup::kProtoIntensity: return cfg.learn_intensities && cfg.use_intensity;
    case ParamGroup::kProtoBaseScale:
    case ParamGroup::kHeadScale: return cfg.learn_scales;
    case ParamGroup::kProtoPoints: return cfg.learn_prototype_points;
    case ParamGroup::kProtoAnisoScale: return cfg.learn_aniso_scale && cfg.learn_scales;
    default: return true;
  }
}

}  // namespace

bool CurriculumStage::unlocked(ParamGroup g, const ModelConfig& cfg) const {
  return group_enabled(g, cfg) && index >= unlock_stage(g);
}

bool CurriculumStage::scale_active(const ModelConfig& cfg) const {
  return unlocked(ParamGroup::kHeadScale, cfg);
}

bool CurriculumStage::scale_independent(const ModelConfig& cfg) const {
  return scale_active(cfg) && cfg.learn_aniso_scale && index >= 5;
}

bool CurriculumStage::stage_enabled(int index, const ModelConfig& cfg) {
  for (ParamGroup g : kAllGroups) {
    if (unlock_stage(g) == index && group_enabled(g, cfg)) return true;
  }
  return false;
}

}  // namespace protoscene::model
