// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <numbers>
#include <string_view>

namespace protoscene::model {

enum class TransformMode { kConstrained, kFullAffine };

/// Architecture and expressivity settings of the reconstruction model.
struct ModelConfig {
  int slots = 64;
  int prototypes = 6;
  int points_per_prototype = 256;

  /// Cubic encoder grid spanning the patch; must be a power of two.
  int grid_resolution = 64;
  /// Scene-specific voxel edge in metres. The patch side defaults to
  /// grid_resolution * voxel_size_m.
  double voxel_size_m = 0.4;

  int point_width = 16;
  int scene_width = 1024;
  int slot_width = 128;

  TransformMode transform_mode = TransformMode::kConstrained;
  bool use_intensity = true;

  double scale_min = 0.5;
  double scale_max = 2.0;
  double max_tilt = std::numbers::pi / 10.0;

  /// Prototype initialisation: per-axis cuboid half extents ~ U[min, max].
  double init_half_extent_min = 0.05;
  double init_half_extent_max = 0.3;

  // Expressivity switches; a disabled group is never unlocked.
  bool learn_intensities = true;
  bool learn_scales = true;
  bool learn_prototype_points = true;
  bool learn_aniso_scale = true;

  /// Throws ParameterError on inconsistent settings.
  void validate() const;
  int encoder_levels() const;
  int level_width(int level) const;
};

/// Parameter groups, in the order the curriculum unlocks them.
enum class ParamGroup {
  kEncoder,
  kSlotFeatures,
  kHeadProba,
  kHeadRotY,
  kHeadRotZ,
  kHeadTranslate,
  kProtoIntensity,
  kProtoBaseScale,
  kHeadScale,
  kProtoPoints,
  kProtoAnisoScale,
};

inline constexpr std::array kAllGroups = {
    ParamGroup::kEncoder,        ParamGroup::kSlotFeatures,   ParamGroup::kHeadProba,
    ParamGroup::kHeadRotY,       ParamGroup::kHeadRotZ,       ParamGroup::kHeadTranslate,
    ParamGroup::kProtoIntensity, ParamGroup::kProtoBaseScale, ParamGroup::kHeadScale,
    ParamGroup::kProtoPoints,    ParamGroup::kProtoAnisoScale};

std::string_view group_name(ParamGroup g);

/// Prototype groups are optimised without weight decay.
bool is_prototype_group(ParamGroup g);

/// Curriculum stage 1..5 (0 = before training, nothing unlocked). Stages
/// unlock cumulatively: (1) slot transforms and probabilities, (2) prototype
/// intensities, (3) prototype scales, (4) prototype points, (5) anisotropic
/// scalings.
struct CurriculumStage {
  int index = 1;

  /// Stage at which `g` becomes trainable.
  static int unlock_stage(ParamGroup g);

  bool unlocked(ParamGroup g, const ModelConfig& cfg) const;

  /// Whether slot scale channels are active, and whether they are tied.
  bool scale_active(const ModelConfig& cfg) const;
  bool scale_independent(const ModelConfig& cfg) const;

  /// Whether stage `index` unlocks anything under `cfg` (disabled stages are skipped).
  static bool stage_enabled(int index, const ModelConfig& cfg);
};

}  // namespace protoscene::model
