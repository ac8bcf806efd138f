#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcbf/robot_model.hpp"
#include "pcbf/types.hpp"

namespace pcbf {

struct ScaSample {
  Vec q;
  bool collided = false;
  double clearance = 0.0;  // capsule-oracle clearance [m]
};

struct ScaDataset {
  Vec lower;  // joint limits used for sampling and input normalization
  Vec upper;
  std::vector<ScaSample> samples;

  std::size_t collided_count() const;
  std::size_t free_count() const { return samples.size() - collided_count(); }
};

/// Uniform samples inside the joint limits plus boundary samples found by
/// bisecting between nearby configurations of opposite label until
/// |clearance| < boundary_tolerance. Deterministic in `seed`.
ScaDataset sample_sca_dataset(const RobotModel& model, std::size_t n_total, double boundary_fraction,
                              std::uint64_t seed, double boundary_tolerance = 0.005);

/// Workspace region used for query points of the joint-space distance model.
struct JsdfSampling {
  Vec3 box_lower{-1.0, -1.0, -0.2};
  Vec3 box_upper{1.0, 1.0, 1.4};
  double near_fraction = 0.5;    // points scattered around link capsules
  double near_band = 0.35;       // max offset from a capsule surface [m]
  double far_fraction = 0.05;    // points on a far shell, for extrapolation
  double far_radius_min = 1.4;
  double far_radius_max = 2.6;
};

struct JsdfSample {
  Vec q;
  Vec3 point = Vec3::Zero();
  Vec distances;  // one per moving link
};

struct JsdfDataset {
  Vec lower;
  Vec upper;
  JsdfSampling region;
  std::vector<JsdfSample> samples;
};

JsdfDataset sample_jsdf_dataset(const RobotModel& model, std::size_t n_total, std::uint64_t seed,
                                const JsdfSampling& region = {});

/// CSV with a header row; doubles are written round-trip exact.
void save_sca_csv(const ScaDataset& data, const std::filesystem::path& path);
ScaDataset load_sca_csv(const std::filesystem::path& path, const Vec& lower, const Vec& upper);
void save_jsdf_csv(const JsdfDataset& data, const std::filesystem::path& path);

}  // namespace pcbf
