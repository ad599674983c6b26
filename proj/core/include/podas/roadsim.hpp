#pragma once

// Deterministic synthetic roads and the sensor traces a vehicle driving them
// would produce. Every generated value is a pure function of its inputs and
// the seed, so the same arguments always yield bit-identical output.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "podas/domain.hpp"

namespace podas::roadsim {

/// Placement failed: the requested potholes do not fit on the road.
class InfeasiblePlacementError : public Error {
 public:
  using Error::Error;
};

/// A pothole occupies the half-open interval [start_m, start_m + length_m).
struct PotholeSpec {
  double start_m = 0.0;
  double length_m = 0.0;
  double depth_in = 0.0;

  double end_m() const noexcept { return start_m + length_m; }
  bool covers(double x_m) const noexcept { return x_m >= start_m && x_m < end_m(); }

  friend bool operator==(const PotholeSpec&, const PotholeSpec&) = default;
};

struct RoadProfile {
  double length_m = 0.0;
  GeoPoint origin;
  double bearing_deg = 0.0;
  std::vector<PotholeSpec> potholes;  // sorted by start_m, pairwise disjoint
  std::uint64_t seed = 0;

  friend bool operator==(const RoadProfile&, const RoadProfile&) = default;
};

/// Throws ValidationError if the profile breaks its invariants.
void validate(const RoadProfile& profile);

struct VehicleConfig {
  double ride_height_in = 6.0;
  double speed_mps = 8.0;
  double sample_spacing_m = 1000.0 / 150.0;
  // Span of road around each sample over which a wheel strike shows up in the
  // accelerometer, centred on the sample position.
  double axle_footprint_m = 4.5;
};

void validate(const VehicleConfig& vehicle);

struct NoiseModel {
  double sigma_ultra_in = 0.25;
  double sigma_accel = 40.0;
  double accel_base = 950.0;
  double accel_gain = 25.0;  // counts per (inch of depth x m/s)

  static NoiseModel zero() { return {0.0, 0.0, 950.0, 25.0}; }
};

void validate(const NoiseModel& noise);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct ProfileParams {
  double length_m = 1000.0;
  std::size_t n_potholes = 25;
  Range depth_range_in{3.0, 8.0};
  Range length_range_m{0.5, 3.0};
  GeoPoint origin{13.35, 74.78};
  double bearing_deg = 90.0;
  std::uint64_t seed = 42;
};

/// Places `n_potholes` disjoint holes by rejection sampling.
/// Throws ValidationError on bad ranges or when n * max length exceeds half the
/// road, InfeasiblePlacementError if sampling gives up.
RoadProfile generate_profile(const ProfileParams& params);

/// Depth of the pothole covering `x_m`, or 0 on smooth road.
/// Throws ValidationError when x_m is outside [0, length_m).
double depth_at(const RoadProfile& profile, double x_m);

/// Deepest pothole intersecting [from_m, to_m), 0 when none does.
double max_depth_in(const RoadProfile& profile, double from_m, double to_m) noexcept;

/// Number of samples a trace over `profile` contains: ceil(length / spacing).
std::size_t sample_count(const RoadProfile& profile, const VehicleConfig& vehicle);

/// Position of the point `x_m` metres along the route.
GeoPoint position_along(const RoadProfile& profile, double x_m) noexcept;

std::vector<SensorReading> sample_trace(const RoadProfile& profile,
                                        const VehicleConfig& vehicle,
                                        const NoiseModel& noise,
                                        const std::string& node_id,
                                        std::int64_t t0_ms, std::uint64_t seed);

/// One centroid per pothole, in profile order.
std::vector<GeoPoint> export_ground_truth(const RoadProfile& profile);

}  // namespace podas::roadsim
