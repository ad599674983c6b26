#include "podas/roadsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace podas::roadsim {
namespace {

constexpr int kMaxAttemptsPerHole = 10000;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

bool valid_range(const Range& r) {
  return std::isfinite(r.min) && std::isfinite(r.max) && r.min > 0.0 && r.min <= r.max;
}

}  // namespace

void validate(const RoadProfile& profile) {
  require(std::isfinite(profile.length_m) && profile.length_m > 0.0,
          "road length must be positive");
  podas::validate(profile.origin);
  double prev_end = 0.0;
  for (const auto& hole : profile.potholes) {
    require(hole.length_m > 0.0, "pothole length must be positive");
    require(hole.depth_in > 0.0, "pothole depth must be positive");
    require(hole.start_m >= prev_end, "potholes must be sorted and disjoint");
    require(hole.end_m() <= profile.length_m, "pothole extends past the end of the road");
    prev_end = hole.end_m();
  }
}

void validate(const VehicleConfig& vehicle) {
  require(vehicle.ride_height_in > 0.0, "ride height must be positive");
  require(vehicle.speed_mps > 0.0, "speed must be positive");
  require(vehicle.sample_spacing_m > 0.0, "sample spacing must be positive");
  require(vehicle.axle_footprint_m >= 0.0, "axle footprint must be non-negative");
}

void validate(const NoiseModel& noise) {
  require(noise.sigma_ultra_in >= 0.0 && noise.sigma_accel >= 0.0,
          "noise sigmas must be non-negative");
  require(noise.accel_gain >= 0.0, "accel gain must be non-negative");
  require(noise.accel_base >= 0.0, "accel base must be non-negative");
}

RoadProfile generate_profile(const ProfileParams& params) {
  require(std::isfinite(params.length_m) && params.length_m > 0.0,
          "road length must be positive");
  require(valid_range(params.depth_range_in), "depth range must be positive and ordered");
  require(valid_range(params.length_range_m), "length range must be positive and ordered");
  podas::validate(params.origin);

  RoadProfile profile;
  profile.length_m = params.length_m;
  profile.origin = params.origin;
  profile.bearing_deg = params.bearing_deg;
  profile.seed = params.seed;

  if (static_cast<double>(params.n_potholes) * params.length_range_m.max >
      params.length_m / 2.0) {
    throw InfeasiblePlacementError(
        "too many potholes for the road: n * max length exceeds half the road length");
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> hole_len(params.length_range_m.min,
                                                  params.length_range_m.max);
  std::uniform_real_distribution<double> hole_depth(params.depth_range_in.min,
                                                    params.depth_range_in.max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto& holes = profile.potholes;
  holes.reserve(params.n_potholes);
  for (std::size_t i = 0; i < params.n_potholes; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerHole && !placed; ++attempt) {
      const double len = hole_len(rng);
      const double start = unit(rng) * (params.length_m - len);
      const double depth = hole_depth(rng);
      const PotholeSpec cand{start, len, depth};
      const bool overlaps = std::any_of(holes.begin(), holes.end(), [&](const PotholeSpec& h) {
        return cand.start_m < h.end_m() && h.start_m < cand.end_m();
      });
      if (!overlaps) {
        holes.push_back(cand);
        placed = true;
      }
    }
    if (!placed) {
      throw InfeasiblePlacementError("rejection sampling failed to place pothole " +
                                     std::to_string(i));
    }
  }
  std::sort(holes.begin(), holes.end(),
            [](const PotholeSpec& a, const PotholeSpec& b) { return a.start_m < b.start_m; });
  return profile;
}

double depth_at(const RoadProfile& profile, double x_m) {
  if (!(x_m >= 0.0 && x_m < profile.length_m)) {
    throw ValidationError("position " + std::to_string(x_m) + " m is off the road");
  }
  // Last hole starting at or before x.
  auto it = std::upper_bound(
      profile.potholes.begin(), profile.potholes.end(), x_m,
      [](double x, const PotholeSpec& h) { return x < h.start_m; });
  if (it == profile.potholes.begin()) return 0.0;
  --it;
  return it->covers(x_m) ? it->depth_in : 0.0;
}

double max_depth_in(const RoadProfile& profile, double from_m, double to_m) noexcept {
  double deepest = 0.0;
  for (const auto& h : profile.potholes) {
    if (h.start_m >= to_m) break;
    if (h.end_m() > from_m) deepest = std::max(deepest, h.depth_in);
  }
  return deepest;
}

std::size_t sample_count(const RoadProfile& profile, const VehicleConfig& vehicle) {
  const double q = profile.length_m / vehicle.sample_spacing_m;
  // Absorb the rounding in e.g. 1000 / (1000 / 150).
  return static_cast<std::size_t>(std::ceil(q - q * 1e-12));
}

GeoPoint position_along(const RoadProfile& profile, double x_m) noexcept {
  return displace(profile.origin, profile.bearing_deg, x_m);
}

std::vector<SensorReading> sample_trace(const RoadProfile& profile,
                                        const VehicleConfig& vehicle,
                                        const NoiseModel& noise,
                                        const std::string& node_id,
                                        std::int64_t t0_ms, std::uint64_t seed) {
  validate(profile);
  validate(vehicle);
  validate(noise);
  if (node_id.empty()) throw ValidationError("node_id must not be empty");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t n = sample_count(profile, vehicle);
  const double half_footprint = vehicle.axle_footprint_m / 2.0;
  std::vector<SensorReading> trace;
  trace.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * vehicle.sample_spacing_m;
    const double depth = depth_at(profile, x);
    const double strike =
        std::max(depth, max_depth_in(profile, x - half_footprint, x + half_footprint));
    // Two draws per sample regardless of sigma so streams stay aligned.
    const double z_ultra = gauss(rng);
    const double z_accel = gauss(rng);

    SensorReading r;
    r.node_id = node_id;
    r.seq = static_cast<std::int64_t>(i);
    r.ts_ms = t0_ms + std::llround(1000.0 * x / vehicle.speed_mps);
    r.pos = position_along(profile, x);
    r.ultrasonic_in = vehicle.ride_height_in + depth;
    if (noise.sigma_ultra_in > 0.0) r.ultrasonic_in += noise.sigma_ultra_in * z_ultra;
    r.ultrasonic_in = std::max(0.0, r.ultrasonic_in);
    r.accel_z = noise.accel_base + noise.accel_gain * strike * vehicle.speed_mps;
    if (noise.sigma_accel > 0.0) r.accel_z += noise.sigma_accel * z_accel;
    r.accel_z = std::max(0.0, r.accel_z);
    trace.push_back(std::move(r));
  }
  return trace;
}

std::vector<GeoPoint> export_ground_truth(const RoadProfile& profile) {
  std::vector<GeoPoint> out;
  out.reserve(profile.potholes.size());
  for (const auto& h : profile.potholes) {
    out.push_back(position_along(profile, h.start_m + h.length_m / 2.0));
  }
  return out;
}

}  // namespace podas::roadsim
