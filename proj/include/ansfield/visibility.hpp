#pragma once

#include <limits>
#include <string>
#include <vector>

#include "ansfield/scene.hpp"

namespace ansfield {

inline constexpr int kDefaultBoundarySamples = 256;

/// What a 360° view from one pose reveals about one object.
struct Observation {
    std::string object_id;
    /// Fraction of boundary samples with unobstructed line of sight.
    double visible_fraction = 0.0;
    /// Radians subtended by the visible portion.
    double angular_extent = 0.0;
    /// Meters to the nearest visible boundary point; +inf when nothing is visible.
    double distance = std::numeric_limits<double>::infinity();
};

/// Line of sight test between p and q. Walls and every footprint occlude,
/// except the footprint that owns q.
bool occluded(const Scene& scene, Vec2 p, Vec2 q);

/// Same test with the excluded footprint given by index (-1 excludes nothing).
bool occluded_excluding(const Scene& scene, Vec2 p, Vec2 q, int skip_object);

Observation observe(const Scene& scene, const Pose& pose, const std::string& object_id,
                    int n_samples = kDefaultBoundarySamples);

/// One observation per scene object, ordered by object id.
std::vector<Observation> panorama(const Scene& scene, const Pose& pose, int n_samples = kDefaultBoundarySamples);

/// Observations of just the listed objects, in the given order.
std::vector<Observation> observe_objects(const Scene& scene, const Pose& pose, const std::vector<std::string>& ids,
                                         int n_samples = kDefaultBoundarySamples);

/// Angle subtended by the whole footprint from p (p outside the footprint).
double subtended_angle(const Rect& footprint, Vec2 p);

nlohmann::json to_json(const Observation& o);

}  // namespace ansfield
