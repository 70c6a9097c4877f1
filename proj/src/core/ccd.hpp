#pragma once

#include "contact.hpp"

#include <optional>

namespace hoipc {

struct CcdOptions {
  double tolerance = 1e-6;         // absolute width at which a candidate box is accepted
  double min_separation = 0.0;
  long max_boxes = 1'000'000;      // box budget; on exhaustion the earliest open box is returned
};

/// Earliest conservative time in [0, 1] at which point p comes within min_separation of the
/// triangle (t0, t1, t2), each moving linearly from start to end; nullopt when certified clear.
std::optional<double> point_triangle_ccd(const std::array<Vec3, 4>& start, const std::array<Vec3, 4>& end,
                                         const CcdOptions& opts = {});
/// As point_triangle_ccd for edges (ea0, ea1) and (eb0, eb1).
std::optional<double> edge_edge_ccd(const std::array<Vec3, 4>& start, const std::array<Vec3, 4>& end,
                                    const CcdOptions& opts = {});

struct MaxStepOptions {
  double tolerance_rel = 1e-6;   // relative to the bounding-box diagonal of the start positions
  double scale = 0.8;            // fraction of the earliest impact time that is returned
};

/// Largest step alpha in (0, 1] such that x0 + alpha p is intersection-free. Throws when x0
/// already has touching primitives.
double max_step(const ContactTopology& topo, const VecX& x0, const VecX& p, const MaxStepOptions& opts = {});

/// True when some edge crosses some non-adjacent triangle.
bool has_intersections(const ContactTopology& topo, const VecX& x);

}  // namespace hoipc
