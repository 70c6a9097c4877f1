#pragma once

#include "types.hpp"

#include <Eigen/Geometry>

#include <utility>
#include <vector>

namespace hoipc {

using Box3 = Eigen::AlignedBox3d;

/// All pairs (i, j) with boxes a[i] and b[j] overlapping, found through a uniform spatial hash
/// with the given cell size. Output is sorted and free of duplicates. When `same` is set, a and
/// b are the same list and only pairs with i < j are reported.
std::vector<std::pair<int, int>> overlapping_pairs(const std::vector<Box3>& a, const std::vector<Box3>& b,
                                                   double cell, bool same = false);

}  // namespace hoipc
