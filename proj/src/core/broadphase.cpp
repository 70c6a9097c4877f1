#include "broadphase.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace hoipc {

namespace {

// Boxes covering more cells than this are checked against everything instead of being hashed.
constexpr std::int64_t kMaxCellsPerBox = 512;

struct CellRange {
  std::array<std::int64_t, 3> lo, hi;
  std::int64_t count() const { return (hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1); }
};

CellRange cells_of(const Box3& box, double cell) {
  CellRange r;
  for (int d = 0; d < 3; ++d) {
    r.lo[d] = static_cast<std::int64_t>(std::floor(box.min()[d] / cell));
    r.hi[d] = static_cast<std::int64_t>(std::floor(box.max()[d] / cell));
  }
  return r;
}

std::uint64_t cell_key(std::int64_t x, std::int64_t y, std::int64_t z) {
  return (static_cast<std::uint64_t>(x) * 73856093ULL) ^ (static_cast<std::uint64_t>(y) * 19349663ULL) ^
         (static_cast<std::uint64_t>(z) * 83492791ULL);
}

}  // namespace

std::vector<std::pair<int, int>> overlapping_pairs(const std::vector<Box3>& a, const std::vector<Box3>& b,
                                                   double cell, bool same) {
  if (!(cell > 0.0)) throw Error(ErrorCode::kInvalidArgument, "broad phase cell size must be positive");
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  std::vector<int> large_b;
  for (int j = 0; j < static_cast<int>(b.size()); ++j) {
    if (b[j].isEmpty()) continue;
    const auto r = cells_of(b[j], cell);
    if (r.count() > kMaxCellsPerBox) {
      large_b.push_back(j);
      continue;
    }
    for (auto x = r.lo[0]; x <= r.hi[0]; ++x)
      for (auto y = r.lo[1]; y <= r.hi[1]; ++y)
        for (auto z = r.lo[2]; z <= r.hi[2]; ++z) grid[cell_key(x, y, z)].push_back(j);
  }
  std::vector<std::pair<int, int>> out;
  auto consider = [&](int i, int j) {
    if (same && i == j) return;
    if (!a[i].intersects(b[j])) return;
    out.emplace_back(same ? std::min(i, j) : i, same ? std::max(i, j) : j);
  };
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    if (a[i].isEmpty()) continue;
    const auto r = cells_of(a[i], cell);
    if (r.count() > kMaxCellsPerBox) {
      for (int j = 0; j < static_cast<int>(b.size()); ++j) consider(i, j);
      continue;
    }
    for (auto x = r.lo[0]; x <= r.hi[0]; ++x)
      for (auto y = r.lo[1]; y <= r.hi[1]; ++y)
        for (auto z = r.lo[2]; z <= r.hi[2]; ++z) {
          auto it = grid.find(cell_key(x, y, z));
          if (it == grid.end()) continue;
          for (int j : it->second) consider(i, j);
        }
    for (int j : large_b) consider(i, j);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hoipc
