#pragma once

#include "efpp/geometry.hpp"
#include "efpp/point_process.hpp"

namespace efpp {

/// Visits the window boxes at L-infinity distance r from `center`. Returns
/// true when rings wider than r can still intersect the window.
template <typename Fn>
bool visit_ring_boxes(const WindowSpec& win, int dim, const BoxIndex& center, int r, Fn&& fn) {
  auto clip = [&](const BoxIndex& b) {
    if (win.contains_box(b, dim)) fn(b);
  };
  if (r == 0) {
    clip(center);
  } else if (dim == 2) {
    for (int dx = -r; dx <= r; ++dx) {
      clip(make_box(center.c[0] + dx, center.c[1] - r));
      clip(make_box(center.c[0] + dx, center.c[1] + r));
    }
    for (int dy = -r + 1; dy <= r - 1; ++dy) {
      clip(make_box(center.c[0] - r, center.c[1] + dy));
      clip(make_box(center.c[0] + r, center.c[1] + dy));
    }
  } else {
    for (int dz = -r; dz <= r; ++dz) {
      if (dz == -r || dz == r) {
        for (int dx = -r; dx <= r; ++dx) {
          for (int dy = -r; dy <= r; ++dy) {
            clip(make_box(center.c[0] + dx, center.c[1] + dy, center.c[2] + dz));
          }
        }
      } else {
        for (int dx = -r; dx <= r; ++dx) {
          clip(make_box(center.c[0] + dx, center.c[1] - r, center.c[2] + dz));
          clip(make_box(center.c[0] + dx, center.c[1] + r, center.c[2] + dz));
        }
        for (int dy = -r + 1; dy <= r - 1; ++dy) {
          clip(make_box(center.c[0] - r, center.c[1] + dy, center.c[2] + dz));
          clip(make_box(center.c[0] + r, center.c[1] + dy, center.c[2] + dz));
        }
      }
    }
  }
  for (int i = 0; i < dim; ++i) {
    if (center.c[i] - r > win.lo[i] || center.c[i] + r < win.hi[i]) return true;
  }
  return false;
}

}  // namespace efpp
