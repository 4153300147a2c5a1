// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "epichart/core/event_queue.hpp"

namespace epichart {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist2(Vec2 a, Vec2 b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Uniform-grid index over a non-toroidal rectangle. Cell size defaults to
// the largest radius the model will query so a query touches at most a 3x3
// block; larger radii still work, the scan just widens. Queries are exact
// Euclidean balls (distance <= r, self excluded).
class SpatialIndex {
 public:
  SpatialIndex() = default;

  SpatialIndex(double width, double height, double cell_size) {
    reset(width, height, cell_size);
  }

  void reset(double width, double height, double cell_size) {
    if (!(width > 0.0) || !(height > 0.0) || !(cell_size > 0.0)) {
      throw std::invalid_argument("SpatialIndex: non-positive dimensions");
    }
    width_ = width;
    height_ = height;
    cell_ = cell_size;
    nx_ = std::max<int>(1, static_cast<int>(std::ceil(width / cell_size)));
    ny_ = std::max<int>(1, static_cast<int>(std::ceil(height / cell_size)));
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  }

  double width() const { return width_; }
  double height() const { return height_; }

  void insert(AgentId id, Vec2 p) { cells_[cell_of(p)].push_back(id); }

  void remove(AgentId id, Vec2 p) {
    auto& cell = cells_[cell_of(p)];
    auto it = std::find(cell.begin(), cell.end(), id);
    if (it == cell.end()) {
      throw std::logic_error("SpatialIndex::remove: agent not in cell");
    }
    cell.erase(it);
  }

  void move(AgentId id, Vec2 from, Vec2 to) {
    std::size_t a = cell_of(from);
    std::size_t b = cell_of(to);
    if (a == b) return;
    auto& cell = cells_[a];
    auto it = std::find(cell.begin(), cell.end(), id);
    if (it == cell.end()) {
      throw std::logic_error("SpatialIndex::move: agent not in cell");
    }
    cell.erase(it);
    cells_[b].push_back(id);
  }

  // Appends ids within Euclidean distance <= radius of `center`, excluding
  // `self`. `positions` maps id -> current position (the caller owns it).
  template <typename PositionOf>
  void neighbors_within(Vec2 center, double radius, AgentId self,
                        PositionOf&& position_of,
                        std::vector<AgentId>& out) const {
    if (radius < 0.0) return;
    double r2 = radius * radius;
    int cx0 = clamp_x(static_cast<int>(std::floor((center.x - radius) / cell_)));
    int cx1 = clamp_x(static_cast<int>(std::floor((center.x + radius) / cell_)));
    int cy0 = clamp_y(static_cast<int>(std::floor((center.y - radius) / cell_)));
    int cy1 = clamp_y(static_cast<int>(std::floor((center.y + radius) / cell_)));
    for (int cy = cy0; cy <= cy1; ++cy) {
      for (int cx = cx0; cx <= cx1; ++cx) {
        const auto& cell = cells_[static_cast<std::size_t>(cy) * nx_ + cx];
        for (AgentId id : cell) {
          if (id == self) continue;
          if (dist2(position_of(id), center) <= r2) out.push_back(id);
        }
      }
    }
  }

 private:
  std::size_t cell_of(Vec2 p) const {
    int cx = clamp_x(static_cast<int>(std::floor(p.x / cell_)));
    int cy = clamp_y(static_cast<int>(std::floor(p.y / cell_)));
    return static_cast<std::size_t>(cy) * nx_ + cx;
  }

  int clamp_x(int c) const { return std::clamp(c, 0, nx_ - 1); }
  int clamp_y(int c) const { return std::clamp(c, 0, ny_ - 1); }

  double width_ = 0.0;
  double height_ = 0.0;
  double cell_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<AgentId>> cells_;
};

}  // namespace epichart
