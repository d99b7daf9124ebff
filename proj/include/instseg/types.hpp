#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace instseg {

using Vec3 = Eigen::Vector3d;

// Per-point score rows; row-major so a point's row is contiguous.
using ScoreMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Axis-aligned box, componentwise lo <= hi.
struct Box {
  Vec3 lo;
  Vec3 hi;
};

}  // namespace instseg
