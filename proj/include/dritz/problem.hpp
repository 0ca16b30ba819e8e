#pragma once

#include <functional>
#include <optional>
#include <string>

#include "dritz/elasticity.hpp"
#include "dritz/mesh.hpp"

namespace dritz {

using FieldFn = std::function<Vec2(const Vec2&)>;
using GradFn = std::function<Mat2(const Vec2&)>;
using BoundaryFn = std::function<Vec2(int segment, const Vec2&)>;

struct AnalyticSolution {
  FieldFn u;
  GradFn grad_u;  // analytic where available, high-accuracy ND fallback otherwise
};

struct ReferenceScalars {
  double max_u_norm = 0.0;
  double max_sigma_yy = 0.0;
};

struct ProblemSpec {
  std::string name;
  Domain domain;
  Material material;
  FieldFn body_force;   // f
  BoundaryFn dirichlet; // g_D per segment
  BoundaryFn neumann;   // g_N per segment
  std::optional<AnalyticSolution> exact;
  std::optional<ReferenceScalars> reference;
};

}  // namespace dritz
