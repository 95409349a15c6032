#pragma once

#include <Eigen/Dense>
#include <functional>

namespace bcid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// A spatial point in 2 or 3 dimensions.
using Point = Eigen::VectorXd;

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vector(const Point&)>;

inline Point make_point(double x, double y) { return Point{{x, y}}; }
inline Point make_point(double x, double y, double z) { return Point{{x, y, z}}; }

}  // namespace bcid
