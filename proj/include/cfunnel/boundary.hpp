#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cfunnel/metric.hpp"

namespace cfunnel {

struct PlaneBox {
    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
};

/// A polyline on the zero level set; closed chains repeat no point, the
/// closing segment is implied by `closed`.
struct Chain {
    std::vector<Eigen::Vector2d> points;
    bool closed = false;
};

struct Contour {
    std::vector<Chain> chains;
    std::size_t point_count() const;
    bool empty() const { return chains.empty(); }
};

/// Zero level set of f over box with a grid x grid cell lattice. Linear
/// interpolation along cell edges; saddle cells are resolved with the mean of
/// the four corners. Vertices where f is NaN never produce crossings.
Contour marching_squares(const std::function<double(double, double)>& f, const PlaneBox& box,
                         std::size_t grid);

/// Same, from precomputed vertex values laid out row-major, (grid+1)^2 of them,
/// index j * (grid + 1) + i for x_i, y_j.
Contour marching_squares(const std::vector<double>& values, const PlaneBox& box, std::size_t grid);

class BoundaryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Funnel bounds +-1 on each coordinate that some funnel output equals
/// exactly, [-10, 10] otherwise.
PlaneBox default_plane_box(const SmoothMetric& metric, double t);

struct BoundaryOptions {
    std::size_t grid = 400;
    std::optional<PlaneBox> box;
    bool with_alpha_bar = true;
};

struct BoundarySnapshot {
    double t = 0.0;
    PlaneBox box;
    std::size_t grid = 0;
    Contour alpha;
    Contour alpha_bar;
    /// Cell diagonal times the largest |grad alpha| seen on the grid.
    double tolerance = 0.0;
};

/// Throws BoundaryError when the state dimension is not 2.
BoundarySnapshot extract_boundary(const SmoothMetric& metric, double t,
                                  const BoundaryOptions& options = {});

/// Header `field,chain,x1,x2`; closed chains repeat their first point last.
void write_boundary_csv(std::ostream& os, const BoundarySnapshot& snap);

/// Even-odd rule.
bool point_in_polygon(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& p);

}  // namespace cfunnel
