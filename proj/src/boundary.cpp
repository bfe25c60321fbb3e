#include "cfunnel/boundary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

namespace cfunnel {

std::size_t Contour::point_count() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.points.size();
    return n;
}

namespace {

struct Lattice {
    const std::vector<double>& v;
    const PlaneBox& box;
    std::size_t grid;

    double x(std::size_t i) const {
        return box.xmin + (box.xmax - box.xmin) * static_cast<double>(i) / static_cast<double>(grid);
    }
    double y(std::size_t j) const {
        return box.ymin + (box.ymax - box.ymin) * static_cast<double>(j) / static_cast<double>(grid);
    }
    double at(std::size_t i, std::size_t j) const { return v[j * (grid + 1) + i]; }

    // Horizontal edge (i,j)-(i+1,j) and vertical edge (i,j)-(i,j+1).
    std::size_t h_edge(std::size_t i, std::size_t j) const { return j * grid + i; }
    std::size_t v_edge(std::size_t i, std::size_t j) const {
        return (grid + 1) * grid + j * (grid + 1) + i;
    }

    Eigen::Vector2d point(std::size_t edge) const {
        const std::size_t n_h = (grid + 1) * grid;
        std::size_t i0, j0, i1, j1;
        if (edge < n_h) {
            j0 = j1 = edge / grid;
            i0 = edge % grid;
            i1 = i0 + 1;
        } else {
            const std::size_t e = edge - n_h;
            j0 = e / (grid + 1);
            i0 = i1 = e % (grid + 1);
            j1 = j0 + 1;
        }
        const double a = at(i0, j0), b = at(i1, j1);
        const double s = a / (a - b);
        return {x(i0) + s * (x(i1) - x(i0)), y(j0) + s * (y(j1) - y(j0))};
    }
};

bool inside(double v) { return v > 0.0; }

}  // namespace

Contour marching_squares(const std::vector<double>& values, const PlaneBox& box, std::size_t grid) {
    if (grid == 0) throw BoundaryError("marching_squares: grid must be positive");
    if (values.size() != (grid + 1) * (grid + 1)) {
        throw BoundaryError("marching_squares: expected (grid+1)^2 vertex values");
    }
    const Lattice L{values, box, grid};

    // Segments as edge-id pairs, plus edge -> incident segments.
    std::vector<std::array<std::size_t, 2>> segs;
    std::unordered_map<std::size_t, std::vector<std::size_t>> incident;
    auto add = [&](std::size_t a, std::size_t b) {
        incident[a].push_back(segs.size());
        incident[b].push_back(segs.size());
        segs.push_back({a, b});
    };

    for (std::size_t j = 0; j < grid; ++j) {
        for (std::size_t i = 0; i < grid; ++i) {
            const double v0 = L.at(i, j), v1 = L.at(i + 1, j);
            const double v2 = L.at(i + 1, j + 1), v3 = L.at(i, j + 1);
            if (std::isnan(v0) || std::isnan(v1) || std::isnan(v2) || std::isnan(v3)) continue;
            const bool b0 = inside(v0), b1 = inside(v1), b2 = inside(v2), b3 = inside(v3);
            // bottom, right, top, left
            const std::size_t e[4] = {L.h_edge(i, j), L.v_edge(i + 1, j), L.h_edge(i, j + 1),
                                      L.v_edge(i, j)};
            const bool cut[4] = {b0 != b1, b1 != b2, b3 != b2, b0 != b3};
            const int n = cut[0] + cut[1] + cut[2] + cut[3];
            if (n == 2) {
                std::size_t pair[2], k = 0;
                for (int s = 0; s < 4; ++s) {
                    if (cut[s]) pair[k++] = e[s];
                }
                add(pair[0], pair[1]);
            } else if (n == 4) {
                const bool centre = inside(0.25 * (v0 + v1 + v2 + v3));
                // Corner segments: v0 {left,bottom}, v1 {bottom,right}, v2 {right,top}, v3 {top,left}.
                if (centre == b0) {
                    // Corners 0 and 2 connect through the centre; cut off 1 and 3.
                    add(e[0], e[1]);
                    add(e[2], e[3]);
                } else {
                    add(e[3], e[0]);
                    add(e[1], e[2]);
                }
            }
        }
    }

    Contour out;
    std::vector<bool> used(segs.size(), false);
    auto walk = [&](std::size_t first_seg, std::size_t start_edge) {
        Chain chain;
        std::size_t edge = start_edge;
        std::size_t seg = first_seg;
        chain.points.push_back(L.point(edge));
        while (true) {
            used[seg] = true;
            edge = segs[seg][0] == edge ? segs[seg][1] : segs[seg][0];
            if (edge == start_edge) {
                chain.closed = true;
                break;
            }
            chain.points.push_back(L.point(edge));
            std::size_t next = segs.size();
            for (std::size_t s : incident[edge]) {
                if (!used[s]) {
                    next = s;
                    break;
                }
            }
            if (next == segs.size()) break;
            seg = next;
        }
        out.chains.push_back(std::move(chain));
    };
    // Open chains start at edges with a single incident segment (box border).
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (used[s]) continue;
        for (std::size_t end : segs[s]) {
            if (incident[end].size() == 1) {
                walk(s, end);
                break;
            }
        }
    }
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (!used[s]) walk(s, segs[s][0]);
    }
    return out;
}

Contour marching_squares(const std::function<double(double, double)>& f, const PlaneBox& box,
                         std::size_t grid) {
    std::vector<double> values((grid + 1) * (grid + 1));
    for (std::size_t j = 0; j <= grid; ++j) {
        const double y = box.ymin + (box.ymax - box.ymin) * static_cast<double>(j) / static_cast<double>(grid);
        for (std::size_t i = 0; i <= grid; ++i) {
            const double x = box.xmin + (box.xmax - box.xmin) * static_cast<double>(i) / static_cast<double>(grid);
            values[j * (grid + 1) + i] = f(x, y);
        }
    }
    return marching_squares(values, box, grid);
}

PlaneBox default_plane_box(const SmoothMetric& metric, double t) {
    if (metric.dim() != 2) throw BoundaryError("boundary extraction needs a 2-D state");
    double lo[2] = {-10.0, -10.0}, hi[2] = {10.0, 10.0};
    bool pinned[2] = {false, false};
    const std::vector<double> slots = {0.0, 0.0, t};
    for (const auto& c : metric.predicates().constraints()) {
        if (c.kind != ConstraintKind::Funnel || c.h.root().op != Op::Variable) continue;
        const std::size_t j = c.h.root().slot;
        const double a = c.lower->eval(slots) - 1.0, b = c.upper->eval(slots) + 1.0;
        lo[j] = pinned[j] ? std::min(lo[j], a) : a;
        hi[j] = pinned[j] ? std::max(hi[j], b) : b;
        pinned[j] = true;
    }
    return {lo[0], hi[0], lo[1], hi[1]};
}

BoundarySnapshot extract_boundary(const SmoothMetric& metric, double t,
                                  const BoundaryOptions& options) {
    if (metric.dim() != 2) {
        throw BoundaryError(fmt::format("boundary extraction needs n = 2, got n = {}", metric.dim()));
    }
    if (options.grid < 2) throw BoundaryError("boundary grid must be at least 2");
    BoundarySnapshot snap;
    snap.t = t;
    snap.grid = options.grid;
    snap.box = options.box ? *options.box : default_plane_box(metric, t);
    const PlaneBox& b = snap.box;
    if (!(b.xmax > b.xmin && b.ymax > b.ymin)) throw BoundaryError("boundary box is empty");

    const std::size_t N = options.grid;
    const auto count = static_cast<long long>((N + 1) * (N + 1));
    std::vector<double> a(static_cast<std::size_t>(count)), abar(a.size()), gnorm(a.size(), 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();

#pragma omp parallel for schedule(static)
    for (long long k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        const std::size_t i = idx % (N + 1), j = idx / (N + 1);
        Eigen::VectorXd x(2);
        x[0] = b.xmin + (b.xmax - b.xmin) * static_cast<double>(i) / static_cast<double>(N);
        x[1] = b.ymin + (b.ymax - b.ymin) * static_cast<double>(j) / static_cast<double>(N);
        try {
            const MetricEvaluation m = metric.evaluate(t, x);
            a[idx] = m.alpha;
            abar[idx] = m.alpha_bar;
            gnorm[idx] = m.grad.norm();
        } catch (const ExprError&) {
            a[idx] = abar[idx] = nan;
        }
    }

    snap.alpha = marching_squares(a, b, N);
    if (options.with_alpha_bar) snap.alpha_bar = marching_squares(abar, b, N);
    const double dx = (b.xmax - b.xmin) / static_cast<double>(N);
    const double dy = (b.ymax - b.ymin) / static_cast<double>(N);
    snap.tolerance = std::hypot(dx, dy) * *std::max_element(gnorm.begin(), gnorm.end());
    return snap;
}

void write_boundary_csv(std::ostream& os, const BoundarySnapshot& snap) {
    os << "field,chain,x1,x2\n";
    auto emit = [&](const char* field, const Contour& c) {
        for (std::size_t k = 0; k < c.chains.size(); ++k) {
            const Chain& ch = c.chains[k];
            for (const auto& p : ch.points) os << fmt::format("{},{},{:.17g},{:.17g}\n", field, k, p[0], p[1]);
            if (ch.closed && !ch.points.empty()) {
                const auto& p = ch.points.front();
                os << fmt::format("{},{},{:.17g},{:.17g}\n", field, k, p[0], p[1]);
            }
        }
    };
    emit("alpha", snap.alpha);
    emit("alpha_bar", snap.alpha_bar);
}

bool point_in_polygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
    if (poly.size() < 3) return false;
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Eigen::Vector2d& a = poly[i];
        const Eigen::Vector2d& c = poly[j];
        if ((a[1] > p[1]) != (c[1] > p[1]) &&
            p[0] < (c[0] - a[0]) * (p[1] - a[1]) / (c[1] - a[1]) + a[0]) {
            in = !in;
        }
    }
    return in;
}

}  // namespace cfunnel
