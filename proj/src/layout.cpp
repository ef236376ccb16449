#include "qnet/layout.hpp"

#include <cmath>

#include "qnet/error.hpp"

namespace qnet {

namespace {

constexpr double kCoincident = 1e-6;
constexpr double kTwoPi = 6.283185307179586;

}  // namespace

void LayoutParams::validate() const {
    if (!(spring_constant > 0)) fail("InvalidLayoutParams", "spring_constant", "must be positive");
    if (!(ideal_edge_length > 0)) fail("InvalidLayoutParams", "ideal_edge_length", "must be positive");
    if (!(repulsion_constant > 0)) fail("InvalidLayoutParams", "repulsion_constant", "must be positive");
    if (!(damping > 0 && damping < 1)) fail("InvalidLayoutParams", "damping", "must lie strictly inside (0, 1)");
    if (max_iterations < 1) fail("InvalidLayoutParams", "max_iterations", "must be positive");
    if (!(convergence_threshold > 0)) fail("InvalidLayoutParams", "convergence_threshold", "must be positive");
}

LayoutGraph LayoutGraph::from(const Topology& topo) {
    LayoutGraph g;
    g.size = topo.nodes().size();
    g.adjacent.assign(g.size * g.size, 0);
    for (const auto& e : topo.edges()) {
        const std::size_t a = *topo.index_of(e.a);
        const std::size_t b = *topo.index_of(e.b);
        g.edges.emplace_back(a, b);
        g.adjacent[a * g.size + b] = 1;
        g.adjacent[b * g.size + a] = 1;
    }
    return g;
}

double layout_step(std::vector<Point>& positions, const LayoutGraph& graph, const LayoutParams& params, Rng& rng) {
    const std::size_t n = graph.size;
    std::vector<Point> force(n);

    auto direction = [&](std::size_t i, std::size_t j, double& dist) {
        double dx = positions[i].x - positions[j].x;
        double dy = positions[i].y - positions[j].y;
        dist = std::hypot(dx, dy);
        if (dist < kCoincident) {
            const double angle = rng.uniform() * kTwoPi;
            dx = std::cos(angle);
            dy = std::sin(angle);
            dist = kCoincident;
            return Point{dx, dy};
        }
        return Point{dx / dist, dy / dist};
    };

    // Unconnected pairs repel.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (graph.connected(i, j)) continue;
            double dist = 0;
            const Point u = direction(i, j, dist);
            const double f = params.repulsion_constant / (dist * dist);
            force[i].x += f * u.x;
            force[i].y += f * u.y;
            force[j].x -= f * u.x;
            force[j].y -= f * u.y;
        }
    }

    // Springs pull connected pairs toward the ideal length.
    for (const auto& [i, j] : graph.edges) {
        double dist = 0;
        const Point u = direction(i, j, dist);
        const double f = params.spring_constant * (dist - params.ideal_edge_length);
        force[i].x -= f * u.x;
        force[i].y -= f * u.y;
        force[j].x += f * u.x;
        force[j].y += f * u.y;
    }

    // A single step never moves a node further than one ideal edge length.
    const double max_move = params.ideal_edge_length;
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = params.damping * force[i].x;
        double dy = params.damping * force[i].y;
        double len = std::hypot(dx, dy);
        if (len > max_move) {
            dx *= max_move / len;
            dy *= max_move / len;
            len = max_move;
        }
        positions[i].x += dx;
        positions[i].y += dy;
        total += len;
    }
    return total;
}

LayoutResult compute_layout(const Topology& topo, const LayoutParams& params, std::uint64_t seed) {
    std::vector<std::string> names;
    for (const auto& n : topo.nodes()) names.push_back(n.name);
    return compute_layout(LayoutGraph::from(topo), names, params, seed);
}

LayoutResult compute_layout(const LayoutGraph& graph, const std::vector<std::string>& names, const LayoutParams& params,
                            std::uint64_t seed) {
    params.validate();
    if (graph.size == 0) fail("EmptyTopology", {}, "cannot lay out a topology without nodes");
    if (names.size() != graph.size) fail("InvalidLayoutParams", "names", "one name per graph node is required");
    const std::size_t n = graph.size;
    Rng rng(seed);

    const double side = params.ideal_edge_length * std::sqrt(static_cast<double>(n));
    std::vector<Point> pos(n);
    for (auto& p : pos) {
        p.x = rng.uniform(-side / 2, side / 2);
        p.y = rng.uniform(-side / 2, side / 2);
    }

    LayoutResult result;
    for (int it = 0; it < params.max_iterations; ++it) {
        const double moved = layout_step(pos, graph, params, rng);
        result.displacement_trace.push_back(moved);
        result.iterations_used = it + 1;
        if (moved < params.convergence_threshold) {
            result.converged = true;
            break;
        }
    }

    Point c;
    for (const auto& p : pos) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= static_cast<double>(n);
    c.y /= static_cast<double>(n);
    result.positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        result.positions.push_back({names[i], Point{pos[i].x - c.x, pos[i].y - c.y}});
    return result;
}

}  // namespace qnet
