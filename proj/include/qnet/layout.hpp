#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qnet/rng.hpp"
#include "qnet/topology.hpp"

namespace qnet {

struct LayoutParams {
    double spring_constant = 0.1;
    double ideal_edge_length = 100;
    double repulsion_constant = 1e5;
    double damping = 0.9;
    int max_iterations = 1000;
    double convergence_threshold = 0.1;

    /// Errors: InvalidLayoutParams.
    void validate() const;
};

struct Point {
    double x = 0;
    double y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct NodePosition {
    std::string name;
    Point position;

    friend bool operator==(const NodePosition&, const NodePosition&) = default;
};

struct LayoutResult {
    /// One entry per topology node, in node order.
    std::vector<NodePosition> positions;
    int iterations_used = 0;
    bool converged = false;
    /// Total displacement of every iteration, in order.
    std::vector<double> displacement_trace;
};

/// Spring embedder over the whole graph.
///
/// Connected nodes are joined by Hooke springs with rest length `ideal_edge_length`; unconnected pairs
/// repel with an inverse-square force. Each iteration moves every node by damping * net force and costs
/// O(|V|^2). The layout is recentred on its centroid. Errors: EmptyTopology, InvalidLayoutParams.
LayoutResult compute_layout(const Topology& topo, const LayoutParams& params = {}, std::uint64_t seed = 0);

/// Dense form of the graph used by the force loop.
struct LayoutGraph {
    std::size_t size = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<char> adjacent;  // size*size

    static LayoutGraph from(const Topology& topo);
    bool connected(std::size_t i, std::size_t j) const { return adjacent[i * size + j] != 0; }
};

/// compute_layout on a bare graph; `names` labels the positions.
LayoutResult compute_layout(const LayoutGraph& graph, const std::vector<std::string>& names,
                            const LayoutParams& params = {}, std::uint64_t seed = 0);

/// One force iteration in place; returns the sum of per-node movement lengths.
/// `rng` supplies separation directions for coincident nodes.
double layout_step(std::vector<Point>& positions, const LayoutGraph& graph, const LayoutParams& params, Rng& rng);

}  // namespace qnet
