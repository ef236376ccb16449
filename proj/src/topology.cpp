#include "qnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qnet/error.hpp"

namespace qnet {

const char* to_string(MatrixKind k) { return k == MatrixKind::ClassicalLatency ? "cc_latency" : "qc_tdm"; }

std::optional<MatrixKind> parse_matrix_kind(std::string_view s) {
    if (s == "cc_latency") return MatrixKind::ClassicalLatency;
    if (s == "qc_tdm") return MatrixKind::QuantumTdm;
    return std::nullopt;
}

bool Legend::contains(NodeType t) const {
    return std::find(present_types.begin(), present_types.end(), t) != present_types.end();
}

std::string bsm_name(std::string_view a, std::string_view b) {
    if (b < a) std::swap(a, b);
    return "bsm." + std::string(a) + "." + std::string(b);
}

std::string edge_id(std::string_view a, std::string_view b) { return std::string(a) + "--" + std::string(b); }

namespace {

std::string idx(std::string_view base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

const char* matrix_key(MatrixKind k) { return k == MatrixKind::ClassicalLatency ? "cc_latency_ps" : "qc_tdm"; }

// Shape, sign, symmetry and diagonal checks shared by import and whole-matrix writes.
void check_matrix(const Matrix& m, std::size_t n, MatrixKind kind) {
    const std::string key = matrix_key(kind);
    if (m.size() != n)
        fail("SchemaError", key, "expected " + std::to_string(n) + " rows, found " + std::to_string(m.size()));
    for (std::size_t i = 0; i < n; ++i)
        if (m[i].size() != n)
            fail("SchemaError", idx(key, i),
                 "expected " + std::to_string(n) + " columns, found " + std::to_string(m[i].size()));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::string path = idx(idx(key, i), j);
            if (m[i][j] < 0) fail("InvariantViolation", path, "negative entry");
            if (m[i][j] != m[j][i]) fail("InvariantViolation", path, "matrix is not symmetric");
            if (kind == MatrixKind::ClassicalLatency && i == j && m[i][j] != 0)
                fail("InvariantViolation", path, "latency diagonal must be zero");
        }
    }
}

// For an implicit BSM node, find the router pair whose connection it represents.
std::optional<std::pair<std::string, std::string>> derive_parent(const std::string& bsm,
                                                                 const std::vector<std::string>& router_neighbors) {
    for (std::size_t i = 0; i < router_neighbors.size(); ++i)
        for (std::size_t j = i + 1; j < router_neighbors.size(); ++j) {
            auto x = router_neighbors[i];
            auto y = router_neighbors[j];
            if (y < x) std::swap(x, y);
            if (bsm_name(x, y) == bsm) return std::make_pair(x, y);
        }
    return std::nullopt;
}

}  // namespace

Topology Topology::from_parts(std::string name, std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                              Matrix cc_latency, Matrix qc_tdm) {
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].name.empty()) fail("InvariantViolation", idx("nodes", i) + ".name", "empty node name");
        if (!seen.insert(nodes[i].name).second)
            fail("InvariantViolation", idx("nodes", i) + ".name", "duplicate node name '" + nodes[i].name + "'");
    }

    auto type_of = [&](const std::string& n) -> std::optional<NodeType> {
        for (const auto& x : nodes)
            if (x.name == n) return x.type;
        return std::nullopt;
    };

    for (std::size_t i = 0; i < edges.size(); ++i) {
        const EdgeSpec& e = edges[i];
        const std::string p = idx("edges", i);
        if (!type_of(e.a)) fail("InvariantViolation", p + ".a", "unknown endpoint '" + e.a + "'");
        if (!type_of(e.b)) fail("InvariantViolation", p + ".b", "unknown endpoint '" + e.b + "'");
        if (e.a == e.b) fail("InvariantViolation", p, "self-loop");
        if (!(e.distance_m >= 0)) fail("InvariantViolation", p + ".distance_m", "negative distance");
        if (!(e.attenuation_db_km >= 0)) fail("InvariantViolation", p + ".attenuation_db_km", "negative attenuation");
        for (std::size_t j = 0; j < i; ++j)
            if (edges[j].joins(e.a, e.b)) fail("InvariantViolation", p, "duplicate edge");
        if (*type_of(e.a) == NodeType::QuantumRouter && *type_of(e.b) == NodeType::QuantumRouter)
            fail("InvariantViolation", p, "router connections must pass through a BSM node");
    }

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        NodeSpec& n = nodes[i];
        n.parent.reset();
        if (n.type != NodeType::BSMNode) continue;
        std::vector<std::string> routers;
        for (const auto& e : edges)
            if (e.touches(n.name) && type_of(e.other(n.name)) == NodeType::QuantumRouter)
                routers.push_back(e.other(n.name));
        n.parent = derive_parent(n.name, routers);
        if (!n.parent)
            fail("InvariantViolation", idx("nodes", i),
                 "BSM node '" + n.name + "' is not attached to the router pair its name designates");
    }

    check_matrix(cc_latency, nodes.size(), MatrixKind::ClassicalLatency);
    check_matrix(qc_tdm, nodes.size(), MatrixKind::QuantumTdm);

    Topology t(std::move(name));
    t.nodes_ = std::move(nodes);
    t.edges_ = std::move(edges);
    t.cc_latency_ = std::move(cc_latency);
    t.qc_tdm_ = std::move(qc_tdm);
    return t;
}

std::optional<std::size_t> Topology::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return i;
    return std::nullopt;
}

const NodeSpec* Topology::find_node(std::string_view name) const {
    auto i = index_of(name);
    return i ? &nodes_[*i] : nullptr;
}

const EdgeSpec* Topology::find_edge(std::string_view a, std::string_view b) const {
    for (const auto& e : edges_)
        if (e.joins(a, b)) return &e;
    return nullptr;
}

std::size_t Topology::count(NodeType t) const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [t](const NodeSpec& n) { return n.type == t; }));
}

std::vector<std::string> Topology::router_names() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        if (n.type == NodeType::QuantumRouter) out.push_back(n.name);
    return out;
}

std::vector<std::string> Topology::neighbors(std::string_view name) const {
    std::vector<std::string> out;
    for (const auto& e : edges_)
        if (e.touches(name)) out.push_back(e.other(name));
    return out;
}

void Topology::append_node(NodeSpec n) {
    nodes_.push_back(std::move(n));
    const std::size_t size = nodes_.size();
    for (Matrix* m : {&cc_latency_, &qc_tdm_}) {
        for (auto& row : *m) row.push_back(0);
        m->emplace_back(size, 0);
    }
}

void Topology::erase_node(std::size_t i) {
    const std::string name = nodes_[i].name;
    std::erase_if(edges_, [&](const EdgeSpec& e) { return e.touches(name); });
    nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    for (Matrix* m : {&cc_latency_, &qc_tdm_}) {
        m->erase(m->begin() + static_cast<std::ptrdiff_t>(i));
        for (auto& row : *m) row.erase(row.begin() + static_cast<std::ptrdiff_t>(i));
    }
}

void Topology::add_node(std::string name, NodeType type, std::string template_id, const TemplateStore& store) {
    if (name.empty()) fail("SchemaError", "name", "node name must be nonempty");
    if (find_node(name)) fail("DuplicateName", "name", "node '" + name + "' already exists");
    store.check_assignable(type, template_id);
    if (type == NodeType::BSMNode)
        fail("ReservedType", "type", "BSM nodes are created implicitly by connecting two routers");
    append_node(NodeSpec{std::move(name), type, std::move(template_id), std::nullopt});
}

void Topology::add_edge(std::string_view a, std::string_view b, double distance_m, double attenuation_db_km,
                        const TemplateStore& store) {
    const NodeSpec* na = find_node(a);
    const NodeSpec* nb = find_node(b);
    if (!na) fail("UnknownEndpoint", "a", "no node named '" + std::string(a) + "'");
    if (!nb) fail("UnknownEndpoint", "b", "no node named '" + std::string(b) + "'");
    if (a == b) fail("SelfLoop", "b", "an edge needs two distinct endpoints");
    if (!(distance_m >= 0) || !std::isfinite(distance_m)) fail("NegativeValue", "distance_m");
    if (!(attenuation_db_km >= 0) || !std::isfinite(attenuation_db_km)) fail("NegativeValue", "attenuation_db_km");
    if (find_edge(a, b)) fail("DuplicateEdge", "b", "'" + std::string(a) + "' and '" + std::string(b) + "' are already connected");

    if (na->type != NodeType::QuantumRouter || nb->type != NodeType::QuantumRouter) {
        edges_.push_back(EdgeSpec{std::string(a), std::string(b), distance_m, attenuation_db_km});
        return;
    }

    std::string lo(a), hi(b);
    if (hi < lo) std::swap(lo, hi);
    const std::string bsm = bsm_name(lo, hi);
    if (const NodeSpec* taken = find_node(bsm)) {
        if (taken->parent == std::make_pair(lo, hi))
            fail("DuplicateEdge", "b", "'" + lo + "' and '" + hi + "' are already connected via '" + bsm + "'");
        fail("DuplicateName", "b", "the BSM name '" + bsm + "' is taken by another node");
    }
    store.check_assignable(NodeType::BSMNode, kDefaultBSMTemplate);

    append_node(NodeSpec{bsm, NodeType::BSMNode, std::string(kDefaultBSMTemplate), std::make_pair(lo, hi)});
    edges_.push_back(EdgeSpec{lo, bsm, distance_m / 2, attenuation_db_km});
    edges_.push_back(EdgeSpec{bsm, hi, distance_m / 2, attenuation_db_km});
}

void Topology::remove_element(std::string_view id) {
    auto remove_bsm_of = [this](std::string_view x, std::string_view y) {
        erase_node(*index_of(bsm_name(x, y)));
    };

    if (auto i = index_of(id)) {
        const NodeSpec victim = nodes_[*i];
        if (victim.type == NodeType::QuantumRouter) {
            // Dependent BSMs go first so no half-connection is left dangling.
            std::vector<std::string> dependents;
            for (const auto& n : nodes_)
                if (n.parent && (n.parent->first == victim.name || n.parent->second == victim.name))
                    dependents.push_back(n.name);
            for (const auto& d : dependents) erase_node(*index_of(d));
        }
        erase_node(*index_of(victim.name));
        return;
    }

    // Edge ids are "a--b"; names may themselves contain "--", so try every split.
    for (std::size_t pos = id.find("--"); pos != std::string_view::npos; pos = id.find("--", pos + 1)) {
        const std::string_view x = id.substr(0, pos);
        const std::string_view y = id.substr(pos + 2);
        const NodeSpec* nx = find_node(x);
        const NodeSpec* ny = find_node(y);
        if (!nx || !ny) continue;

        if (nx->type == NodeType::QuantumRouter && ny->type == NodeType::QuantumRouter) {
            if (!find_node(bsm_name(x, y))) continue;
            remove_bsm_of(x, y);
            return;
        }
        if (!find_edge(x, y)) continue;
        for (const NodeSpec* n : {nx, ny}) {
            const NodeSpec* other = n == nx ? ny : nx;
            if (n->parent && (n->parent->first == other->name || n->parent->second == other->name)) {
                erase_node(*index_of(n->name));
                return;
            }
        }
        std::erase_if(edges_, [&](const EdgeSpec& e) { return e.joins(x, y); });
        return;
    }
    fail("UnknownElement", std::string(id), "no node or edge with this id");
}

void Topology::edit_node(std::string_view name, const NodePatch& patch, const TemplateStore& store) {
    auto i = index_of(name);
    if (!i) fail("UnknownElement", std::string(name), "no node with this name");
    const NodeSpec& cur = nodes_[*i];
    const NodeType type = patch.type.value_or(cur.type);
    const std::string& tmpl = patch.template_id ? *patch.template_id : cur.template_id;
    store.check_assignable(type, tmpl);
    if (type != cur.type) fail("ReservedType", "type", "BSM nodes exist only as implicit router connections");
    nodes_[*i].template_id = tmpl;
}

void Topology::set_matrix_entry(MatrixKind kind, std::string_view i, std::string_view j, double value) {
    auto a = index_of(i);
    auto b = index_of(j);
    if (!a) fail("UnknownElement", "i", "no node named '" + std::string(i) + "'");
    if (!b) fail("UnknownElement", "j", "no node named '" + std::string(j) + "'");
    if (kind == MatrixKind::ClassicalLatency && *a == *b) fail("DiagonalWrite", "j", "latency diagonal is fixed at zero");
    if (!(value >= 0)) fail("NegativeValue", "value");
    if (!std::isfinite(value) || value != std::floor(value) || value > 9.2e18)
        fail("NonIntegralValue", "value", "matrix entries are integers (ps or frames)");
    Matrix& m = kind == MatrixKind::ClassicalLatency ? cc_latency_ : qc_tdm_;
    const auto v = static_cast<std::int64_t>(value);
    m[*a][*b] = v;
    m[*b][*a] = v;
}

void Topology::set_matrix(MatrixKind kind, Matrix m) {
    check_matrix(m, nodes_.size(), kind);
    (kind == MatrixKind::ClassicalLatency ? cc_latency_ : qc_tdm_) = std::move(m);
}

Legend Topology::legend() const {
    Legend l;
    for (NodeType t : {NodeType::QuantumRouter, NodeType::BSMNode})
        if (count(t) > 0) l.present_types.push_back(t);
    return l;
}

void Topology::check_invariants() const {
    Topology rebuilt = from_parts(name_, nodes_, edges_, cc_latency_, qc_tdm_);
    if (rebuilt.nodes_ != nodes_) fail("InvariantViolation", "nodes", "BSM parent bookkeeping is inconsistent");
}

void check_templates(const Topology& topo, const TemplateStore& store) {
    const auto& nodes = topo.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        store.check_assignable(nodes[i].type, nodes[i].template_id, "nodes[" + std::to_string(i) + "].template");
}

}  // namespace qnet
