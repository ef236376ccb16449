#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/templates.hpp"

namespace qnet {

struct EdgeSpec {
    std::string a;
    std::string b;
    double distance_m = 0;
    double attenuation_db_km = 0;

    bool joins(std::string_view x, std::string_view y) const { return (a == x && b == y) || (a == y && b == x); }
    bool touches(std::string_view x) const { return a == x || b == x; }
    const std::string& other(std::string_view x) const { return a == x ? b : a; }

    friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

enum class MatrixKind { ClassicalLatency, QuantumTdm };

const char* to_string(MatrixKind k);
std::optional<MatrixKind> parse_matrix_kind(std::string_view s);

/// Square, symmetric, indexed by node insertion order.
using Matrix = std::vector<std::vector<std::int64_t>>;

/// Node types present in a topology, in enum order.
struct Legend {
    std::vector<NodeType> present_types;

    bool contains(NodeType t) const;
    friend bool operator==(const Legend&, const Legend&) = default;
};

struct NodePatch {
    std::optional<NodeType> type;
    std::optional<std::string> template_id;
};

/// Name of the BSM node inserted between two routers.
std::string bsm_name(std::string_view a, std::string_view b);

/// Element id of the edge/connection between two nodes ("a--b").
std::string edge_id(std::string_view a, std::string_view b);

/// Undirected simple graph of routers and implicit BSM nodes with dual-channel edges and
/// the classical-latency / quantum-TDM adjacency matrices.
///
/// Every mutator either fully succeeds or throws qnet::Error leaving the topology untouched.
class Topology {
public:
    Topology() = default;
    explicit Topology(std::string name) : name_(std::move(name)) {}

    /// Assemble from stored parts (file import). Errors carry document paths:
    /// SchemaError for shape problems, InvariantViolation for graph/matrix invariants.
    static Topology from_parts(std::string name, std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                               Matrix cc_latency, Matrix qc_tdm);

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<EdgeSpec>& edges() const { return edges_; }
    const Matrix& matrix(MatrixKind k) const { return k == MatrixKind::ClassicalLatency ? cc_latency_ : qc_tdm_; }
    const Matrix& cc_latency() const { return cc_latency_; }
    const Matrix& qc_tdm() const { return qc_tdm_; }

    std::optional<std::size_t> index_of(std::string_view name) const;
    const NodeSpec* find_node(std::string_view name) const;
    const EdgeSpec* find_edge(std::string_view a, std::string_view b) const;
    std::size_t count(NodeType t) const;
    std::vector<std::string> router_names() const;
    std::vector<std::string> neighbors(std::string_view name) const;

    /// Errors: DuplicateName, UnknownTemplate, TemplateTypeMismatch, ReservedType.
    void add_node(std::string name, NodeType type, std::string template_id, const TemplateStore& store);

    /// Router-router connections insert a BSM node at the midpoint. Errors: UnknownEndpoint, SelfLoop,
    /// DuplicateEdge, NegativeValue, DuplicateName (BSM name taken), UnknownTemplate.
    void add_edge(std::string_view a, std::string_view b, double distance_m, double attenuation_db_km,
                  const TemplateStore& store);

    /// Remove a node (with incident edges and dependent BSMs) or an edge/connection "a--b". Errors: UnknownElement.
    void remove_element(std::string_view id);

    /// Errors: UnknownElement, UnknownTemplate, TemplateTypeMismatch, ReservedType.
    void edit_node(std::string_view name, const NodePatch& patch, const TemplateStore& store);

    /// Symmetric write. Errors: UnknownElement, NegativeValue, NonIntegralValue, DiagonalWrite.
    void set_matrix_entry(MatrixKind kind, std::string_view i, std::string_view j, double value);

    /// Replace a whole matrix after checking shape, symmetry, sign and (latency) zero diagonal.
    void set_matrix(MatrixKind kind, Matrix m);

    Legend legend() const;

    /// Recheck every structural invariant; throws InvariantViolation naming the first broken one.
    void check_invariants() const;

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    void append_node(NodeSpec n);
    void erase_node(std::size_t idx);

    std::string name_;
    std::vector<NodeSpec> nodes_;
    std::vector<EdgeSpec> edges_;
    Matrix cc_latency_;
    Matrix qc_tdm_;
};

/// Cross-document check: every node's template exists and suits its type.
/// Errors: UnknownTemplate / TemplateTypeMismatch at "nodes[i].template".
void check_templates(const Topology& topo, const TemplateStore& store);

}  // namespace qnet
