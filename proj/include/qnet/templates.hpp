#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qnet/hardware.hpp"

namespace qnet {

enum class NodeType { QuantumRouter, BSMNode };

const char* to_string(NodeType t);
std::optional<NodeType> parse_node_type(std::string_view s);

struct NodeSpec {
    std::string name;
    NodeType type = NodeType::QuantumRouter;
    std::string template_id;
    /// For implicit BSM nodes: the two routers whose connection spawned it (lexicographic order).
    std::optional<std::pair<std::string, std::string>> parent;

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

enum class TemplateType { QuantumRouter, QuantumMemory, Detector, BSM };

const char* to_string(TemplateType t);
std::optional<TemplateType> parse_template_type(std::string_view s);

/// The template type a node of the given type must use.
TemplateType required_template_type(NodeType t);

struct RouterTemplate {
    int memory_array_size = 10;
    std::string memory_template = "default_memory";

    friend bool operator==(const RouterTemplate&, const RouterTemplate&) = default;
};

struct BSMTemplate {
    std::string detector_template = "default_detector";
    Picoseconds coincidence_window_ps = 200;

    friend bool operator==(const BSMTemplate&, const BSMTemplate&) = default;
};

using TemplateParams = std::variant<RouterTemplate, MemoryParams, DetectorParams, BSMTemplate>;

struct Template {
    std::string id;
    TemplateParams params;

    TemplateType type() const;
    /// Ids of templates this one refers to.
    std::vector<std::string> references() const;

    friend bool operator==(const Template&, const Template&) = default;
};

/// Hardware parameters materialized for a router node.
struct RouterHardware {
    int memory_array_size = 0;
    MemoryParams memory;

    friend bool operator==(const RouterHardware&, const RouterHardware&) = default;
};

using ResolvedHardware = std::variant<RouterHardware, BSMParams>;

inline constexpr std::string_view kDefaultRouterTemplate = "default_router";
inline constexpr std::string_view kDefaultMemoryTemplate = "default_memory";
inline constexpr std::string_view kDefaultDetectorTemplate = "default_detector";
inline constexpr std::string_view kDefaultBSMTemplate = "default_bsm";

/// Id-unique, referentially closed collection of templates, kept in insertion order.
class TemplateStore {
public:
    TemplateStore() = default;

    /// Store holding default_memory, default_detector, default_router and default_bsm.
    static TemplateStore with_defaults();

    /// Build a store from an unordered batch, validating the whole set at once.
    /// Error paths are prefixed with `path_prefix` and the template's index.
    static TemplateStore from_templates(std::vector<Template> templates, std::string_view path_prefix = "templates");

    const std::vector<Template>& templates() const { return templates_; }
    const Template* find(std::string_view id) const;
    const Template& get(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return templates_.size(); }

    /// Insert or replace by id. Replacement re-validates every template and node referencing it.
    /// Errors: DanglingReference, CyclicReference, ShapeMismatch, TemplateTypeMismatch.
    void upsert(Template t, std::span<const NodeSpec> nodes = {});

    /// Errors: UnknownTemplate, TemplateInUse.
    void erase(std::string_view id, std::span<const NodeSpec> nodes = {});

    /// Flatten a node's template chain. Errors: UnknownTemplate, DanglingReference, TemplateTypeMismatch.
    ResolvedHardware resolve(const NodeSpec& node) const;

    /// Check that `template_id` exists and suits `type`. Errors: UnknownTemplate, TemplateTypeMismatch.
    void check_assignable(NodeType type, std::string_view template_id, std::string_view path = "template") const;

    friend bool operator==(const TemplateStore&, const TemplateStore&) = default;

private:
    void validate_all(std::span<const NodeSpec> nodes, std::string_view path_prefix) const;

    std::vector<Template> templates_;
};

}  // namespace qnet
