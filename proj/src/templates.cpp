#include "qnet/templates.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "qnet/error.hpp"

namespace qnet {

const char* to_string(NodeType t) {
    switch (t) {
        case NodeType::QuantumRouter: return "QuantumRouter";
        case NodeType::BSMNode: return "BSMNode";
    }
    return "?";
}

std::optional<NodeType> parse_node_type(std::string_view s) {
    if (s == "QuantumRouter") return NodeType::QuantumRouter;
    if (s == "BSMNode") return NodeType::BSMNode;
    return std::nullopt;
}

const char* to_string(TemplateType t) {
    switch (t) {
        case TemplateType::QuantumRouter: return "QuantumRouter";
        case TemplateType::QuantumMemory: return "QuantumMemory";
        case TemplateType::Detector: return "Detector";
        case TemplateType::BSM: return "BSM";
    }
    return "?";
}

std::optional<TemplateType> parse_template_type(std::string_view s) {
    if (s == "QuantumRouter") return TemplateType::QuantumRouter;
    if (s == "QuantumMemory") return TemplateType::QuantumMemory;
    if (s == "Detector") return TemplateType::Detector;
    if (s == "BSM") return TemplateType::BSM;
    return std::nullopt;
}

TemplateType required_template_type(NodeType t) {
    return t == NodeType::QuantumRouter ? TemplateType::QuantumRouter : TemplateType::BSM;
}

TemplateType Template::type() const { return static_cast<TemplateType>(params.index()); }

std::vector<std::string> Template::references() const {
    if (const auto* r = std::get_if<RouterTemplate>(&params)) return {r->memory_template};
    if (const auto* b = std::get_if<BSMTemplate>(&params)) return {b->detector_template};
    return {};
}

namespace {

// Field holding the single cross-reference of a template type, and the type it must point at.
struct ReferenceRule {
    const char* field;
    TemplateType target;
};

std::optional<ReferenceRule> reference_rule(TemplateType t) {
    if (t == TemplateType::QuantumRouter) return ReferenceRule{"memory_template", TemplateType::QuantumMemory};
    if (t == TemplateType::BSM) return ReferenceRule{"detector_template", TemplateType::Detector};
    return std::nullopt;
}

std::string join(std::string_view prefix, std::string_view field) {
    if (prefix.empty()) return std::string(field);
    return std::string(prefix) + "." + std::string(field);
}

void validate_values(const Template& t, const std::string& params_path) {
    try {
        std::visit(
            [](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, RouterTemplate>) {
                    if (p.memory_array_size < 1) fail("ShapeMismatch", "memory_array_size", "must be positive");
                } else if constexpr (std::is_same_v<P, BSMTemplate>) {
                    if (p.coincidence_window_ps < 1) fail("ShapeMismatch", "coincidence_window_ps", "must be positive");
                } else {
                    p.validate();
                }
            },
            t.params);
    } catch (const Error& e) {
        throw Error(e.code(), join(params_path, e.path()), e.message());
    }
}

}  // namespace

TemplateStore TemplateStore::with_defaults() {
    TemplateStore s;
    s.templates_ = {
        Template{std::string(kDefaultMemoryTemplate), MemoryParams{}},
        Template{std::string(kDefaultDetectorTemplate), DetectorParams{}},
        Template{std::string(kDefaultRouterTemplate), RouterTemplate{}},
        Template{std::string(kDefaultBSMTemplate), BSMTemplate{}},
    };
    return s;
}

TemplateStore TemplateStore::from_templates(std::vector<Template> templates, std::string_view path_prefix) {
    TemplateStore s;
    s.templates_ = std::move(templates);
    s.validate_all({}, path_prefix);
    return s;
}

const Template* TemplateStore::find(std::string_view id) const {
    auto it = std::find_if(templates_.begin(), templates_.end(), [&](const Template& t) { return t.id == id; });
    return it == templates_.end() ? nullptr : &*it;
}

const Template& TemplateStore::get(std::string_view id) const {
    const Template* t = find(id);
    if (!t) fail("UnknownTemplate", std::string(id));
    return *t;
}

void TemplateStore::validate_all(std::span<const NodeSpec> nodes, std::string_view path_prefix) const {
    auto tpath = [&](std::size_t i) {
        return std::string(path_prefix) + "[" + std::to_string(i) + "]";
    };

    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        const Template& t = templates_[i];
        if (t.id.empty()) fail("SchemaError", tpath(i) + ".id", "template id must be nonempty");
        if (!index.emplace(t.id, i).second) fail("DuplicateName", tpath(i) + ".id", "duplicate template id '" + t.id + "'");
    }

    for (std::size_t i = 0; i < templates_.size(); ++i) {
        validate_values(templates_[i], tpath(i) + ".params");
        if (auto rule = reference_rule(templates_[i].type())) {
            const std::string ref = templates_[i].references().front();
            if (!index.count(ref))
                fail("DanglingReference", tpath(i) + ".params." + rule->field, "no template named '" + ref + "'");
        }
    }

    // Reference graph must be acyclic; checked before reference typing so a self-reference reports as a cycle.
    std::vector<int> color(templates_.size(), 0);
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
        color[i] = 1;
        for (const auto& ref : templates_[i].references()) {
            const std::size_t j = index.at(ref);
            if (color[j] == 1)
                fail("CyclicReference", tpath(i) + ".params." + reference_rule(templates_[i].type())->field,
                     "reference cycle through '" + ref + "'");
            if (color[j] == 0) visit(j);
        }
        color[i] = 2;
    };
    for (std::size_t i = 0; i < templates_.size(); ++i)
        if (color[i] == 0) visit(i);

    for (std::size_t i = 0; i < templates_.size(); ++i) {
        auto rule = reference_rule(templates_[i].type());
        if (!rule) continue;
        const Template& target = templates_[index.at(templates_[i].references().front())];
        if (target.type() != rule->target)
            fail("ShapeMismatch", tpath(i) + ".params." + rule->field,
                 std::string("expected a ") + to_string(rule->target) + " template, '" + target.id + "' is " +
                     to_string(target.type()));
        if (const auto* b = std::get_if<BSMTemplate>(&templates_[i].params)) {
            const auto& det = std::get<DetectorParams>(target.params);
            if (b->coincidence_window_ps < det.time_resolution_ps)
                fail("ShapeMismatch", tpath(i) + ".params.coincidence_window_ps",
                     "coincidence window is shorter than the detector time resolution");
        }
    }

    for (std::size_t j = 0; j < nodes.size(); ++j)
        check_assignable(nodes[j].type, nodes[j].template_id, "nodes[" + std::to_string(j) + "].template");
}

void TemplateStore::upsert(Template t, std::span<const NodeSpec> nodes) {
    TemplateStore candidate = *this;
    auto it = std::find_if(candidate.templates_.begin(), candidate.templates_.end(),
                           [&](const Template& x) { return x.id == t.id; });
    if (it != candidate.templates_.end())
        *it = std::move(t);
    else
        candidate.templates_.push_back(std::move(t));
    candidate.validate_all(nodes, "templates");
    *this = std::move(candidate);
}

void TemplateStore::erase(std::string_view id, std::span<const NodeSpec> nodes) {
    auto it = std::find_if(templates_.begin(), templates_.end(), [&](const Template& t) { return t.id == id; });
    if (it == templates_.end()) fail("UnknownTemplate", std::string(id));
    for (const auto& n : nodes)
        if (n.template_id == id) fail("TemplateInUse", std::string(id), "assigned to node '" + n.name + "'");
    for (const auto& t : templates_)
        for (const auto& ref : t.references())
            if (ref == id) fail("TemplateInUse", std::string(id), "referenced by template '" + t.id + "'");
    templates_.erase(it);
}

void TemplateStore::check_assignable(NodeType type, std::string_view template_id, std::string_view path) const {
    const Template* t = find(template_id);
    if (!t) fail("UnknownTemplate", std::string(path), "no template named '" + std::string(template_id) + "'");
    if (t->type() != required_template_type(type))
        fail("TemplateTypeMismatch", std::string(path),
             std::string(to_string(type)) + " nodes need a " + to_string(required_template_type(type)) +
                 " template, '" + t->id + "' is " + to_string(t->type()));
}

ResolvedHardware TemplateStore::resolve(const NodeSpec& node) const {
    check_assignable(node.type, node.template_id);
    const Template& t = get(node.template_id);
    if (const auto* r = std::get_if<RouterTemplate>(&t.params)) {
        const Template* mem = find(r->memory_template);
        if (!mem || mem->type() != TemplateType::QuantumMemory) fail("DanglingReference", t.id + ".memory_template");
        return RouterHardware{r->memory_array_size, std::get<MemoryParams>(mem->params)};
    }
    const auto& b = std::get<BSMTemplate>(t.params);
    const Template* det = find(b.detector_template);
    if (!det || det->type() != TemplateType::Detector) fail("DanglingReference", t.id + ".detector_template");
    return BSMParams{std::get<DetectorParams>(det->params), b.coincidence_window_ps};
}

}  // namespace qnet
