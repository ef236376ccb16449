#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qnet/error.hpp"
#include "qnet/layout.hpp"
#include "qnet/randreq.hpp"
#include "qnet/templates.hpp"
#include "qnet/topology.hpp"

// Workspace file formats. Every document is UTF-8 JSON with a leading "format": 1, keys in fixed
// schema order, 2-space indentation and a trailing newline, so exporting an unchanged model is
// byte-stable. Import errors are qnet::Error with codes ParseError / SchemaError / InvariantViolation /
// DanglingReference / CyclicReference / ShapeMismatch and a path into the document.

namespace qnet {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Simulation file contents. Fields this version does not know are kept and re-emitted after the known ones.
struct SimulationDocument {
    SimulationConfig config;
    Json extra = Json::object();

    friend bool operator==(const SimulationDocument&, const SimulationDocument&) = default;
};

Json topology_to_json(const Topology& topo);
Topology topology_from_json(const Json& doc);
std::string export_topology(const Topology& topo);
Topology import_topology(std::string_view text);

Json template_to_json(const Template& t);
/// One template entry ({"id","type","params"}); `path` prefixes error locations.
Template template_from_json(const Json& entry, const std::string& path);
Json templates_to_json(const TemplateStore& store);
TemplateStore templates_from_json(const Json& doc);
std::string export_templates(const TemplateStore& store);
TemplateStore import_templates(std::string_view text);

Json simulation_to_json(const SimulationDocument& doc);
SimulationDocument simulation_from_json(const Json& doc);
std::string export_simulation(const SimulationDocument& doc);
std::string export_simulation(const SimulationConfig& cfg);
SimulationDocument import_simulation(std::string_view text);

Json results_to_json(const SimulationReport& report);
std::string export_results(const SimulationReport& report);

Json layout_to_json(const LayoutResult& layout);
std::string export_layout(const LayoutResult& layout);

/// Parse text into a document. Errors: ParseError.
Json parse_document(std::string_view text);
/// Serialize a document in the canonical text form.
std::string dump_document(const Json& doc);

/// Every node whose template is missing or of the wrong type, as errors carrying "nodes[i].template".
std::vector<Error> cross_reference_violations(const Topology& topo, const TemplateStore& store);

struct RunInputs {
    std::string topology;
    std::string templates;
    std::string simulation;
};

/// Write <output_root>/<name>/{results,topology,templates,simulation}.json and return the run directory.
/// Errors: SchemaError (unsafe name), RunExists (directory present and !force), IoError.
std::filesystem::path write_results(const SimulationReport& report, const std::filesystem::path& output_root,
                                    const RunInputs& inputs, bool force = false);

}  // namespace qnet
