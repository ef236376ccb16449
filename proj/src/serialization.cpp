#include "qnet/serialization.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

namespace qnet {

namespace {

std::string child(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Typed, path-tracking view of one JSON object with a closed key set.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path, std::initializer_list<std::string_view> keys, bool closed = true)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("SchemaError", path_.empty() ? "$" : path_, "expected an object");
        for (auto k : keys)
            if (!j_.contains(std::string(k))) fail("SchemaError", child(path_, k), "missing field");
        if (closed)
            for (const auto& [k, _] : j_.items())
                if (std::find(keys.begin(), keys.end(), k) == keys.end())
                    fail("SchemaError", child(path_, k), "unexpected field");
    }

    const Json& at(std::string_view key) const { return j_.at(std::string(key)); }
    std::string path(std::string_view key) const { return child(path_, key); }

    std::string str(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_string()) fail("SchemaError", path(key), "expected a string");
        return v.get<std::string>();
    }

    double num(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_number()) fail("SchemaError", path(key), "expected a number");
        return v.get<double>();
    }

    std::int64_t integer(std::string_view key) const { return as_int(at(key), path(key)); }

    const Json& array(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_array()) fail("SchemaError", path(key), "expected an array");
        return v;
    }

    void format() const {
        const Json& v = at("format");
        if (!v.is_number_integer() || v.get<std::int64_t>() != kFormatVersion)
            fail("SchemaError", path("format"), "unsupported format version (expected " + std::to_string(kFormatVersion) + ")");
    }

    static std::int64_t as_int(const Json& v, const std::string& path) {
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
            fail("SchemaError", path, "integer out of range");
        if (!v.is_number_integer()) fail("SchemaError", path, "expected an integer");
        return v.get<std::int64_t>();
    }

private:
    const Json& j_;
    std::string path_;
};

Matrix matrix_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) fail("SchemaError", path, "expected an array of rows");
    Matrix m;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& row = j[i];
        if (!row.is_array()) fail("SchemaError", item(path, i), "expected an array");
        std::vector<std::int64_t> r;
        for (std::size_t k = 0; k < row.size(); ++k) r.push_back(ObjectReader::as_int(row[k], item(item(path, i), k)));
        m.push_back(std::move(r));
    }
    return m;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail("IoError", p.string(), "cannot open for writing");
    out << text;
    if (!out) fail("IoError", p.string(), "write failed");
}

}  // namespace

Json parse_document(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        fail("ParseError", "$", "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

// -- topology --------------------------------------------------------------

Json topology_to_json(const Topology& topo) {
    Json nodes = Json::array();
    for (const auto& n : topo.nodes())
        nodes.push_back(Json{{"name", n.name}, {"type", to_string(n.type)}, {"template", n.template_id}});
    Json edges = Json::array();
    for (const auto& e : topo.edges())
        edges.push_back(
            Json{{"a", e.a}, {"b", e.b}, {"distance_m", e.distance_m}, {"attenuation_db_km", e.attenuation_db_km}});
    Json doc;
    doc["format"] = kFormatVersion;
    doc["name"] = topo.name();
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    doc["cc_latency_ps"] = topo.cc_latency();
    doc["qc_tdm"] = topo.qc_tdm();
    return doc;
}

Topology topology_from_json(const Json& doc) {
    ObjectReader r(doc, "", {"format", "name", "nodes", "edges", "cc_latency_ps", "qc_tdm"});
    r.format();

    std::vector<NodeSpec> nodes;
    const Json& jn = r.array("nodes");
    for (std::size_t i = 0; i < jn.size(); ++i) {
        ObjectReader n(jn[i], item("nodes", i), {"name", "type", "template"});
        auto type = parse_node_type(n.str("type"));
        if (!type) fail("SchemaError", n.path("type"), "unknown node type '" + n.str("type") + "'");
        nodes.push_back(NodeSpec{n.str("name"), *type, n.str("template"), std::nullopt});
    }

    std::vector<EdgeSpec> edges;
    const Json& je = r.array("edges");
    for (std::size_t i = 0; i < je.size(); ++i) {
        ObjectReader e(je[i], item("edges", i), {"a", "b", "distance_m", "attenuation_db_km"});
        edges.push_back(EdgeSpec{e.str("a"), e.str("b"), e.num("distance_m"), e.num("attenuation_db_km")});
    }

    return Topology::from_parts(r.str("name"), std::move(nodes), std::move(edges),
                                matrix_from_json(r.at("cc_latency_ps"), "cc_latency_ps"),
                                matrix_from_json(r.at("qc_tdm"), "qc_tdm"));
}

std::string export_topology(const Topology& topo) { return dump_document(topology_to_json(topo)); }

Topology import_topology(std::string_view text) { return topology_from_json(parse_document(text)); }

// -- templates -------------------------------------------------------------

Json template_to_json(const Template& t) {
    Json params = std::visit(
        [](const auto& p) -> Json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, RouterTemplate>) {
                return Json{{"memory_array_size", p.memory_array_size}, {"memory_template", p.memory_template}};
            } else if constexpr (std::is_same_v<P, MemoryParams>) {
                return Json{{"coherence_time_s", p.coherence_time_s},
                            {"frequency_hz", p.frequency_hz},
                            {"efficiency", p.efficiency},
                            {"fidelity", p.fidelity}};
            } else if constexpr (std::is_same_v<P, DetectorParams>) {
                return Json{{"efficiency", p.efficiency},
                            {"count_rate_hz", p.count_rate_hz},
                            {"dark_count_rate_hz", p.dark_count_rate_hz},
                            {"time_resolution_ps", p.time_resolution_ps}};
            } else {
                return Json{{"detector_template", p.detector_template},
                            {"coincidence_window_ps", p.coincidence_window_ps}};
            }
        },
        t.params);
    return Json{{"id", t.id}, {"type", to_string(t.type())}, {"params", std::move(params)}};
}

Template template_from_json(const Json& entry, const std::string& path) {
    ObjectReader r(entry, path, {"id", "type", "params"});
    const auto type = parse_template_type(r.str("type"));
    if (!type) fail("SchemaError", r.path("type"), "unknown template type '" + r.str("type") + "'");
    const Json& jp = r.at("params");
    const std::string pp = r.path("params");

    Template t;
    t.id = r.str("id");
    switch (*type) {
        case TemplateType::QuantumRouter: {
            ObjectReader p(jp, pp, {"memory_array_size", "memory_template"});
            const auto size = p.integer("memory_array_size");
            if (size > std::numeric_limits<int>::max()) fail("SchemaError", p.path("memory_array_size"), "too large");
            t.params = RouterTemplate{static_cast<int>(size), p.str("memory_template")};
            break;
        }
        case TemplateType::QuantumMemory: {
            ObjectReader p(jp, pp, {"coherence_time_s", "frequency_hz", "efficiency", "fidelity"});
            t.params = MemoryParams{p.num("coherence_time_s"), p.num("frequency_hz"), p.num("efficiency"), p.num("fidelity")};
            break;
        }
        case TemplateType::Detector: {
            ObjectReader p(jp, pp, {"efficiency", "count_rate_hz", "dark_count_rate_hz", "time_resolution_ps"});
            t.params = DetectorParams{p.num("efficiency"), p.num("count_rate_hz"), p.num("dark_count_rate_hz"),
                                      p.integer("time_resolution_ps")};
            break;
        }
        case TemplateType::BSM: {
            ObjectReader p(jp, pp, {"detector_template", "coincidence_window_ps"});
            t.params = BSMTemplate{p.str("detector_template"), p.integer("coincidence_window_ps")};
            break;
        }
    }
    return t;
}

Json templates_to_json(const TemplateStore& store) {
    Json list = Json::array();
    for (const auto& t : store.templates()) list.push_back(template_to_json(t));
    Json doc;
    doc["format"] = kFormatVersion;
    doc["templates"] = std::move(list);
    return doc;
}

TemplateStore templates_from_json(const Json& doc) {
    ObjectReader r(doc, "", {"format", "templates"});
    r.format();
    const Json& list = r.array("templates");
    std::vector<Template> templates;
    for (std::size_t i = 0; i < list.size(); ++i) templates.push_back(template_from_json(list[i], item("templates", i)));
    return TemplateStore::from_templates(std::move(templates), "templates");
}

std::string export_templates(const TemplateStore& store) { return dump_document(templates_to_json(store)); }

TemplateStore import_templates(std::string_view text) { return templates_from_json(parse_document(text)); }

// -- simulation ------------------------------------------------------------

namespace {

constexpr std::string_view kSimulationKeys[] = {"format",          "name",
                                                "duration_s",      "seed",
                                                "request_rate_hz", "memories_per_request",
                                                "target_fidelity", "swap_success_prob"};

}  // namespace

Json simulation_to_json(const SimulationDocument& sim) {
    const SimulationConfig& c = sim.config;
    Json doc;
    doc["format"] = kFormatVersion;
    doc["name"] = c.name;
    doc["duration_s"] = c.duration_s;
    doc["seed"] = c.seed;
    doc["request_rate_hz"] = c.request_rate_hz;
    doc["memories_per_request"] = c.memories_per_request;
    doc["target_fidelity"] = c.target_fidelity;
    doc["swap_success_prob"] = c.swap_success_prob;
    for (const auto& [k, v] : sim.extra.items()) doc[k] = v;
    return doc;
}

SimulationDocument simulation_from_json(const Json& doc) {
    ObjectReader r(doc, "",
                   {"format", "name", "duration_s", "seed", "request_rate_hz", "memories_per_request", "target_fidelity",
                    "swap_success_prob"},
                   /*closed=*/false);
    r.format();
    SimulationDocument sim;
    SimulationConfig& c = sim.config;
    c.name = r.str("name");
    c.duration_s = r.num("duration_s");
    c.seed = r.integer("seed");
    c.request_rate_hz = r.num("request_rate_hz");
    const auto m = r.integer("memories_per_request");
    if (m < 1 || m > std::numeric_limits<int>::max()) fail("SchemaError", "memories_per_request", "must be positive");
    c.memories_per_request = static_cast<int>(m);
    c.target_fidelity = r.num("target_fidelity");
    c.swap_success_prob = r.num("swap_success_prob");
    c.validate();
    for (const auto& [k, v] : doc.items())
        if (std::find(std::begin(kSimulationKeys), std::end(kSimulationKeys), k) == std::end(kSimulationKeys))
            sim.extra[k] = v;
    return sim;
}

std::string export_simulation(const SimulationDocument& doc) { return dump_document(simulation_to_json(doc)); }

std::string export_simulation(const SimulationConfig& cfg) { return export_simulation(SimulationDocument{cfg, Json::object()}); }

SimulationDocument import_simulation(std::string_view text) { return simulation_from_json(parse_document(text)); }

// -- results / layout ------------------------------------------------------

Json results_to_json(const SimulationReport& rep) {
    Json nodes = Json::array();
    for (const auto& n : rep.nodes)
        nodes.push_back(Json{{"name", n.name},
                             {"avg_wait_time_ps", n.avg_wait_time_ps},
                             {"reservations", n.reservations},
                             {"throughput_pairs_per_s", n.throughput_pairs_per_s}});
    const SimulationTotals& t = rep.totals;
    Json totals{{"seed", t.seed},
                {"requests_generated", t.generated},
                {"requests_granted", t.granted},
                {"requests_completed", t.completed},
                {"requests_rejected", t.rejected},
                {"requests_incomplete", t.incomplete},
                {"avg_wait_time_ps", t.avg_wait_time_ps},
                {"pairs_delivered", t.pairs_delivered},
                {"pairs_discarded", t.pairs_discarded},
                {"pairs_expired", t.expired_pairs},
                {"link_attempts", t.link_attempts},
                {"link_successes", t.link_successes},
                {"swap_attempts", t.swap_attempts},
                {"swap_successes", t.swap_successes},
                {"events_processed", t.events_processed}};
    Json doc;
    doc["format"] = kFormatVersion;
    doc["name"] = rep.name;
    doc["duration_s"] = rep.duration_s;
    doc["nodes"] = std::move(nodes);
    doc["totals"] = std::move(totals);
    return doc;
}

std::string export_results(const SimulationReport& report) { return dump_document(results_to_json(report)); }

Json layout_to_json(const LayoutResult& layout) {
    Json positions = Json::array();
    for (const auto& p : layout.positions)
        positions.push_back(Json{{"name", p.name}, {"x", p.position.x}, {"y", p.position.y}});
    Json doc;
    doc["format"] = kFormatVersion;
    doc["positions"] = std::move(positions);
    doc["iterations"] = layout.iterations_used;
    doc["converged"] = layout.converged;
    return doc;
}

std::string export_layout(const LayoutResult& layout) { return dump_document(layout_to_json(layout)); }

// -- workspace -------------------------------------------------------------

std::vector<Error> cross_reference_violations(const Topology& topo, const TemplateStore& store) {
    std::vector<Error> out;
    const auto& nodes = topo.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        try {
            store.check_assignable(nodes[i].type, nodes[i].template_id, item("nodes", i) + ".template");
        } catch (const Error& e) {
            out.push_back(e);
        }
    }
    return out;
}

std::filesystem::path write_results(const SimulationReport& report, const std::filesystem::path& output_root,
                                    const RunInputs& inputs, bool force) {
    namespace fs = std::filesystem;
    if (!is_safe_run_name(report.name)) fail("SchemaError", "name", "run name is not filesystem-safe");
    const fs::path dir = output_root / report.name;
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!force) fail("RunExists", report.name, "run directory " + dir.string() + " already exists");
        fs::remove_all(dir, ec);
        if (ec) fail("IoError", dir.string(), ec.message());
    }
    fs::create_directories(dir, ec);
    if (ec) fail("IoError", dir.string(), ec.message());
    write_file(dir / "results.json", export_results(report));
    write_file(dir / "topology.json", inputs.topology);
    write_file(dir / "templates.json", inputs.templates);
    write_file(dir / "simulation.json", inputs.simulation);
    return dir;
}

}  // namespace qnet
