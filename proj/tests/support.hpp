#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qnet/templates.hpp"
#include "qnet/topology.hpp"

namespace qnet::test {

inline std::string data_path(const std::string& rel) { return std::string(QNET_TEST_DATA) + "/" + rel; }

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Routers r1..rn joined in a line, `spacing` metres apart.
inline Topology line(int n, double spacing = 1000, double attenuation = 0.2,
                     const TemplateStore& store = TemplateStore::with_defaults()) {
    Topology t("line" + std::to_string(n));
    for (int i = 1; i <= n; ++i) t.add_node("r" + std::to_string(i), NodeType::QuantumRouter, "default_router", store);
    for (int i = 1; i < n; ++i)
        t.add_edge("r" + std::to_string(i), "r" + std::to_string(i + 1), spacing, attenuation, store);
    return t;
}

inline Topology triangle(double spacing = 1000) {
    const auto store = TemplateStore::with_defaults();
    Topology t("triangle");
    for (const char* n : {"a", "b", "c"}) t.add_node(n, NodeType::QuantumRouter, "default_router", store);
    t.add_edge("a", "b", spacing, 0.2, store);
    t.add_edge("b", "c", spacing, 0.2, store);
    t.add_edge("a", "c", spacing, 0.2, store);
    return t;
}

}  // namespace qnet::test
