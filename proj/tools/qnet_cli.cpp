// qnet: validate, lay out and simulate workspace files, or serve the HTTP backend.
// Exit status: 0 on success, 1 on a domain or validation error, 2 on bad usage.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qnet/layout.hpp"
#include "qnet/randreq.hpp"
#include "qnet/serialization.hpp"
#include "qnet/service.hpp"

namespace {

using namespace qnet;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("IoError", path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void report_error(const Error& e, const std::string& file = {}) {
    std::cerr << "error: " << e.code();
    if (!file.empty()) std::cerr << " in " << file;
    if (!e.path().empty()) std::cerr << " at " << e.path();
    if (!e.message().empty()) std::cerr << ": " << e.message();
    std::cerr << "\n";
}

// Import one document, prefixing any error with the file it came from.
template <class Fn>
auto load(const std::string& file, Fn&& import) {
    try {
        return import(read_file(file));
    } catch (const Error& e) {
        report_error(e, file);
        throw 1;
    }
}

int cmd_validate(const std::string& topo_file, const std::string& tmpl_file, const std::string& sim_file) {
    Topology topo = load(topo_file, [](const std::string& s) { return import_topology(s); });
    TemplateStore store = load(tmpl_file, [](const std::string& s) { return import_templates(s); });
    const auto bad = cross_reference_violations(topo, store);
    for (const auto& e : bad) report_error(e, topo_file);
    if (!bad.empty()) return 1;
    if (!sim_file.empty()) {
        SimulationDocument sim = load(sim_file, [](const std::string& s) { return import_simulation(s); });
        try {
            RandomRequestApp app(topo, store, sim.config);
        } catch (const Error& e) {
            report_error(e, sim_file);
            return 1;
        }
    }
    std::cout << "ok: " << topo.nodes().size() << " nodes, " << topo.edges().size() << " edges, "
              << store.templates().size() << " templates\n";
    return 0;
}

int cmd_layout(const std::string& topo_file, std::uint64_t seed, const std::string& out) {
    Topology topo = load(topo_file, [](const std::string& s) { return import_topology(s); });
    const LayoutResult layout = compute_layout(topo, LayoutParams{}, seed);
    const std::string text = export_layout(layout);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!(f << text)) fail("IoError", out, "cannot write file");
    }
    return 0;
}

void print_report(const SimulationReport& r) {
    std::printf("%-20s %16s %14s %16s\n", "node", "avg wait (ps)", "reservations", "throughput (/s)");
    for (const auto& n : r.nodes)
        std::printf("%-20s %16.1f %14llu %16.4f\n", n.name.c_str(), n.avg_wait_time_ps,
                    static_cast<unsigned long long>(n.reservations), n.throughput_pairs_per_s);
    const auto& t = r.totals;
    std::printf("\nrequests: %llu generated, %llu granted, %llu completed, %llu rejected, %llu incomplete\n",
                static_cast<unsigned long long>(t.generated), static_cast<unsigned long long>(t.granted),
                static_cast<unsigned long long>(t.completed), static_cast<unsigned long long>(t.rejected),
                static_cast<unsigned long long>(t.incomplete));
    std::printf("pairs: %llu delivered, %llu discarded, %llu expired\n",
                static_cast<unsigned long long>(t.pairs_delivered), static_cast<unsigned long long>(t.pairs_discarded),
                static_cast<unsigned long long>(t.expired_pairs));
}

struct SimulateArgs {
    std::string topology, templates, simulation, output_root;
    bool force = false;
    bool dark_counts = false;
    std::optional<std::int64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
    const Topology topo = load(a.topology, [](const std::string& s) { return import_topology(s); });
    const TemplateStore store = load(a.templates, [](const std::string& s) { return import_templates(s); });
    SimulationDocument sim = load(a.simulation, [](const std::string& s) { return import_simulation(s); });
    if (a.seed) sim.config.seed = *a.seed;
    const auto bad = cross_reference_violations(topo, store);
    for (const auto& e : bad) report_error(e, a.topology);
    if (!bad.empty()) return 1;

    SimulationOptions opts;
    opts.dark_counts = a.dark_counts;
    const auto start = std::chrono::steady_clock::now();
    const SimulationReport report = run_simulation(topo, store, sim.config, opts);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto dir = write_results(report, a.output_root,
                                   RunInputs{export_topology(topo), export_templates(store), export_simulation(sim)},
                                   a.force);
    print_report(report);
    std::printf("\nsimulated %.3f s in %.3f s wall time; results in %s\n", report.duration_s, elapsed,
                dir.string().c_str());
    return 0;
}

int cmd_serve(const std::string& bind, const std::string& output_root, int max_runs, const std::string& static_dir) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) fail("UsageError", "--bind", "expected host:port");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        fail("UsageError", "--bind", "bad port");
    }
    ServiceOptions opts;
    opts.output_root = output_root;
    opts.max_runs = max_runs;
    if (!static_dir.empty()) opts.static_dir = static_dir;
    Service svc(opts);
    const int bound = svc.bind(host, port);
    if (bound < 0) fail("IoError", bind, "cannot bind");
    std::cout << "listening on " << host << ":" << bound << std::endl;
    return svc.listen() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum network simulation workbench"};
    app.require_subcommand(1);

    const char* env_root = std::getenv("QNET_OUTPUT_ROOT");
    const std::string default_root = env_root && *env_root ? env_root : "runs";

    std::string topo_file, tmpl_file, sim_file, out_file;
    auto* validate = app.add_subcommand("validate", "Check topology/templates (and optionally a simulation) files");
    validate->add_option("topology", topo_file)->required();
    validate->add_option("templates", tmpl_file)->required();
    validate->add_option("simulation", sim_file);

    std::uint64_t layout_seed = 0;
    auto* layout = app.add_subcommand("layout", "Compute node positions for a topology");
    layout->add_option("topology", topo_file)->required();
    layout->add_option("--seed", layout_seed, "Seed for the initial placement");
    layout->add_option("--out", out_file, "Write the layout here instead of stdout");

    SimulateArgs sa;
    sa.output_root = default_root;
    std::int64_t seed_override = 0;
    auto* simulate = app.add_subcommand("simulate", "Run a random-request simulation");
    simulate->add_option("topology", sa.topology)->required();
    simulate->add_option("templates", sa.templates)->required();
    simulate->add_option("simulation", sa.simulation)->required();
    simulate->add_option("--output-root", sa.output_root, "Directory receiving <name>/results.json");
    simulate->add_flag("--force", sa.force, "Overwrite an existing run directory");
    auto* seed_opt = simulate->add_option("--seed", seed_override, "Override the simulation seed");
    simulate->add_flag("--dark-counts", sa.dark_counts, "Let detector dark counts herald links");

    std::string bind = "127.0.0.1:8080", serve_root = default_root, static_dir;
    int max_runs = 2;
    auto* serve = app.add_subcommand("serve", "Start the HTTP backend");
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--output-root", serve_root);
    serve->add_option("--max-runs", max_runs, "Concurrent simulations")->check(CLI::PositiveNumber);
    serve->add_option("--static", static_dir, "UI bundle served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(topo_file, tmpl_file, sim_file);
        if (*layout) return cmd_layout(topo_file, layout_seed, out_file);
        if (*simulate) {
            if (*seed_opt) sa.seed = seed_override;
            return cmd_simulate(sa);
        }
        if (*serve) return cmd_serve(bind, serve_root, max_runs, static_dir);
    } catch (int rc) {
        return rc;
    } catch (const Error& e) {
        report_error(e);
        return e.code() == "UsageError" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
