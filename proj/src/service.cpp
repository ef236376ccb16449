#include "qnet/service.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "qnet/layout.hpp"
#include "qnet/randreq.hpp"
#include "qnet/serialization.hpp"

namespace qnet {

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Running: return "Running";
        case RunStatus::Done: return "Done";
        case RunStatus::Failed: return "Failed";
    }
    return "?";
}

namespace {

constexpr const char* kJson = "application/json";

struct RunRecord {
    std::string name;
    std::atomic<double> progress{0.0};
    mutable std::mutex m;
    RunStatus status = RunStatus::Running;
    std::string results;  // results.json text once Done
    std::string error;
};

struct RunJob {
    std::shared_ptr<RunRecord> record;
    Topology topology;
    TemplateStore templates;
    SimulationDocument simulation;
};

// Error code -> HTTP status for a given route. Codes listed in `not_found` name a missing URL resource.
int status_for(const Error& e, std::initializer_list<std::string_view> not_found = {}) {
    if (e.code() == "RunExists" || e.code() == "VersionConflict") return 409;
    for (auto c : not_found)
        if (e.code() == c) return 404;
    return 400;
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& path,
                const std::string& message) {
    res.status = status;
    res.set_content(Json{{"error", code}, {"path", path}, {"message", message}}.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e, std::initializer_list<std::string_view> not_found = {}) {
    send_error(res, status_for(e, not_found), e.code(), e.path(), e.message());
}

Json body_object(const httplib::Request& req) {
    Json j = parse_document(req.body);
    if (!j.is_object()) fail("SchemaError", "$", "request body must be a JSON object");
    return j;
}

std::string required_string(const Json& j, const char* key) {
    if (!j.contains(key)) fail("SchemaError", key, "missing field");
    if (!j[key].is_string()) fail("SchemaError", key, "expected a string");
    return j[key].get<std::string>();
}

double required_number(const Json& j, const char* key) {
    if (!j.contains(key)) fail("SchemaError", key, "missing field");
    if (!j[key].is_number()) fail("SchemaError", key, "expected a number");
    return j[key].get<double>();
}

std::string url_arg(const httplib::Request& req, std::size_t i) {
    return httplib::detail::decode_url(req.matches[static_cast<int>(i)].str(), false);
}

}  // namespace

struct Service::Impl {
    ServiceOptions opts;
    httplib::Server server;

    mutable std::mutex m;
    Topology topology{""};
    TemplateStore templates = TemplateStore::with_defaults();
    SimulationDocument simulation;
    std::uint64_t version = 0;
    std::map<std::string, std::shared_ptr<RunRecord>> runs;

    mutable std::mutex jobs_m;
    mutable std::condition_variable jobs_cv;
    std::deque<RunJob> jobs;
    int busy = 0;
    bool stopping = false;
    std::vector<std::thread> workers;

    explicit Impl(ServiceOptions o) : opts(std::move(o)) {
        const int n = std::max(1, opts.max_runs);
        for (int i = 0; i < n; ++i) workers.emplace_back([this] { worker(); });
        routes();
    }

    ~Impl() {
        {
            std::lock_guard lk(jobs_m);
            stopping = true;
        }
        jobs_cv.notify_all();
        for (auto& w : workers) w.join();
    }

    void worker() {
        while (true) {
            RunJob job;
            {
                std::unique_lock lk(jobs_m);
                jobs_cv.wait(lk, [this] { return stopping || !jobs.empty(); });
                if (stopping) return;
                job = std::move(jobs.front());
                jobs.pop_front();
                ++busy;
            }
            execute(job);
            {
                std::lock_guard lk(jobs_m);
                --busy;
            }
            jobs_cv.notify_all();
        }
    }

    void execute(RunJob& job) {
        auto& rec = *job.record;
        try {
            SimulationOptions so;
            so.progress = &rec.progress;
            const SimulationReport report = run_simulation(job.topology, job.templates, job.simulation.config, so);
            write_results(report, opts.output_root,
                          RunInputs{export_topology(job.topology), export_templates(job.templates),
                                    export_simulation(job.simulation)});
            std::lock_guard lk(rec.m);
            rec.results = export_results(report);
            rec.progress.store(1.0);
            rec.status = RunStatus::Done;
        } catch (const std::exception& e) {
            std::lock_guard lk(rec.m);
            rec.error = e.what();
            rec.status = RunStatus::Failed;
        }
    }

    // Run `fn` against the workspace under the writer lock, honouring If-Match and bumping the version.
    template <class Fn>
    void mutate(const httplib::Request& req, httplib::Response& res, Fn&& fn,
                std::initializer_list<std::string_view> not_found = {}) {
        std::lock_guard lk(m);
        try {
            if (req.has_header("If-Match")) {
                std::string tag = req.get_header_value("If-Match");
                std::erase(tag, '"');
                if (tag != std::to_string(version))
                    fail("VersionConflict", "If-Match", "workspace is at version " + std::to_string(version));
            }
            fn();
            ++version;
            res.set_header("X-Workspace-Version", std::to_string(version));
        } catch (const Error& e) {
            send_error(res, e, not_found);
        }
    }

    template <class Fn>
    void read(httplib::Response& res, Fn&& fn) {
        std::lock_guard lk(m);
        try {
            fn();
            res.set_header("X-Workspace-Version", std::to_string(version));
        } catch (const Error& e) {
            send_error(res, e);
        }
    }

    void send_topology(httplib::Response& res, int status) {
        res.status = status;
        res.set_content(export_topology(topology), kJson);
    }

    Json matrix_json(MatrixKind kind) const {
        Json names = Json::array();
        for (const auto& n : topology.nodes()) names.push_back(n.name);
        return Json{{"kind", to_string(kind)}, {"names", names}, {"values", topology.matrix(kind)}};
    }

    std::shared_ptr<RunRecord> find_run(const std::string& name) const {
        std::lock_guard lk(m);
        auto it = runs.find(name);
        return it == runs.end() ? nullptr : it->second;
    }

    void routes() {
        using Req = httplib::Request;
        using Res = httplib::Response;

        server.set_exception_handler([](const Req&, Res& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const std::exception& e) {
                send_error(res, 500, "InternalError", "", e.what());
            }
        });

        server.Get("/api/topology", [this](const Req&, Res& res) { read(res, [&] { send_topology(res, 200); }); });

        server.Put("/api/topology", [this](const Req& req, Res& res) {
            mutate(req, res, [&] { replace_topology(import_topology(req.body)); send_topology(res, 200); });
        });

        server.Post("/api/nodes", [this](const Req& req, Res& res) {
            mutate(req, res, [&] {
                const Json j = body_object(req);
                const auto type = parse_node_type(required_string(j, "type"));
                if (!type) fail("SchemaError", "type", "unknown node type");
                Topology next = topology;
                next.add_node(required_string(j, "name"), *type, required_string(j, "template"), templates);
                topology = std::move(next);
                send_topology(res, 201);
            });
        });

        server.Post("/api/edges", [this](const Req& req, Res& res) {
            mutate(req, res, [&] {
                const Json j = body_object(req);
                Topology next = topology;
                next.add_edge(required_string(j, "a"), required_string(j, "b"), required_number(j, "distance_m"),
                              required_number(j, "attenuation_db_km"), templates);
                topology = std::move(next);
                send_topology(res, 201);
            });
        });

        server.Patch(R"(/api/nodes/(.+))", [this](const Req& req, Res& res) {
            mutate(
                req, res,
                [&] {
                    const Json j = body_object(req);
                    NodePatch patch;
                    if (j.contains("type")) {
                        patch.type = parse_node_type(required_string(j, "type"));
                        if (!patch.type) fail("SchemaError", "type", "unknown node type");
                    }
                    if (j.contains("template")) patch.template_id = required_string(j, "template");
                    Topology next = topology;
                    next.edit_node(url_arg(req, 1), patch, templates);
                    topology = std::move(next);
                    send_topology(res, 200);
                },
                {"UnknownElement"});
        });

        server.Delete(R"(/api/elements/(.+))", [this](const Req& req, Res& res) {
            mutate(
                req, res,
                [&] {
                    Topology next = topology;
                    next.remove_element(url_arg(req, 1));
                    topology = std::move(next);
                    send_topology(res, 200);
                },
                {"UnknownElement"});
        });

        server.Get("/api/legend", [this](const Req&, Res& res) {
            read(res, [&] {
                Json types = Json::array();
                for (NodeType t : topology.legend().present_types) types.push_back(to_string(t));
                res.set_content(Json{{"types", types}}.dump(), kJson);
            });
        });

        server.Get(R"(/api/matrices/([a-z_]+))", [this](const Req& req, Res& res) {
            const auto kind = parse_matrix_kind(url_arg(req, 1));
            if (!kind) return send_error(res, 404, "UnknownMatrix", url_arg(req, 1), "no such matrix");
            read(res, [&] { res.set_content(matrix_json(*kind).dump(), kJson); });
        });

        server.Put(R"(/api/matrices/([a-z_]+))", [this](const Req& req, Res& res) {
            const auto kind = parse_matrix_kind(url_arg(req, 1));
            if (!kind) return send_error(res, 404, "UnknownMatrix", url_arg(req, 1), "no such matrix");
            mutate(req, res, [&] {
                const Json j = body_object(req);
                Topology next = topology;
                if (j.contains("values")) {
                    Matrix values;
                    try {
                        values = j["values"].get<Matrix>();
                    } catch (const Json::exception&) {
                        fail("SchemaError", "values", "expected a square array of integers");
                    }
                    next.set_matrix(*kind, std::move(values));
                } else {
                    next.set_matrix_entry(*kind, required_string(j, "i"), required_string(j, "j"),
                                          required_number(j, "value"));
                }
                topology = std::move(next);
                res.set_content(matrix_json(*kind).dump(), kJson);
            });
        });

        server.Get("/api/templates", [this](const Req&, Res& res) {
            read(res, [&] { res.set_content(export_templates(templates), kJson); });
        });

        server.Put(R"(/api/templates/(.+))", [this](const Req& req, Res& res) {
            mutate(req, res, [&] {
                Json j = body_object(req);
                const std::string id = url_arg(req, 1);
                if (j.contains("id") && j["id"] != id) fail("SchemaError", "id", "body id does not match the URL");
                j["id"] = id;
                Json entry{{"id", id}, {"type", j.value("type", Json())}, {"params", j.value("params", Json())}};
                for (const auto& [k, _] : j.items())
                    if (k != "id" && k != "type" && k != "params") fail("SchemaError", k, "unexpected field");
                TemplateStore next = templates;
                next.upsert(template_from_json(entry, ""), topology.nodes());
                templates = std::move(next);
                res.set_content(export_templates(templates), kJson);
            });
        });

        server.Delete(R"(/api/templates/(.+))", [this](const Req& req, Res& res) {
            mutate(
                req, res,
                [&] {
                    TemplateStore next = templates;
                    next.erase(url_arg(req, 1), topology.nodes());
                    templates = std::move(next);
                    res.set_content(export_templates(templates), kJson);
                },
                {"UnknownTemplate"});
        });

        server.Post("/api/layout", [this](const Req& req, Res& res) {
            Topology snapshot;
            {
                std::lock_guard lk(m);
                snapshot = topology;
            }
            try {
                const Json j = req.body.empty() ? Json::object() : body_object(req);
                LayoutParams p;
                std::uint64_t seed = 0;
                for (const auto& [k, v] : j.items()) {
                    if (!v.is_number()) fail("SchemaError", k, "expected a number");
                    if (k == "spring_constant") p.spring_constant = v.get<double>();
                    else if (k == "ideal_edge_length") p.ideal_edge_length = v.get<double>();
                    else if (k == "repulsion_constant") p.repulsion_constant = v.get<double>();
                    else if (k == "damping") p.damping = v.get<double>();
                    else if (k == "max_iterations") p.max_iterations = v.get<int>();
                    else if (k == "convergence_threshold") p.convergence_threshold = v.get<double>();
                    else if (k == "seed") seed = v.get<std::uint64_t>();
                    else fail("SchemaError", k, "unexpected field");
                }
                res.set_content(export_layout(compute_layout(snapshot, p, seed)), kJson);
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        server.Get("/api/simulations", [this](const Req&, Res& res) {
            std::lock_guard lk(m);
            Json list = Json::array();
            for (const auto& [name, rec] : runs) {
                std::lock_guard rl(rec->m);
                list.push_back(Json{{"name", name}, {"status", to_string(rec->status)}, {"progress", rec->progress.load()}});
            }
            res.set_content(Json{{"runs", list}}.dump(), kJson);
        });

        server.Post("/api/simulations", [this](const Req& req, Res& res) {
            try {
                launch(import_simulation(req.body));
                res.status = 202;
                res.set_content(Json{{"name", parse_document(req.body)["name"]}}.dump(), kJson);
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        server.Get(R"(/api/simulations/([^/]+)/progress)", [this](const Req& req, Res& res) {
            auto rec = find_run(url_arg(req, 1));
            if (!rec) return send_error(res, 404, "UnknownRun", url_arg(req, 1), "no such simulation");
            std::lock_guard lk(rec->m);
            Json j{{"name", rec->name}, {"status", to_string(rec->status)}, {"progress", rec->progress.load()}};
            if (rec->status == RunStatus::Failed) j["error"] = rec->error;
            res.set_content(j.dump(), kJson);
        });

        server.Get(R"(/api/simulations/([^/]+)/results)", [this](const Req& req, Res& res) {
            auto rec = find_run(url_arg(req, 1));
            if (!rec) return send_error(res, 404, "UnknownRun", url_arg(req, 1), "no such simulation");
            std::lock_guard lk(rec->m);
            if (rec->status == RunStatus::Running)
                return send_error(res, 409, "RunNotFinished", rec->name, "simulation is still running");
            if (rec->status == RunStatus::Failed) return send_error(res, 500, "RunFailed", rec->name, rec->error);
            res.set_content(rec->results, kJson);
        });

        server.Get(R"(/api/export/([a-z]+))", [this](const Req& req, Res& res) {
            const std::string kind = url_arg(req, 1);
            read(res, [&] {
                if (kind == "topology") res.set_content(export_topology(topology), kJson);
                else if (kind == "templates") res.set_content(export_templates(templates), kJson);
                else if (kind == "simulation") res.set_content(export_simulation(simulation), kJson);
                else send_error(res, 404, "UnknownDocument", kind, "no such document kind");
            });
        });

        server.Post(R"(/api/import/([a-z]+))", [this](const Req& req, Res& res) {
            const std::string kind = url_arg(req, 1);
            if (kind != "topology" && kind != "templates" && kind != "simulation")
                return send_error(res, 404, "UnknownDocument", kind, "no such document kind");
            mutate(req, res, [&] {
                if (kind == "topology") {
                    replace_topology(import_topology(req.body));
                    res.set_content(export_topology(topology), kJson);
                } else if (kind == "templates") {
                    TemplateStore next = import_templates(req.body);
                    const auto bad = cross_reference_violations(topology, next);
                    if (!bad.empty()) throw bad.front();
                    templates = std::move(next);
                    res.set_content(export_templates(templates), kJson);
                } else {
                    simulation = import_simulation(req.body);
                    res.set_content(export_simulation(simulation), kJson);
                }
            });
        });

        if (opts.static_dir) server.set_mount_point("/", opts.static_dir->string());
    }

    void replace_topology(Topology next) {
        const auto bad = cross_reference_violations(next, templates);
        if (!bad.empty()) throw bad.front();
        topology = std::move(next);
    }

    void launch(SimulationDocument sim) {
        RunJob job;
        {
            std::lock_guard lk(m);
            const std::string name = sim.config.name;
            std::error_code ec;
            if (runs.count(name) || std::filesystem::exists(opts.output_root / name, ec))
                fail("RunExists", "name", "a simulation named '" + name + "' already exists");
            // Constructing the app surfaces InsufficientRouters / TemplateResolutionError up front.
            RandomRequestApp probe(topology, templates, sim.config);
            job.record = std::make_shared<RunRecord>();
            job.record->name = name;
            job.topology = topology;
            job.templates = templates;
            job.simulation = std::move(sim);
            runs.emplace(name, job.record);
        }
        {
            std::lock_guard lk(jobs_m);
            jobs.push_back(std::move(job));
        }
        jobs_cv.notify_all();
    }
};

Service::Service(ServiceOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen() { return impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

std::uint64_t Service::version() const {
    std::lock_guard lk(impl_->m);
    return impl_->version;
}

void Service::wait_for_runs() const {
    std::unique_lock lk(impl_->jobs_m);
    impl_->jobs_cv.wait(lk, [this] { return impl_->jobs.empty() && impl_->busy == 0; });
}

}  // namespace qnet
