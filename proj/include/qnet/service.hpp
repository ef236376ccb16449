#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace qnet {

struct ServiceOptions {
    std::filesystem::path output_root = "runs";
    /// Simulations executing at once; further launches wait in FIFO order.
    int max_runs = 2;
    /// Directory of a built UI bundle, served at "/".
    std::optional<std::filesystem::path> static_dir;
};

enum class RunStatus { Running, Done, Failed };

const char* to_string(RunStatus s);

/// HTTP/1.1 JSON backend over a single workspace (topology + template store + simulation config).
///
/// Mutations are serialized and atomic: a 4xx response leaves the workspace unchanged. Each successful
/// mutation bumps the workspace version (X-Workspace-Version); a request carrying a stale If-Match gets 409.
/// Simulations run on background workers against a snapshot taken at launch.
class Service {
public:
    explicit Service(ServiceOptions opts = {});
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Bind to host:port (port 0 picks a free port). Returns the bound port, or -1 on failure.
    int bind(const std::string& host, int port);
    /// Serve until stop(). Requires a successful bind().
    bool listen();
    void stop();

    std::uint64_t version() const;

    /// Block until no simulation is queued or running.
    void wait_for_runs() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qnet
