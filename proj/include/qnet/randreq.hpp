#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qnet/hardware.hpp"
#include "qnet/simkernel.hpp"
#include "qnet/templates.hpp"
#include "qnet/topology.hpp"

namespace qnet {

struct SimulationConfig {
    std::string name = "simulation";
    double duration_s = 10;
    std::int64_t seed = 0;
    double request_rate_hz = 1;
    int memories_per_request = 1;
    double target_fidelity = 0.5;
    double swap_success_prob = 1.0;

    /// Errors: SchemaError naming the offending field.
    void validate() const;

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

/// Run names double as directory names: [A-Za-z0-9._-]+, not "." or "..".
bool is_safe_run_name(std::string_view name);

struct Request {
    std::uint64_t id = 0;
    Picoseconds arrival_time = 0;
    std::string source;
    std::string destination;
    std::optional<Picoseconds> granted_at;
    std::optional<Picoseconds> completed_at;
    std::uint64_t completed_pairs = 0;
    bool rejected = false;
    std::vector<std::string> path;

    friend bool operator==(const Request&, const Request&) = default;
};

struct NodeReport {
    std::string name;
    double avg_wait_time_ps = 0;
    std::uint64_t reservations = 0;
    double throughput_pairs_per_s = 0;

    friend bool operator==(const NodeReport&, const NodeReport&) = default;
};

struct SimulationTotals {
    std::int64_t seed = 0;
    std::uint64_t generated = 0;
    std::uint64_t granted = 0;
    std::uint64_t completed = 0;
    std::uint64_t rejected = 0;
    std::uint64_t incomplete = 0;
    std::uint64_t pairs_delivered = 0;
    std::uint64_t pairs_discarded = 0;
    std::uint64_t link_attempts = 0;
    std::uint64_t link_successes = 0;
    std::uint64_t swap_attempts = 0;
    std::uint64_t swap_successes = 0;
    std::uint64_t expired_pairs = 0;
    std::uint64_t events_processed = 0;
    double avg_wait_time_ps = 0;

    friend bool operator==(const SimulationTotals&, const SimulationTotals&) = default;
};

struct SimulationReport {
    std::string name;
    double duration_s = 0;
    /// One entry per router, in topology order.
    std::vector<NodeReport> nodes;
    SimulationTotals totals;

    friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

struct SimulationOptions {
    /// Let detector dark counts stand in for lost photons at BSM nodes.
    bool dark_counts = false;
    /// Receives run progress in [0, 1] as the timeline advances.
    std::atomic<double>* progress = nullptr;
};

/// Poisson arrivals at cfg.request_rate_hz over [0, duration]; source uniform over routers, destination
/// uniform over the rest. Errors: InsufficientRouters.
std::vector<Request> generate_requests(const SimulationConfig& cfg, const std::vector<std::string>& routers, Rng& rng);
std::vector<Request> generate_requests(const SimulationConfig& cfg, const std::vector<std::string>& routers);

/// Router-level link realized by an implicit BSM node.
struct QuantumLink {
    std::string bsm;
    std::string end[2];  // parent routers, lexicographic order
    ChannelParams half[2];
    Picoseconds flight_ps[2] = {0, 0};   // photon travel, router -> BSM
    Picoseconds herald_ps[2] = {0, 0};   // classical result, BSM -> router
    double transmission[2] = {1, 1};
    double fidelity = 0;                 // min of the two memories' fidelity
    BSMState bsm_state;

    int side_of(std::string_view router) const { return end[0] == router ? 0 : 1; }
};

struct LinkAttemptOutcome {
    bool success = false;
    Picoseconds measured_at = 0;  // BSM measurement time
    Picoseconds heralded_at = 0;  // result known at both ends
};

/// One heralded generation attempt on `link` starting at `now`: both memories excite, surviving photons
/// fly to the BSM, the BSM measures. Memories are left Excited; the caller entangles or resets them.
LinkAttemptOutcome attempt_link(QuantumLink& link, MemoryArray& mem_a, std::size_t slot_a, MemoryArray& mem_b,
                                std::size_t slot_b, Picoseconds now, Rng& rng);

/// Random-request traffic over a topology: reservation of memories along shortest router paths,
/// heralded link generation, entanglement swapping and per-node metrics.
class RandomRequestApp {
public:
    /// Errors: InsufficientRouters, TemplateResolutionError, SchemaError (config).
    RandomRequestApp(const Topology& topo, const TemplateStore& store, SimulationConfig cfg,
                     SimulationOptions opts = {});
    ~RandomRequestApp();

    RandomRequestApp(const RandomRequestApp&) = delete;
    RandomRequestApp& operator=(const RandomRequestApp&) = delete;

    /// Draw the request schedule from the timeline generator and enqueue it.
    void generate();
    /// Enqueue explicit requests (ids are reassigned in submission order).
    void submit(std::vector<Request> requests);

    /// Run to cfg.duration_s, then release every held memory.
    RunStats run();
    SimulationReport report() const;

    const SimulationConfig& config() const { return cfg_; }
    const std::vector<Request>& requests() const { return requests_; }
    const MemoryArray& memory(std::string_view router) const;
    const std::map<std::string, MemoryArray, std::less<>>& memories() const { return memories_; }
    const QuantumLink& link(std::string_view a, std::string_view b) const;
    Timeline& timeline() { return timeline_; }

    /// Shortest router path by hop count; ties go to the lexicographically smallest name sequence.
    /// Empty when unreachable.
    std::vector<std::string> shortest_path(std::string_view from, std::string_view to) const;

    /// Memories a granted request holds at each router of `path`: m at the ends, 2m in between.
    std::map<std::string, std::size_t> memory_demand(const std::vector<std::string>& path) const;

    /// Grant request `index` now if every router on its path has room; otherwise queue it.
    /// Returns true when granted. Errors: Unreachable (request marked rejected).
    bool reserve_path(std::size_t index);

    /// Invoked after every processed event.
    void set_probe(std::function<void(const RandomRequestApp&)> probe) { probe_ = std::move(probe); }

    const SimulationTotals& counters() const { return totals_; }

private:
    struct Flow;
    struct Segment;
    struct Channel;

    void on_arrival(std::size_t index);
    void start_hop(Flow& flow, std::size_t ch, std::size_t hop, Picoseconds at);
    void on_attempt(std::uint64_t flow_id, std::size_t ch, std::size_t hop, std::uint64_t epoch);
    void on_link_result(std::uint64_t flow_id, std::size_t ch, std::size_t hop, std::uint64_t epoch, bool success,
                        Picoseconds measured_at);
    void on_expiry(std::uint64_t flow_id, std::size_t ch, std::uint64_t segment_id);
    void settle(Flow& flow, std::size_t ch);
    void regenerate(Flow& flow, std::size_t ch, std::size_t from, std::size_t to);
    void drop_segment(Flow& flow, std::size_t ch, std::size_t seg_index);
    void finish_channel(Flow& flow, std::size_t ch);
    void release_flow(Flow& flow);
    void retry_queue();
    QuantumLink& link_mut(std::string_view a, std::string_view b);
    Flow* find_flow(std::uint64_t id);

    SimulationConfig cfg_;
    SimulationOptions opts_;
    std::vector<std::string> routers_;
    std::map<std::string, MemoryArray, std::less<>> memories_;
    std::map<std::pair<std::string, std::string>, QuantumLink> links_;
    std::map<std::string, std::vector<std::string>, std::less<>> adjacency_;
    Timeline timeline_;

    std::vector<Request> requests_;
    std::deque<std::size_t> waiting_;
    std::map<std::uint64_t, std::unique_ptr<Flow>> flows_;
    std::map<std::string, std::uint64_t> reservations_;
    std::map<std::string, std::uint64_t> pairs_at_;
    SimulationTotals totals_;
    std::uint64_t next_segment_id_ = 0;
    std::function<void(const RandomRequestApp&)> probe_;
};

/// Build the network, generate traffic, run to cfg.duration_s and report.
/// Errors: InsufficientRouters, TemplateResolutionError.
SimulationReport run_simulation(const Topology& topo, const TemplateStore& store, const SimulationConfig& cfg,
                                const SimulationOptions& opts = {});

}  // namespace qnet
