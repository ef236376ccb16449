#include "qnet/randreq.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "qnet/error.hpp"

namespace qnet {

void SimulationConfig::validate() const {
    if (name.empty()) fail("SchemaError", "name", "run name must be nonempty");
    if (!is_safe_run_name(name)) fail("SchemaError", "name", "run name may only use letters, digits, '.', '_' and '-'");
    if (!(duration_s > 0) || !std::isfinite(duration_s)) fail("SchemaError", "duration_s", "must be positive");
    if (!(request_rate_hz >= 0) || !std::isfinite(request_rate_hz))
        fail("SchemaError", "request_rate_hz", "must be non-negative");
    if (memories_per_request < 1) fail("SchemaError", "memories_per_request", "must be positive");
    if (!(target_fidelity >= 0 && target_fidelity <= 1)) fail("SchemaError", "target_fidelity", "must lie in [0, 1]");
    if (!(swap_success_prob >= 0 && swap_success_prob <= 1))
        fail("SchemaError", "swap_success_prob", "must lie in [0, 1]");
}

bool is_safe_run_name(std::string_view name) {
    if (name.empty() || name == "." || name == "..") return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
               c == '-';
    });
}

std::vector<Request> generate_requests(const SimulationConfig& cfg, const std::vector<std::string>& routers, Rng& rng) {
    if (routers.size() < 2) fail("InsufficientRouters", "nodes", "random requests need at least two routers");
    std::vector<Request> out;
    if (cfg.request_rate_hz <= 0) return out;
    double t = 0;
    while (true) {
        t += rng.exponential(cfg.request_rate_hz);
        if (t > cfg.duration_s) break;
        const auto n = routers.size();
        const auto src = rng.index(n);
        auto dst = rng.index(n - 1);
        if (dst >= src) ++dst;
        Request r;
        r.id = out.size();
        r.arrival_time = seconds_to_ps(t);
        r.source = routers[src];
        r.destination = routers[dst];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Request> generate_requests(const SimulationConfig& cfg, const std::vector<std::string>& routers) {
    Rng rng(static_cast<std::uint64_t>(cfg.seed));
    return generate_requests(cfg, routers, rng);
}

LinkAttemptOutcome attempt_link(QuantumLink& link, MemoryArray& mem_a, std::size_t slot_a, MemoryArray& mem_b,
                                std::size_t slot_b, Picoseconds now, Rng& rng) {
    std::optional<Photon> photons[2] = {mem_a.excite(slot_a, now, rng), mem_b.excite(slot_b, now, rng)};
    std::optional<PhotonArrival> arrivals[2];
    for (int k = 0; k < 2; ++k) {
        if (!photons[k]) continue;
        photons[k]->alive = rng.bernoulli(link.transmission[k]);
        arrivals[k] = PhotonArrival{*photons[k], now + link.flight_ps[k]};
    }

    LinkAttemptOutcome out;
    out.measured_at = now + std::max(link.flight_ps[0], link.flight_ps[1]);
    out.heralded_at = out.measured_at + std::max(link.herald_ps[0], link.herald_ps[1]);
    const bool coincident = !(arrivals[0] && arrivals[1]) ||
                            std::llabs(arrivals[0]->at - arrivals[1]->at) <= link.bsm_state.params.coincidence_window_ps;
    if (coincident) out.success = bsm_measure(link.bsm_state, arrivals[0], arrivals[1], rng).success;
    return out;
}

// An entangled pair between path positions `from` and `to` of a channel.
struct RandomRequestApp::Segment {
    std::uint64_t id = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    double fidelity = 0;
    Picoseconds left_expiry = 0;
    Picoseconds right_expiry = 0;

    Picoseconds expires_at() const { return std::min(left_expiry, right_expiry); }
};

// One end-to-end pair under construction. slots[h] = {slot at path[h], slot at path[h+1]} for hop h.
struct RandomRequestApp::Channel {
    std::vector<std::array<std::size_t, 2>> slots;
    std::vector<std::uint64_t> hop_epoch;
    std::vector<Segment> segments;  // ordered by `from`
    bool done = false;
};

struct RandomRequestApp::Flow {
    std::uint64_t id = 0;  // request index
    std::vector<std::string> path;
    std::vector<Channel> channels;
    std::size_t remaining = 0;
    std::map<std::string, std::vector<std::size_t>> held;
    bool finished = false;
};

RandomRequestApp::RandomRequestApp(const Topology& topo, const TemplateStore& store, SimulationConfig cfg,
                                   SimulationOptions opts)
    : cfg_(std::move(cfg)), opts_(opts), timeline_(static_cast<std::uint64_t>(cfg_.seed), seconds_to_ps(cfg_.duration_s)) {
    cfg_.validate();
    routers_ = topo.router_names();
    if (routers_.size() < 2) fail("InsufficientRouters", "nodes", "random requests need at least two routers");

    const auto& nodes = topo.nodes();
    auto resolve = [&](std::size_t i) {
        try {
            return store.resolve(nodes[i]);
        } catch (const Error& e) {
            fail("TemplateResolutionError", "nodes[" + std::to_string(i) + "].template", e.what());
        }
    };

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].type != NodeType::QuantumRouter) continue;
        const auto hw = std::get<RouterHardware>(resolve(i));
        memories_.emplace(nodes[i].name,
                          MemoryArray(nodes[i].name, static_cast<std::size_t>(hw.memory_array_size), hw.memory));
        adjacency_[nodes[i].name];
        reservations_[nodes[i].name] = 0;
        pairs_at_[nodes[i].name] = 0;
    }

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeSpec& n = nodes[i];
        if (n.type != NodeType::BSMNode || !n.parent) continue;
        QuantumLink link;
        link.bsm = n.name;
        link.end[0] = n.parent->first;
        link.end[1] = n.parent->second;
        link.bsm_state = BSMState(std::get<BSMParams>(resolve(i)), opts_.dark_counts);
        for (int k = 0; k < 2; ++k) {
            const EdgeSpec* e = topo.find_edge(link.end[k], n.name);
            link.half[k] = ChannelParams{e->distance_m, e->attenuation_db_km, kFiberLightSpeed};
            link.flight_ps[k] = propagation_delay(link.half[k]);
            link.transmission[k] = transmission_probability(link.half[k]);
            const std::int64_t override_ps = topo.cc_latency()[i][*topo.index_of(link.end[k])];
            link.herald_ps[k] = override_ps > 0 ? override_ps : link.flight_ps[k];
        }
        link.fidelity = std::min(memories_.at(link.end[0]).params().fidelity, memories_.at(link.end[1]).params().fidelity);
        adjacency_[link.end[0]].push_back(link.end[1]);
        adjacency_[link.end[1]].push_back(link.end[0]);
        links_.emplace(std::make_pair(link.end[0], link.end[1]), std::move(link));
    }
    for (auto& [_, nbrs] : adjacency_) std::sort(nbrs.begin(), nbrs.end());

    timeline_.publish_progress_to(opts_.progress);
    timeline_.set_after_event([this](const Event&) {
        if (probe_) probe_(*this);
    });
}

RandomRequestApp::~RandomRequestApp() = default;

const MemoryArray& RandomRequestApp::memory(std::string_view router) const {
    auto it = memories_.find(router);
    if (it == memories_.end()) fail("UnknownElement", std::string(router), "not a router");
    return it->second;
}

QuantumLink& RandomRequestApp::link_mut(std::string_view a, std::string_view b) {
    std::string x(a), y(b);
    if (y < x) std::swap(x, y);
    auto it = links_.find({x, y});
    if (it == links_.end()) fail("UnknownElement", edge_id(x, y), "no quantum link");
    return it->second;
}

const QuantumLink& RandomRequestApp::link(std::string_view a, std::string_view b) const {
    return const_cast<RandomRequestApp*>(this)->link_mut(a, b);
}

std::vector<std::string> RandomRequestApp::shortest_path(std::string_view from, std::string_view to) const {
    if (!adjacency_.count(from) || !adjacency_.count(to) || from == to) return {};
    // Hop distances to `to`, then a greedy walk picking the smallest name that stays on a shortest path.
    std::map<std::string, int, std::less<>> dist;
    std::deque<std::string> frontier{std::string(to)};
    dist[std::string(to)] = 0;
    while (!frontier.empty()) {
        const std::string cur = frontier.front();
        frontier.pop_front();
        for (const auto& nb : adjacency_.find(cur)->second)
            if (dist.emplace(nb, dist[cur] + 1).second) frontier.push_back(nb);
    }
    auto it = dist.find(from);
    if (it == dist.end()) return {};

    std::vector<std::string> path{std::string(from)};
    int d = it->second;
    while (d > 0) {
        for (const auto& nb : adjacency_.find(path.back())->second) {
            auto nd = dist.find(nb);
            if (nd != dist.end() && nd->second == d - 1) {
                path.push_back(nb);
                break;
            }
        }
        --d;
    }
    return path;
}

std::map<std::string, std::size_t> RandomRequestApp::memory_demand(const std::vector<std::string>& path) const {
    std::map<std::string, std::size_t> need;
    const auto m = static_cast<std::size_t>(cfg_.memories_per_request);
    for (std::size_t i = 0; i < path.size(); ++i) need[path[i]] = (i == 0 || i + 1 == path.size()) ? m : 2 * m;
    return need;
}

void RandomRequestApp::generate() { submit(generate_requests(cfg_, routers_, timeline_.rng())); }

void RandomRequestApp::submit(std::vector<Request> requests) {
    for (auto& r : requests) {
        if (r.source == r.destination) fail("SchemaError", "destination", "request endpoints must differ");
        memory(r.source);
        memory(r.destination);
        r.id = requests_.size();
        const std::size_t index = requests_.size();
        timeline_.schedule(r.arrival_time, r.source, "request-arrival", [this, index] { on_arrival(index); });
        requests_.push_back(std::move(r));
        ++totals_.generated;
    }
}

void RandomRequestApp::on_arrival(std::size_t index) {
    Request& r = requests_[index];
    r.path = shortest_path(r.source, r.destination);
    if (r.path.empty()) {
        r.rejected = true;
        ++totals_.rejected;
        return;
    }
    reserve_path(index);
}

bool RandomRequestApp::reserve_path(std::size_t index) {
    Request& r = requests_[index];
    if (r.path.empty()) r.path = shortest_path(r.source, r.destination);
    if (r.path.empty()) {
        if (!r.rejected) ++totals_.rejected;
        r.rejected = true;
        fail("Unreachable", r.source + "--" + r.destination, "no path between the request endpoints");
    }

    const auto need = memory_demand(r.path);
    bool fits = true;
    for (const auto& [node, count] : need)
        if (memories_.at(node).free_count() < count) fits = false;
    if (!fits) {
        if (std::find(waiting_.begin(), waiting_.end(), index) == waiting_.end()) waiting_.push_back(index);
        return false;
    }

    const Picoseconds now = timeline_.now();
    auto flow = std::make_unique<Flow>();
    flow->id = index;
    flow->path = r.path;
    for (const auto& [node, count] : need) {
        MemoryArray& mem = memories_.at(node);
        auto& slots = flow->held[node];
        for (std::size_t s = 0; s < mem.size() && slots.size() < count; ++s) {
            if (mem.slot(s).request || mem.slot(s).state != SlotState::Ground) continue;
            mem.reserve(s, r.id);
            slots.push_back(s);
        }
        ++reservations_[node];
    }

    const std::size_t hops = r.path.size() - 1;
    const auto m = static_cast<std::size_t>(cfg_.memories_per_request);
    flow->channels.resize(m);
    flow->remaining = m;
    for (std::size_t k = 0; k < m; ++k) {
        Channel& ch = flow->channels[k];
        ch.slots.resize(hops);
        ch.hop_epoch.assign(hops, 0);
        for (std::size_t h = 0; h < hops; ++h) {
            const auto& left = flow->held.at(r.path[h]);
            const auto& right = flow->held.at(r.path[h + 1]);
            ch.slots[h][0] = h == 0 ? left[k] : left[2 * k + 1];
            ch.slots[h][1] = h + 1 == hops ? right[k] : right[2 * k];
        }
    }

    r.granted_at = now;
    ++totals_.granted;
    std::erase(waiting_, index);
    Flow& f = *flow;
    flows_.emplace(index, std::move(flow));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t h = 0; h < hops; ++h) start_hop(f, k, h, now);
    return true;
}

RandomRequestApp::Flow* RandomRequestApp::find_flow(std::uint64_t id) {
    auto it = flows_.find(id);
    return it == flows_.end() ? nullptr : it->second.get();
}

void RandomRequestApp::start_hop(Flow& flow, std::size_t ch, std::size_t hop, Picoseconds at) {
    const auto& slots = flow.channels[ch].slots[hop];
    at = std::max({at, timeline_.now(), memories_.at(flow.path[hop]).slot(slots[0]).ready_at,
                   memories_.at(flow.path[hop + 1]).slot(slots[1]).ready_at});
    const std::uint64_t epoch = flow.channels[ch].hop_epoch[hop];
    const std::uint64_t id = flow.id;
    timeline_.schedule(at, link_mut(flow.path[hop], flow.path[hop + 1]).bsm, "link-attempt",
                       [this, id, ch, hop, epoch] { on_attempt(id, ch, hop, epoch); });
}

void RandomRequestApp::on_attempt(std::uint64_t flow_id, std::size_t ch, std::size_t hop, std::uint64_t epoch) {
    Flow* flow = find_flow(flow_id);
    if (!flow || flow->channels[ch].done || flow->channels[ch].hop_epoch[hop] != epoch) return;

    const std::string& u = flow->path[hop];
    const std::string& v = flow->path[hop + 1];
    QuantumLink& link = link_mut(u, v);
    const auto& slots = flow->channels[ch].slots[hop];
    const int su = link.side_of(u);
    std::size_t slot_of[2];
    slot_of[su] = slots[0];
    slot_of[1 - su] = slots[1];

    ++totals_.link_attempts;
    const LinkAttemptOutcome out = attempt_link(link, memories_.at(link.end[0]), slot_of[0], memories_.at(link.end[1]),
                                                slot_of[1], timeline_.now(), timeline_.rng());
    timeline_.schedule(out.heralded_at, link.bsm, "link-herald",
                       [this, flow_id, ch, hop, epoch, success = out.success, at = out.measured_at] {
                           on_link_result(flow_id, ch, hop, epoch, success, at);
                       });
}

void RandomRequestApp::on_link_result(std::uint64_t flow_id, std::size_t ch_index, std::size_t hop,
                                      std::uint64_t epoch, bool success, Picoseconds measured_at) {
    Flow* flow = find_flow(flow_id);
    if (!flow || flow->channels[ch_index].done || flow->channels[ch_index].hop_epoch[hop] != epoch) return;
    Channel& ch = flow->channels[ch_index];
    MemoryArray& mu = memories_.at(flow->path[hop]);
    MemoryArray& mv = memories_.at(flow->path[hop + 1]);
    const auto slots = ch.slots[hop];

    if (!success) {
        mu.reset(slots[0]);
        mv.reset(slots[1]);
        start_hop(*flow, ch_index, hop, timeline_.now());
        return;
    }

    ++totals_.link_successes;
    const QuantumLink& link = link_mut(mu.node(), mv.node());
    mu.entangle(slots[0], SlotRef{mv.node(), slots[1]}, measured_at, link.fidelity);
    mv.entangle(slots[1], SlotRef{mu.node(), slots[0]}, measured_at, link.fidelity);

    Segment seg;
    seg.id = next_segment_id_++;
    seg.from = hop;
    seg.to = hop + 1;
    seg.fidelity = link.fidelity;
    seg.left_expiry = measured_at + mu.params().coherence_ps();
    seg.right_expiry = measured_at + mv.params().coherence_ps();
    const auto pos = std::find_if(ch.segments.begin(), ch.segments.end(), [&](const Segment& s) { return s.from > hop; });
    ch.segments.insert(pos, seg);
    timeline_.schedule(std::max(seg.expires_at(), timeline_.now()), link.bsm, "pair-expiry",
                       [this, flow_id, ch_index, id = seg.id] { on_expiry(flow_id, ch_index, id); });

    settle(*flow, ch_index);
    if (flow->finished) flows_.erase(flow_id);
}

void RandomRequestApp::on_expiry(std::uint64_t flow_id, std::size_t ch_index, std::uint64_t segment_id) {
    Flow* flow = find_flow(flow_id);
    if (!flow) return;
    Channel& ch = flow->channels[ch_index];
    auto it = std::find_if(ch.segments.begin(), ch.segments.end(), [&](const Segment& s) { return s.id == segment_id; });
    if (it == ch.segments.end()) return;
    const std::size_t from = it->from, to = it->to;
    ++totals_.expired_pairs;
    drop_segment(*flow, ch_index, static_cast<std::size_t>(it - ch.segments.begin()));
    regenerate(*flow, ch_index, from, to);
}

void RandomRequestApp::drop_segment(Flow& flow, std::size_t ch_index, std::size_t seg_index) {
    Channel& ch = flow.channels[ch_index];
    const Segment seg = ch.segments[seg_index];
    memories_.at(flow.path[seg.from]).reset(ch.slots[seg.from][0]);
    memories_.at(flow.path[seg.to]).reset(ch.slots[seg.to - 1][1]);
    ch.segments.erase(ch.segments.begin() + static_cast<std::ptrdiff_t>(seg_index));
}

void RandomRequestApp::regenerate(Flow& flow, std::size_t ch_index, std::size_t from, std::size_t to) {
    Channel& ch = flow.channels[ch_index];
    for (std::size_t h = from; h < to; ++h) {
        ++ch.hop_epoch[h];
        start_hop(flow, ch_index, h, timeline_.now());
    }
}

// Swap adjacent pairs (leftmost junction first) and deliver once a pair spans the whole path.
void RandomRequestApp::settle(Flow& flow, std::size_t ch_index) {
    Channel& ch = flow.channels[ch_index];
    const std::size_t last = flow.path.size() - 1;
    const Picoseconds now = timeline_.now();

    while (true) {
        if (ch.segments.size() == 1 && ch.segments[0].from == 0 && ch.segments[0].to == last) {
            const Segment seg = ch.segments[0];
            drop_segment(flow, ch_index, 0);
            if (seg.fidelity >= cfg_.target_fidelity) {
                finish_channel(flow, ch_index);
            } else {
                ++totals_.pairs_discarded;
                regenerate(flow, ch_index, 0, last);
            }
            return;
        }

        std::size_t j = 1;
        while (j < ch.segments.size() && ch.segments[j - 1].to != ch.segments[j].from) ++j;
        if (j >= ch.segments.size()) return;

        const Segment left = ch.segments[j - 1];
        const Segment right = ch.segments[j];
        // Pairs past their coherence time are never consumed.
        if (now >= left.expires_at() || now >= right.expires_at()) {
            const Segment& stale = now >= left.expires_at() ? left : right;
            const std::size_t idx = now >= left.expires_at() ? j - 1 : j;
            ++totals_.expired_pairs;
            drop_segment(flow, ch_index, idx);
            regenerate(flow, ch_index, stale.from, stale.to);
            continue;
        }

        ++totals_.swap_attempts;
        const std::size_t k = left.to;
        memories_.at(flow.path[k]).reset(ch.slots[k - 1][1]);
        memories_.at(flow.path[k]).reset(ch.slots[k][0]);
        if (timeline_.rng().bernoulli(cfg_.swap_success_prob)) {
            ++totals_.swap_successes;
            Segment merged;
            merged.id = next_segment_id_++;
            merged.from = left.from;
            merged.to = right.to;
            merged.fidelity = left.fidelity * right.fidelity;
            merged.left_expiry = left.left_expiry;
            merged.right_expiry = right.right_expiry;
            ch.segments.erase(ch.segments.begin() + static_cast<std::ptrdiff_t>(j - 1),
                              ch.segments.begin() + static_cast<std::ptrdiff_t>(j + 1));
            ch.segments.insert(ch.segments.begin() + static_cast<std::ptrdiff_t>(j - 1), merged);
            MemoryArray& ml = memories_.at(flow.path[merged.from]);
            MemoryArray& mr = memories_.at(flow.path[merged.to]);
            const std::size_t sl = ch.slots[merged.from][0];
            const std::size_t sr = ch.slots[merged.to - 1][1];
            // The surviving end memories now share the longer pair.
            ml.retarget(sl, SlotRef{mr.node(), sr}, merged.fidelity);
            mr.retarget(sr, SlotRef{ml.node(), sl}, merged.fidelity);
            const std::uint64_t id = flow.id;
            timeline_.schedule(std::max(merged.expires_at(), now), flow.path[merged.from], "pair-expiry",
                               [this, id, ch_index, sid = merged.id] { on_expiry(id, ch_index, sid); });
        } else {
            // Both pairs are lost; the four memories go back to their reservation and every hop regenerates.
            drop_segment(flow, ch_index, j);
            drop_segment(flow, ch_index, j - 1);
            regenerate(flow, ch_index, left.from, right.to);
        }
    }
}

void RandomRequestApp::finish_channel(Flow& flow, std::size_t ch_index) {
    flow.channels[ch_index].done = true;
    Request& r = requests_[flow.id];
    ++r.completed_pairs;
    ++totals_.pairs_delivered;
    ++pairs_at_[r.source];
    ++pairs_at_[r.destination];
    if (--flow.remaining == 0) {
        r.completed_at = timeline_.now();
        ++totals_.completed;
        release_flow(flow);
        retry_queue();
    }
}

void RandomRequestApp::release_flow(Flow& flow) {
    for (const auto& [node, slots] : flow.held)
        for (std::size_t s : slots) memories_.at(node).release(s);
    flow.finished = true;
}

void RandomRequestApp::retry_queue() {
    const std::vector<std::size_t> snapshot(waiting_.begin(), waiting_.end());
    for (std::size_t index : snapshot) reserve_path(index);
}

RunStats RandomRequestApp::run() {
    const RunStats stats = timeline_.run();
    totals_.events_processed = stats.events_processed;
    for (auto& [_, flow] : flows_)
        for (const auto& [node, slots] : flow->held)
            for (std::size_t s : slots) memories_.at(node).release(s);
    flows_.clear();
    waiting_.clear();
    return stats;
}

SimulationReport RandomRequestApp::report() const {
    SimulationReport rep;
    rep.name = cfg_.name;
    rep.duration_s = cfg_.duration_s;
    rep.totals = totals_;
    rep.totals.seed = cfg_.seed;

    double wait_sum = 0;
    std::uint64_t wait_n = 0;
    std::map<std::string, std::pair<double, std::uint64_t>> node_wait;
    std::uint64_t incomplete = 0;
    for (const auto& r : requests_) {
        if (!r.rejected && !r.completed_at) ++incomplete;
        // Queued and mid-generation requests count as incomplete and stay out of the averages.
        if (!r.granted_at || !r.completed_at) continue;
        const double w = static_cast<double>(*r.granted_at - r.arrival_time);
        wait_sum += w;
        ++wait_n;
        for (const auto* node : {&r.source, &r.destination}) {
            node_wait[*node].first += w;
            ++node_wait[*node].second;
        }
    }
    rep.totals.incomplete = incomplete;
    rep.totals.avg_wait_time_ps = wait_n ? wait_sum / static_cast<double>(wait_n) : 0.0;

    for (const auto& name : routers_) {
        NodeReport nr;
        nr.name = name;
        if (auto it = node_wait.find(name); it != node_wait.end() && it->second.second > 0)
            nr.avg_wait_time_ps = it->second.first / static_cast<double>(it->second.second);
        nr.reservations = reservations_.at(name);
        nr.throughput_pairs_per_s = static_cast<double>(pairs_at_.at(name)) / cfg_.duration_s;
        rep.nodes.push_back(nr);
    }
    return rep;
}

SimulationReport run_simulation(const Topology& topo, const TemplateStore& store, const SimulationConfig& cfg,
                                const SimulationOptions& opts) {
    RandomRequestApp app(topo, store, cfg, opts);
    app.generate();
    app.run();
    return app.report();
}

}  // namespace qnet
