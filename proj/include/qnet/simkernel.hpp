#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "qnet/error.hpp"
#include "qnet/hardware.hpp"
#include "qnet/rng.hpp"

namespace qnet {

struct Event {
    Picoseconds time = 0;
    std::uint64_t seq = 0;  // assigned by the timeline
    std::string target;     // entity the event is addressed to
    std::string kind;
    std::function<void()> action;
};

struct RunStats {
    std::uint64_t events_processed = 0;
    Picoseconds final_time = 0;

    friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// Raised by Timeline::run when an event action throws; names the entity and event kind.
class HandlerFailure : public Error {
public:
    HandlerFailure(const Event& ev, const std::string& what)
        : Error("HandlerFailure", ev.target, ev.kind + " at " + std::to_string(ev.time) + " ps: " + what),
          time_(ev.time),
          kind_(ev.kind) {}

    Picoseconds time() const { return time_; }
    const std::string& kind() const { return kind_; }

private:
    Picoseconds time_;
    std::string kind_;
};

/// Discrete-event timeline: events run in strict (time, seq) order, seq being schedule order.
///
/// The timeline owns the run's single generator; actions draw from it in execution order, which makes a
/// run a pure function of (seed, initial events, actions). progress() may be read from other threads.
class Timeline {
public:
    explicit Timeline(std::uint64_t seed = 0, Picoseconds stop_time = 0) : rng_(seed), stop_time_(stop_time) {}

    Timeline(const Timeline&) = delete;
    Timeline& operator=(const Timeline&) = delete;

    Picoseconds now() const { return now_; }
    Picoseconds stop_time() const { return stop_time_; }
    void set_stop_time(Picoseconds t) { stop_time_ = t; }
    Rng& rng() { return rng_; }
    std::size_t pending() const { return queue_.size(); }

    /// Errors: PastEvent.
    void schedule(Event ev);
    void schedule(Picoseconds time, std::string target, std::string kind, std::function<void()> action);

    /// Process events with time <= stop_time; afterwards now == stop_time. Errors: HandlerFailure.
    RunStats run();

    /// min(now / stop_time, 1).
    double progress() const { return progress_.load(std::memory_order_acquire); }

    /// Mirror progress into an external cell as well (e.g. a service's run record).
    void publish_progress_to(std::atomic<double>* sink) { sink_ = sink; }

    /// Called after every processed event (test probes, invariant checkers).
    void set_after_event(std::function<void(const Event&)> hook) { after_event_ = std::move(hook); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    void update_progress();

    Rng rng_;
    Picoseconds now_ = 0;
    Picoseconds stop_time_ = 0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::atomic<double> progress_{0.0};
    std::atomic<double>* sink_ = nullptr;
    std::function<void(const Event&)> after_event_;
};

}  // namespace qnet
