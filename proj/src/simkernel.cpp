#include "qnet/simkernel.hpp"

#include <algorithm>

namespace qnet {

void Timeline::schedule(Event ev) {
    if (ev.time < now_)
        fail("PastEvent", ev.target,
             ev.kind + " scheduled at " + std::to_string(ev.time) + " ps, now is " + std::to_string(now_) + " ps");
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
}

void Timeline::schedule(Picoseconds time, std::string target, std::string kind, std::function<void()> action) {
    schedule(Event{time, 0, std::move(target), std::move(kind), std::move(action)});
}

void Timeline::update_progress() {
    const double p = stop_time_ <= 0 ? 1.0 : std::min(static_cast<double>(now_) / static_cast<double>(stop_time_), 1.0);
    progress_.store(p, std::memory_order_release);
    if (sink_) sink_->store(p, std::memory_order_release);
}

RunStats Timeline::run() {
    RunStats stats;
    update_progress();
    while (!queue_.empty() && queue_.top().time <= stop_time_) {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.time;
        update_progress();
        try {
            if (ev.action) ev.action();
        } catch (const HandlerFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw HandlerFailure(ev, e.what());
        }
        ++stats.events_processed;
        if (after_event_) after_event_(ev);
    }
    now_ = std::max(now_, stop_time_);
    update_progress();
    stats.final_time = now_;
    return stats;
}

}  // namespace qnet
