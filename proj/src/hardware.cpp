#include "qnet/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "qnet/error.hpp"

namespace qnet {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

Picoseconds seconds_to_ps(double seconds) { return std::llround(seconds * kPicosecondsPerSecond); }

Picoseconds MemoryParams::period_ps() const { return std::llround(kPicosecondsPerSecond / frequency_hz); }

Picoseconds MemoryParams::coherence_ps() const { return seconds_to_ps(coherence_time_s); }

void MemoryParams::validate() const {
    if (!(coherence_time_s > 0)) fail("ShapeMismatch", "coherence_time_s", "must be positive");
    if (!(frequency_hz > 0)) fail("ShapeMismatch", "frequency_hz", "must be positive");
    if (!is_probability(efficiency)) fail("ShapeMismatch", "efficiency", "must lie in [0, 1]");
    if (!is_probability(fidelity)) fail("ShapeMismatch", "fidelity", "must lie in [0, 1]");
}

Picoseconds DetectorParams::dead_time_ps() const {
    if (count_rate_hz <= 0) return 0;
    return std::llround(kPicosecondsPerSecond / count_rate_hz);
}

void DetectorParams::validate() const {
    if (!is_probability(efficiency)) fail("ShapeMismatch", "efficiency", "must lie in [0, 1]");
    if (!(count_rate_hz >= 0)) fail("ShapeMismatch", "count_rate_hz", "must be non-negative");
    if (!(dark_count_rate_hz >= 0)) fail("ShapeMismatch", "dark_count_rate_hz", "must be non-negative");
    if (time_resolution_ps < 1) fail("ShapeMismatch", "time_resolution_ps", "must be at least 1 ps");
}

void BSMParams::validate() const {
    detector.validate();
    if (coincidence_window_ps < detector.time_resolution_ps)
        fail("ShapeMismatch", "coincidence_window_ps", "must be at least the detector time resolution");
}

void ChannelParams::validate() const {
    if (!(distance_m >= 0)) fail("NegativeValue", "distance_m");
    if (!(attenuation_db_km >= 0)) fail("NegativeValue", "attenuation_db_km");
    if (!(light_speed_m_s > 0)) fail("NegativeValue", "light_speed_m_s");
}

Picoseconds propagation_delay(const ChannelParams& ch) {
    return std::llround(ch.distance_m / ch.light_speed_m_s * kPicosecondsPerSecond);
}

double transmission_probability(const ChannelParams& ch) {
    const double loss_db = ch.distance_m / 1000.0 * ch.attenuation_db_km;
    return std::pow(10.0, -loss_db / 10.0);
}

Picoseconds quantize(Picoseconds t, Picoseconds resolution) {
    Picoseconds k = t / resolution;
    Picoseconds rem = t - k * resolution;
    if (rem < 0) {  // floor division for negative t
        --k;
        rem += resolution;
    }
    if (2 * rem > resolution) ++k;
    return k * resolution;
}

const char* to_string(SlotState s) {
    switch (s) {
        case SlotState::Ground: return "Ground";
        case SlotState::Excited: return "Excited";
        case SlotState::Entangled: return "Entangled";
        case SlotState::Reserved: return "Reserved";
    }
    return "?";
}

MemoryArray::MemoryArray(std::string node, std::size_t size, MemoryParams params)
    : node_(std::move(node)), params_(params), slots_(size) {
    if (size == 0) fail("ShapeMismatch", "memory_array_size", "must be positive");
    params_.validate();
}

const MemorySlot& MemoryArray::slot(std::size_t i) const {
    if (i >= slots_.size()) fail("SlotOutOfRange", node_ + "[" + std::to_string(i) + "]");
    return slots_[i];
}

MemorySlot& MemoryArray::at(std::size_t i) {
    if (i >= slots_.size()) fail("SlotOutOfRange", node_ + "[" + std::to_string(i) + "]");
    return slots_[i];
}

std::optional<Photon> MemoryArray::excite(std::size_t i, Picoseconds now, Rng& rng) {
    MemorySlot& s = at(i);
    if ((s.state != SlotState::Ground && s.state != SlotState::Reserved) || now < s.ready_at)
        fail("SlotBusy", node_ + "[" + std::to_string(i) + "]", "memory has not returned to its ground state");
    s.state = SlotState::Excited;
    s.ready_at = now + params_.period_ps();
    if (!rng.bernoulli(params_.efficiency)) return std::nullopt;
    return Photon{now, SlotRef{node_, i}, true};
}

void MemoryArray::entangle(std::size_t i, SlotRef partner, Picoseconds now, double fidelity) {
    MemorySlot& s = at(i);
    if (s.state != SlotState::Excited)
        fail("InvalidTransition", node_ + "[" + std::to_string(i) + "]", "only an excited memory can be entangled");
    s.state = SlotState::Entangled;
    s.partner = std::move(partner);
    s.entangled_since = now;
    s.pair_fidelity = fidelity;
}

void MemoryArray::retarget(std::size_t i, SlotRef partner, double fidelity) {
    MemorySlot& s = at(i);
    if (s.state != SlotState::Entangled)
        fail("InvalidTransition", node_ + "[" + std::to_string(i) + "]", "only an entangled memory can be retargeted");
    s.partner = std::move(partner);
    s.pair_fidelity = fidelity;
}

void MemoryArray::reset(std::size_t i) {
    MemorySlot& s = at(i);
    s.state = s.request ? SlotState::Reserved : SlotState::Ground;
    s.partner = {};
    s.pair_fidelity = 0;
}

void MemoryArray::reserve(std::size_t i, std::uint64_t request) {
    MemorySlot& s = at(i);
    if (s.state != SlotState::Ground || s.request)
        fail("SlotBusy", node_ + "[" + std::to_string(i) + "]", "slot is already held");
    s.state = SlotState::Reserved;
    s.request = request;
}

void MemoryArray::release(std::size_t i) {
    MemorySlot& s = at(i);
    s.request.reset();
    s.state = SlotState::Ground;
    s.partner = {};
    s.pair_fidelity = 0;
}

bool MemoryArray::expired(std::size_t i, Picoseconds now) const {
    const MemorySlot& s = slot(i);
    return s.state == SlotState::Entangled && now - s.entangled_since >= params_.coherence_ps();
}

std::size_t MemoryArray::free_count() const { return slots_.size() - held_count(); }

std::size_t MemoryArray::held_count() const {
    std::size_t n = 0;
    for (const auto& s : slots_)
        if (s.request || s.state == SlotState::Entangled) ++n;
    return n;
}

std::optional<DetectionEvent> detector_observe(DetectorState& det, Picoseconds arrival, bool is_real_photon,
                                               Rng& rng) {
    if (is_real_photon && !rng.bernoulli(det.params.efficiency)) return std::nullopt;
    const Picoseconds stamp = quantize(arrival, det.params.time_resolution_ps);
    if (det.last_detection && stamp - *det.last_detection < det.params.dead_time_ps()) return std::nullopt;
    det.last_detection = stamp;
    return DetectionEvent{stamp, !is_real_photon};
}

std::vector<DetectionEvent> dark_count_events(DetectorState& det, Picoseconds t0, Picoseconds t1, Rng& rng) {
    std::vector<DetectionEvent> out;
    const double rate_per_ps = det.params.dark_count_rate_hz / kPicosecondsPerSecond;
    if (rate_per_ps <= 0 || t1 <= t0) return out;
    double t = static_cast<double>(t0);
    const double end = static_cast<double>(t1);
    while (true) {
        t += rng.exponential(rate_per_ps);
        if (t > end) break;
        const Picoseconds arrival = std::llround(t);
        // A click whose quantized stamp falls outside the window is dropped.
        const Picoseconds stamp = quantize(arrival, det.params.time_resolution_ps);
        if (stamp < t0 || stamp > t1) continue;
        if (auto ev = detector_observe(det, arrival, false, rng)) out.push_back(*ev);
    }
    return out;
}

std::vector<DetectionEvent> dark_count_events(const DetectorParams& params, Picoseconds t0, Picoseconds t1,
                                              Rng& rng) {
    DetectorState det(params);
    return dark_count_events(det, t0, t1, rng);
}

BSMState::BSMState(BSMParams p, bool dark) : params(p), detectors{DetectorState(p.detector), DetectorState(p.detector)},
                                              dark_counts(dark) {}

BSMOutcome bsm_measure(BSMState& bsm, const std::optional<PhotonArrival>& a, const std::optional<PhotonArrival>& b,
                       Rng& rng) {
    if (a && b && std::llabs(a->at - b->at) > bsm.params.coincidence_window_ps)
        fail("CoincidenceWindowViolation", {}, "photon arrivals are " + std::to_string(std::llabs(a->at - b->at)) +
                                                   " ps apart");

    const std::optional<PhotonArrival>* in[2] = {&a, &b};
    std::optional<DetectionEvent> clicks[2];
    for (int k = 0; k < 2; ++k) {
        const auto& arrival = *in[k];
        if (arrival && arrival->photon.alive) clicks[k] = detector_observe(bsm.detectors[k], arrival->at, true, rng);
    }

    if (bsm.dark_counts) {
        // A dark click on the silent detector inside the coincidence window completes the pair.
        for (int k = 0; k < 2; ++k) {
            const auto& other = clicks[1 - k];
            if (clicks[k] || !other || other->dark) continue;
            const double window_s = static_cast<double>(bsm.params.coincidence_window_ps) / kPicosecondsPerSecond;
            const double p_dark = -std::expm1(-bsm.params.detector.dark_count_rate_hz * window_s);
            if (!rng.bernoulli(p_dark)) continue;
            const auto half = bsm.params.coincidence_window_ps / 2;
            const Picoseconds at =
                std::max<Picoseconds>(0, other->timestamp - half + static_cast<Picoseconds>(rng.index(2 * half + 1)));
            clicks[k] = detector_observe(bsm.detectors[k], at, false, rng);
        }
    }

    if (!clicks[0] || !clicks[1]) return {};
    if (!rng.bernoulli(0.5)) return {};
    return BSMOutcome{true, 1 + static_cast<int>(rng.index(2))};
}

}  // namespace qnet
