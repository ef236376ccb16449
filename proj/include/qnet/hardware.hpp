#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnet/rng.hpp"

namespace qnet {

/// Simulation time: integer picoseconds.
using Picoseconds = std::int64_t;

inline constexpr double kPicosecondsPerSecond = 1e12;
inline constexpr double kFiberLightSpeed = 2e8;  // m/s

Picoseconds seconds_to_ps(double seconds);

struct MemoryParams {
    double coherence_time_s = 1.3;
    double frequency_hz = 2e4;
    double efficiency = 0.75;
    double fidelity = 0.9;

    /// Time for an excited memory to return to its ground state.
    Picoseconds period_ps() const;
    Picoseconds coherence_ps() const;
    void validate() const;

    friend bool operator==(const MemoryParams&, const MemoryParams&) = default;
};

struct DetectorParams {
    double efficiency = 0.9;
    double count_rate_hz = 2.5e7;
    double dark_count_rate_hz = 100;
    Picoseconds time_resolution_ps = 100;

    /// Dead time after a detection; zero when count_rate_hz is 0 (unbounded rate).
    Picoseconds dead_time_ps() const;
    void validate() const;

    friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

struct BSMParams {
    DetectorParams detector;
    Picoseconds coincidence_window_ps = 200;

    void validate() const;

    friend bool operator==(const BSMParams&, const BSMParams&) = default;
};

struct ChannelParams {
    double distance_m = 0;
    double attenuation_db_km = 0;
    double light_speed_m_s = kFiberLightSpeed;

    void validate() const;
};

/// round(L / c) in picoseconds.
Picoseconds propagation_delay(const ChannelParams& ch);

/// 10^(-L_km * attenuation / 10): probability a photon survives the fiber.
double transmission_probability(const ChannelParams& ch);

/// Round to the nearest multiple of `resolution`; exact ties go toward -infinity.
Picoseconds quantize(Picoseconds t, Picoseconds resolution);

struct SlotRef {
    std::string node;
    std::size_t slot = 0;

    friend bool operator==(const SlotRef&, const SlotRef&) = default;
};

struct Photon {
    Picoseconds emitted_at = 0;
    SlotRef source;
    bool alive = true;
};

enum class SlotState { Ground, Excited, Entangled, Reserved };

const char* to_string(SlotState s);

struct MemorySlot {
    SlotState state = SlotState::Ground;
    /// Reservation owning the slot; survives excitation and entanglement.
    std::optional<std::uint64_t> request;
    /// Earliest time the slot may be excited again (ground return).
    Picoseconds ready_at = 0;
    SlotRef partner;
    Picoseconds entangled_since = 0;
    double pair_fidelity = 0;
};

/// Homogeneous array of single-atom memories.
class MemoryArray {
public:
    MemoryArray(std::string node, std::size_t size, MemoryParams params);

    const std::string& node() const { return node_; }
    std::size_t size() const { return slots_.size(); }
    const MemoryParams& params() const { return params_; }
    const MemorySlot& slot(std::size_t i) const;

    /// Excite a Ground or Reserved slot. Emits a photon with probability `efficiency`.
    /// Throws SlotBusy if the slot has not yet returned to ground, SlotOutOfRange on a bad index.
    std::optional<Photon> excite(std::size_t i, Picoseconds now, Rng& rng);

    /// Excited -> Entangled.
    void entangle(std::size_t i, SlotRef partner, Picoseconds now, double fidelity);

    /// Point an Entangled slot at a new partner (after a swap); its age is unchanged.
    void retarget(std::size_t i, SlotRef partner, double fidelity);

    /// Drop excitation or entanglement; the slot falls back to Reserved (if owned) or Ground.
    void reset(std::size_t i);

    void reserve(std::size_t i, std::uint64_t request);
    /// Return the slot to Ground and drop its reservation.
    void release(std::size_t i);

    /// True once an Entangled slot's age reaches the coherence time.
    bool expired(std::size_t i, Picoseconds now) const;

    std::size_t free_count() const;
    /// Slots owned by a reservation (Reserved, Excited or Entangled on behalf of a request).
    std::size_t held_count() const;

private:
    MemorySlot& at(std::size_t i);

    std::string node_;
    MemoryParams params_;
    std::vector<MemorySlot> slots_;
};

struct DetectionEvent {
    Picoseconds timestamp = 0;
    bool dark = false;

    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct DetectorState {
    DetectorParams params;
    std::optional<Picoseconds> last_detection;

    explicit DetectorState(DetectorParams p = {}) : params(p) {}
};

/// A photon (or dark click) reaching the detector at `arrival`.
std::optional<DetectionEvent> detector_observe(DetectorState& det, Picoseconds arrival, bool is_real_photon,
                                               Rng& rng);

/// Poisson dark counts over [t0, t1] fed through the detector's dead time and quantization.
std::vector<DetectionEvent> dark_count_events(DetectorState& det, Picoseconds t0, Picoseconds t1, Rng& rng);
std::vector<DetectionEvent> dark_count_events(const DetectorParams& params, Picoseconds t0, Picoseconds t1,
                                              Rng& rng);

struct PhotonArrival {
    Photon photon;
    Picoseconds at = 0;
};

struct BSMOutcome {
    bool success = false;
    int bell_index = -1;  // 1 or 2 on success (Psi+ / Psi-)
};

struct BSMState {
    BSMParams params;
    DetectorState detectors[2];
    /// Let dark clicks stand in for missing photons.
    bool dark_counts = false;

    explicit BSMState(BSMParams p = {}, bool dark_counts = false);
};

/// Linear-optics Bell-state measurement on two (possibly absent) photons.
/// Throws CoincidenceWindowViolation when both are present but further apart than the window.
BSMOutcome bsm_measure(BSMState& bsm, const std::optional<PhotonArrival>& a, const std::optional<PhotonArrival>& b,
                       Rng& rng);

}  // namespace qnet
