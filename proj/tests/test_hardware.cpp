#include <gtest/gtest.h>

#include <cmath>

#include "qnet/error.hpp"
#include "qnet/hardware.hpp"

using namespace qnet;

namespace {

double three_sigma(double p, int n) { return 3 * std::sqrt(p * (1 - p) / n); }

template <class Fn>
std::string error_code(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST(Channel, PropagationDelay) {
    EXPECT_EQ(propagation_delay({0, 0}), 0);
    EXPECT_EQ(propagation_delay({2e5, 0}), 1'000'000'000);
    EXPECT_EQ(propagation_delay({1, 0}), 5000);
    EXPECT_EQ(propagation_delay({1, 0, 1e8}), 10000);
}

TEST(Channel, DelayIsLinearUpToRounding) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double L = rng.uniform(0, 1e6);
        EXPECT_LE(std::llabs(propagation_delay({2 * L, 0}) - 2 * propagation_delay({L, 0})), 1);
    }
}

TEST(Channel, TransmissionProbability) {
    EXPECT_DOUBLE_EQ(transmission_probability({0, 0.2}), 1.0);
    EXPECT_NEAR(transmission_probability({10'000, 0.2}), 0.630957, 1e-6);
    EXPECT_NEAR(transmission_probability({50'000, 0.2}), 0.1, 1e-12);
}

TEST(Channel, TransmissionMonotoneAndBounded) {
    double prev = 1.0;
    for (double L = 0; L <= 2e5; L += 5000) {
        const double p = transmission_probability({L, 0.25});
        EXPECT_GT(p, 0);
        EXPECT_LE(p, prev);
        prev = p;
    }
    EXPECT_GE(transmission_probability({1e4, 0.1}), transmission_probability({1e4, 0.3}));
}

TEST(Channel, RejectsBadParams) {
    EXPECT_NE(error_code([] { ChannelParams{-1, 0}.validate(); }), "");
    EXPECT_NE(error_code([] { ChannelParams{1, -0.1}.validate(); }), "");
    EXPECT_NE(error_code([] { ChannelParams{1, 0, 0}.validate(); }), "");
}

TEST(Quantize, NearestWithTiesDown) {
    EXPECT_EQ(quantize(12345, 100), 12300);
    EXPECT_EQ(quantize(12350, 100), 12300);
    EXPECT_EQ(quantize(12351, 100), 12400);
    EXPECT_EQ(quantize(-50, 100), -100);
    EXPECT_EQ(quantize(7, 1), 7);
}

TEST(Memory, ExciteEfficiencyExtremes) {
    Rng rng(1);
    MemoryParams always;
    always.efficiency = 1;
    MemoryParams never;
    never.efficiency = 0;
    MemoryArray a("a", 1, always), b("b", 1, never);
    for (int i = 0; i < 100; ++i) {
        const Picoseconds t = i * a.params().period_ps();
        auto p = a.excite(0, t, rng);
        ASSERT_TRUE(p);
        EXPECT_EQ(p->emitted_at, t);
        EXPECT_FALSE(b.excite(0, t, rng));
        a.reset(0);
        b.reset(0);
    }
}

TEST(Memory, ExciteEfficiencyMonteCarlo) {
    Rng rng(2);
    MemoryParams mp;
    mp.efficiency = 0.8;
    MemoryArray m("m", 1, mp);
    const int n = 100'000;
    int emitted = 0;
    for (int i = 0; i < n; ++i) {
        emitted += m.excite(0, i * mp.period_ps(), rng).has_value();
        m.reset(0);
    }
    EXPECT_NEAR(emitted / double(n), 0.8, three_sigma(0.8, n));
}

TEST(Memory, SlotBusyUntilGroundReturn) {
    Rng rng(3);
    MemoryArray m("m", 2, MemoryParams{});
    const Picoseconds period = m.params().period_ps();
    EXPECT_EQ(period, 50'000'000);  // 1 / 20 kHz
    m.excite(0, 0, rng);
    m.reset(0);
    EXPECT_EQ(error_code([&] { m.excite(0, period - 1, rng); }), "SlotBusy");
    EXPECT_EQ(error_code([&] { m.excite(0, period, rng); }), "");
    EXPECT_EQ(error_code([&] { m.excite(0, 2 * period, rng); }), "SlotBusy");  // still Excited
    EXPECT_EQ(error_code([&] { m.excite(5, 0, rng); }), "SlotOutOfRange");
}

TEST(Memory, ReservationLifecycle) {
    Rng rng(4);
    MemoryArray m("m", 3, MemoryParams{});
    EXPECT_EQ(m.free_count(), 3u);
    m.reserve(1, 7);
    EXPECT_EQ(m.free_count(), 2u);
    EXPECT_EQ(m.held_count(), 1u);
    m.excite(1, 0, rng);
    m.entangle(1, SlotRef{"x", 0}, 100, 0.9);
    EXPECT_EQ(m.slot(1).state, SlotState::Entangled);
    EXPECT_EQ(m.slot(1).request, 7u);
    m.reset(1);
    EXPECT_EQ(m.slot(1).state, SlotState::Reserved);
    m.release(1);
    EXPECT_EQ(m.slot(1).state, SlotState::Ground);
    EXPECT_EQ(m.held_count(), 0u);
}

TEST(Memory, ExpiryAtCoherenceTime) {
    Rng rng(4);
    MemoryArray m("m", 1, MemoryParams{});
    m.excite(0, 0, rng);
    m.entangle(0, SlotRef{"x", 0}, 1000, 0.9);
    const Picoseconds coherence = m.params().coherence_ps();
    EXPECT_EQ(coherence, 1'300'000'000'000);
    EXPECT_FALSE(m.expired(0, 1000 + coherence - 1));
    EXPECT_TRUE(m.expired(0, 1000 + coherence));
}

TEST(Detector, QuantizesTimestamp) {
    Rng rng(1);
    DetectorParams p;
    p.efficiency = 1;
    DetectorState d(p);
    auto ev = detector_observe(d, 12345, true, rng);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->timestamp, 12300);
    EXPECT_FALSE(ev->dark);
}

TEST(Detector, DeadTimeSuppressesSecondPhoton) {
    Rng rng(1);
    DetectorParams p;
    p.efficiency = 1;
    p.count_rate_hz = 1e8;
    p.time_resolution_ps = 1;
    EXPECT_EQ(p.dead_time_ps(), 10'000);
    DetectorState d(p);
    ASSERT_TRUE(detector_observe(d, 0, true, rng));
    EXPECT_FALSE(detector_observe(d, 1000, true, rng));
    EXPECT_TRUE(detector_observe(d, 10'000, true, rng));
}

TEST(Detector, ZeroEfficiencyNeverClicks) {
    Rng rng(1);
    DetectorParams p;
    p.efficiency = 0;
    DetectorState d(p);
    for (int i = 0; i < 1000; ++i) EXPECT_FALSE(detector_observe(d, i * 1'000'000, true, rng));
}

TEST(Detector, DarkCountsEmptyAtZeroRate) {
    Rng rng(1);
    DetectorParams p;
    p.dark_count_rate_hz = 0;
    EXPECT_TRUE(dark_count_events(p, 0, 10'000'000'000'000, rng).empty());
}

TEST(Detector, DarkCountsInWindowAndQuantized) {
    Rng rng(9);
    DetectorParams p;
    p.dark_count_rate_hz = 1e6;
    p.time_resolution_ps = 100;
    const Picoseconds t0 = 1'000'050, t1 = 1'000'000'000;
    const auto evs = dark_count_events(p, t0, t1, rng);
    ASSERT_FALSE(evs.empty());
    for (std::size_t i = 0; i < evs.size(); ++i) {
        EXPECT_GE(evs[i].timestamp, t0);
        EXPECT_LE(evs[i].timestamp, t1);
        EXPECT_EQ(evs[i].timestamp % 100, 0);
        EXPECT_TRUE(evs[i].dark);
        if (i) EXPECT_GE(evs[i].timestamp - evs[i - 1].timestamp, p.dead_time_ps());
    }
}

TEST(Detector, SameSeedSameEvents) {
    DetectorParams p;
    p.dark_count_rate_hz = 1e5;
    Rng a(77), b(77);
    EXPECT_EQ(dark_count_events(p, 0, 1'000'000'000'000, a), dark_count_events(p, 0, 1'000'000'000'000, b));
}

TEST(Bsm, AbsentPhotonFails) {
    Rng rng(1);
    BSMState bsm;
    const PhotonArrival a{Photon{0, {"a", 0}, true}, 0};
    EXPECT_FALSE(bsm_measure(bsm, a, std::nullopt, rng).success);
    EXPECT_FALSE(bsm_measure(bsm, std::nullopt, std::nullopt, rng).success);
    PhotonArrival lost = a;
    lost.photon.alive = false;
    EXPECT_FALSE(bsm_measure(bsm, a, lost, rng).success);
}

TEST(Bsm, CoincidenceWindowViolation) {
    Rng rng(1);
    BSMState bsm;
    const PhotonArrival a{Photon{0, {"a", 0}, true}, 0};
    const PhotonArrival b{Photon{0, {"b", 0}, true}, 201};
    EXPECT_EQ(error_code([&] { bsm_measure(bsm, a, b, rng); }), "CoincidenceWindowViolation");
}

TEST(Bsm, SuccessRateAndBellIndex) {
    for (double eta : {1.0, 0.9}) {
        Rng rng(11);
        BSMParams p;
        p.detector.efficiency = eta;
        BSMState bsm(p);
        const int n = 100'000;
        int ok = 0;
        for (int i = 0; i < n; ++i) {
            const Picoseconds t = Picoseconds(i) * 1'000'000;
            const auto out = bsm_measure(bsm, PhotonArrival{Photon{t, {"a", 0}, true}, t},
                                         PhotonArrival{Photon{t, {"b", 0}, true}, t}, rng);
            if (out.success) {
                ++ok;
                EXPECT_TRUE(out.bell_index == 1 || out.bell_index == 2);
            }
        }
        const double expected = 0.5 * eta * eta;
        EXPECT_NEAR(ok / double(n), expected, three_sigma(expected, n)) << "eta=" << eta;
    }
}

TEST(Bsm, DarkCountsCanStandInWhenEnabled) {
    // A detector dark-count rate high enough to click inside nearly every window.
    BSMParams p;
    p.detector.efficiency = 1;
    p.detector.dark_count_rate_hz = 1e11;
    p.detector.count_rate_hz = 0;
    const PhotonArrival a{Photon{0, {"a", 0}, true}, 0};
    int with = 0, without = 0;
    Rng r1(3), r2(3);
    BSMState on(p, true), off(p, false);
    for (int i = 0; i < 2000; ++i) {
        PhotonArrival ai = a;
        ai.at = Picoseconds(i) * 1'000'000;
        with += bsm_measure(on, ai, std::nullopt, r1).success;
        without += bsm_measure(off, ai, std::nullopt, r2).success;
    }
    EXPECT_EQ(without, 0);
    EXPECT_GT(with, 0);
}
