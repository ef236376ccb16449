#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "qnet/simkernel.hpp"

using namespace qnet;

TEST(Timeline, SameTimeRunsInScheduleOrder) {
    Timeline tl(0, 100);
    std::vector<int> order;
    tl.schedule(10, "a", "x", [&] { order.push_back(1); });
    tl.schedule(5, "a", "x", [&] {
        order.push_back(0);
        tl.schedule(tl.now(), "a", "x", [&] { order.push_back(2); });
    });
    tl.schedule(10, "a", "x", [&] { order.push_back(3); });
    tl.run();
    // The event scheduled at now=5 runs before anything strictly later.
    EXPECT_EQ(order, (std::vector<int>{0, 2, 1, 3}));
}

TEST(Timeline, PastEventRejected) {
    Timeline tl(0, 100);
    tl.schedule(10, "a", "x", [&] {
        try {
            tl.schedule(tl.now() - 1, "a", "x", [] {});
            ADD_FAILURE();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), "PastEvent");
        }
    });
    tl.run();
}

TEST(Timeline, EmptyRunEndsAtStopTime) {
    Timeline tl(0, 1234);
    EXPECT_EQ(tl.progress(), 0.0);
    const auto stats = tl.run();
    EXPECT_EQ(stats.events_processed, 0u);
    EXPECT_EQ(stats.final_time, 1234);
    EXPECT_EQ(tl.progress(), 1.0);
}

TEST(Timeline, StopsAtStopTime) {
    Timeline tl(0, 2);
    int ran = 0;
    for (Picoseconds t : {1, 2, 3}) tl.schedule(t, "a", "x", [&] { ++ran; });
    const auto stats = tl.run();
    EXPECT_EQ(stats.events_processed, 2u);
    EXPECT_EQ(ran, 2);
}

TEST(Timeline, ProgressMidRun) {
    Timeline tl(0, 1000);
    double seen = -1;
    tl.schedule(500, "a", "x", [&] { seen = tl.progress(); });
    tl.run();
    EXPECT_DOUBLE_EQ(seen, 0.5);
}

TEST(Timeline, ProgressSink) {
    Timeline tl(0, 1000);
    std::atomic<double> sink{0};
    tl.publish_progress_to(&sink);
    std::vector<double> seen;
    for (Picoseconds t : {100, 300, 900}) tl.schedule(t, "a", "x", [&] { seen.push_back(sink.load()); });
    tl.run();
    EXPECT_EQ(seen, (std::vector<double>{0.1, 0.3, 0.9}));
    EXPECT_EQ(sink.load(), 1.0);
}

TEST(Timeline, HandlerFailureNamesEntity) {
    Timeline tl(0, 100);
    tl.schedule(7, "node-3", "boom", [] { throw std::runtime_error("bad"); });
    try {
        tl.run();
        FAIL();
    } catch (const HandlerFailure& e) {
        EXPECT_EQ(e.code(), "HandlerFailure");
        EXPECT_EQ(e.path(), "node-3");
        EXPECT_EQ(e.kind(), "boom");
        EXPECT_EQ(e.time(), 7);
    }
}

TEST(Timeline, RandomScheduleMatchesSortOracle) {
    Rng gen(42);
    for (int trial = 0; trial < 20; ++trial) {
        Timeline tl(trial, 1'000'000);
        std::vector<std::pair<Picoseconds, int>> expected;
        std::vector<int> processed;
        std::vector<Picoseconds> times;
        for (int i = 0; i < 500; ++i) {
            const Picoseconds t = static_cast<Picoseconds>(gen.index(200));
            expected.emplace_back(t, i);
            tl.schedule(t, "e", "k", [&, i] {
                processed.push_back(i);
                times.push_back(tl.now());
            });
        }
        std::stable_sort(expected.begin(), expected.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        tl.run();
        std::vector<int> oracle;
        for (const auto& [_, i] : expected) oracle.push_back(i);
        EXPECT_EQ(processed, oracle);
        EXPECT_TRUE(std::is_sorted(times.begin(), times.end()));
    }
}

TEST(Timeline, SeededRunsRepeat) {
    auto once = [](std::uint64_t seed) {
        Timeline tl(seed, 1'000'000);
        std::vector<std::uint64_t> draws;
        std::function<void()> step = [&] {
            draws.push_back(tl.rng().next());
            const Picoseconds dt = 1 + static_cast<Picoseconds>(tl.rng().index(1000));
            if (tl.now() + dt <= tl.stop_time()) tl.schedule(tl.now() + dt, "s", "tick", step);
        };
        tl.schedule(0, "s", "tick", step);
        const auto stats = tl.run();
        return std::make_pair(stats, draws);
    };
    EXPECT_EQ(once(5), once(5));
    EXPECT_NE(once(5).second, once(6).second);
}
