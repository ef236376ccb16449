#include <gtest/gtest.h>

#include <cmath>

#include "qnet/error.hpp"
#include "qnet/randreq.hpp"
#include "support.hpp"

using namespace qnet;

namespace {

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Store whose router/detector templates can be tuned per test.
TemplateStore store_with(double mem_eff, double det_eff, int array_size = 10, double mem_fidelity = 0.9) {
    auto s = TemplateStore::with_defaults();
    MemoryParams m;
    m.efficiency = mem_eff;
    m.fidelity = mem_fidelity;
    s.upsert(Template{"default_memory", m});
    DetectorParams d;
    d.efficiency = det_eff;
    s.upsert(Template{"default_detector", d});
    s.upsert(Template{"default_router", RouterTemplate{array_size, "default_memory"}});
    return s;
}

SimulationConfig config(double duration, double rate, std::int64_t seed = 1) {
    SimulationConfig c;
    c.name = "t";
    c.duration_s = duration;
    c.request_rate_hz = rate;
    c.seed = seed;
    return c;
}

Request request(std::string src, std::string dst, Picoseconds at) {
    Request r;
    r.source = std::move(src);
    r.destination = std::move(dst);
    r.arrival_time = at;
    return r;
}

}  // namespace

TEST(Requests, ZeroRateIsEmpty) {
    EXPECT_TRUE(generate_requests(config(10, 0), {"a", "b"}).empty());
}

TEST(Requests, NeedTwoRouters) {
    EXPECT_EQ(code_of([] { generate_requests(config(10, 1), {"a"}); }), "InsufficientRouters");
    EXPECT_EQ(code_of([] { RandomRequestApp(test::line(1), TemplateStore::with_defaults(), config(1, 1)); }),
              "InsufficientRouters");
}

TEST(Requests, PoissonCountAndEndpoints) {
    double total = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto reqs = generate_requests(config(100, 10, seed), {"a", "b", "c"});
        total += static_cast<double>(reqs.size());
        Picoseconds last = 0;
        for (const auto& r : reqs) {
            EXPECT_NE(r.source, r.destination);
            EXPECT_GE(r.arrival_time, last);
            EXPECT_LE(r.arrival_time, seconds_to_ps(100));
            last = r.arrival_time;
        }
    }
    EXPECT_NEAR(total / 100, 1000, 3 * std::sqrt(1000.0 / 100));
}

TEST(Requests, DeterministicForSeed) {
    const auto a = generate_requests(config(50, 3, 9), {"a", "b", "c"});
    const auto b = generate_requests(config(50, 3, 9), {"a", "b", "c"});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].arrival_time, b[i].arrival_time);
        EXPECT_EQ(a[i].source, b[i].source);
        EXPECT_EQ(a[i].destination, b[i].destination);
    }
}

TEST(Config, Validation) {
    auto c = config(10, 1);
    c.duration_s = -1;
    EXPECT_EQ(code_of([&] { c.validate(); }), "SchemaError");
    c = config(10, -1);
    EXPECT_EQ(code_of([&] { c.validate(); }), "SchemaError");
    c = config(10, 1);
    c.name = "../x";
    EXPECT_EQ(code_of([&] { c.validate(); }), "SchemaError");
    EXPECT_TRUE(is_safe_run_name("run-1.a_b"));
    EXPECT_FALSE(is_safe_run_name(".."));
    EXPECT_FALSE(is_safe_run_name(""));
    EXPECT_FALSE(is_safe_run_name("a/b"));
}

TEST(Paths, ShortestWithLexicographicTieBreak) {
    const auto store = TemplateStore::with_defaults();
    Topology t("sq");
    for (const char* n : {"a", "c", "b", "d"}) t.add_node(n, NodeType::QuantumRouter, "default_router", store);
    t.add_edge("a", "c", 10, 0.2, store);
    t.add_edge("c", "d", 10, 0.2, store);
    t.add_edge("a", "b", 10, 0.2, store);
    t.add_edge("b", "d", 10, 0.2, store);
    RandomRequestApp app(t, store, config(1, 0));
    EXPECT_EQ(app.shortest_path("a", "d"), (std::vector<std::string>{"a", "b", "d"}));
    EXPECT_EQ(app.shortest_path("d", "a"), (std::vector<std::string>{"d", "b", "a"}));
    const auto need = app.memory_demand({"a", "b", "d"});
    EXPECT_EQ(need.at("a"), 1u);
    EXPECT_EQ(need.at("b"), 2u);
    EXPECT_EQ(need.at("d"), 1u);
}

TEST(Paths, DisconnectedRequestIsRejected) {
    const auto store = TemplateStore::with_defaults();
    Topology t = test::line(2);
    t.add_node("x", NodeType::QuantumRouter, "default_router", store);
    RandomRequestApp app(t, store, config(1, 0));
    app.submit({request("r1", "x", 0), request("r1", "r2", 0)});
    app.run();
    const auto rep = app.report();
    EXPECT_EQ(rep.totals.rejected, 1u);
    EXPECT_TRUE(app.requests()[0].rejected);
    EXPECT_FALSE(app.requests()[0].granted_at);
    EXPECT_EQ(rep.totals.completed, 1u);
}

TEST(Reservation, FreeMemoriesGrantImmediately) {
    const auto store = TemplateStore::with_defaults();
    RandomRequestApp app(test::line(2), store, config(1, 0));
    app.submit({request("r1", "r2", 1000)});
    app.run();
    const auto& r = app.requests()[0];
    ASSERT_TRUE(r.granted_at);
    EXPECT_EQ(*r.granted_at, 1000);
    EXPECT_EQ(app.report().nodes[0].avg_wait_time_ps, 0.0);
}

TEST(Reservation, SecondRequestQueuesUntilRelease) {
    const auto store = store_with(1, 1, /*array_size=*/1);
    RandomRequestApp app(test::line(2), store, config(1, 0));
    app.submit({request("r1", "r2", 0), request("r2", "r1", 10)});
    app.run();
    const auto& first = app.requests()[0];
    const auto& second = app.requests()[1];
    ASSERT_TRUE(first.completed_at);
    ASSERT_TRUE(second.granted_at);
    EXPECT_EQ(*second.granted_at, *first.completed_at);
    const double wait = static_cast<double>(*second.granted_at - second.arrival_time);
    ASSERT_TRUE(second.completed_at);
    EXPECT_DOUBLE_EQ(app.report().totals.avg_wait_time_ps, wait / 2);
}

TEST(LinkGeneration, IdealLinkSucceedsHalfTheTime) {
    const auto store = store_with(1, 1);
    Topology t = test::line(2, 0);
    RandomRequestApp app(t, store, config(1, 0));
    QuantumLink link = app.link("r1", "r2");
    MemoryArray a("r1", 1, std::get<RouterHardware>(store.resolve(t.nodes()[0])).memory);
    MemoryArray b("r2", 1, a.params());
    Rng rng(8);
    const int trials = 10'000;
    Picoseconds now = 0;
    long attempts = 0;
    for (int i = 0; i < trials; ++i) {
        while (true) {
            ++attempts;
            const bool ok = attempt_link(link, a, 0, b, 0, now, rng).success;
            a.reset(0);
            b.reset(0);
            now += a.params().period_ps();
            if (ok) break;
        }
    }
    // Geometric with p = 1/2: mean 2, variance 2.
    EXPECT_NEAR(attempts / double(trials), 2.0, 3 * std::sqrt(2.0 / trials));
}

TEST(LinkGeneration, DeadMemoryNeverSucceeds) {
    const auto store = store_with(0, 1);
    const auto rep = run_simulation(test::line(2), store, config(1, 2));
    EXPECT_EQ(rep.totals.link_successes, 0u);
    EXPECT_EQ(rep.totals.completed, 0u);
    EXPECT_GT(rep.totals.link_attempts, 0u);
    for (const auto& n : rep.nodes) EXPECT_EQ(n.throughput_pairs_per_s, 0.0);
}

TEST(LinkGeneration, WiresHalfChannels) {
    const auto store = TemplateStore::with_defaults();
    RandomRequestApp app(test::line(2, 10'000), store, config(1, 0));
    const auto& link = app.link("r2", "r1");
    EXPECT_EQ(link.bsm, "bsm.r1.r2");
    for (int k = 0; k < 2; ++k) {
        EXPECT_DOUBLE_EQ(link.half[k].distance_m, 5000);
        EXPECT_EQ(link.flight_ps[k], 25'000'000);
        EXPECT_NEAR(link.transmission[k], std::pow(10, -0.1), 1e-12);
    }
    EXPECT_DOUBLE_EQ(link.fidelity, 0.9);
}

TEST(LinkGeneration, ClassicalLatencyOverridesHerald) {
    const auto store = TemplateStore::with_defaults();
    Topology t = test::line(2, 10'000);
    t.set_matrix_entry(MatrixKind::ClassicalLatency, "r1", "bsm.r1.r2", 123);
    RandomRequestApp app(t, store, config(1, 0));
    const auto& link = app.link("r1", "r2");
    EXPECT_EQ(link.herald_ps[0], 123);
    EXPECT_EQ(link.herald_ps[1], 25'000'000);
}

TEST(Swapping, FidelityIsProductOfLinks) {
    // Links r1-r2 (min 0.9, 0.9) and r2-r3 (min 0.9, 0.8): end-to-end 0.72.
    auto store = store_with(1, 1, 10, 0.9);
    MemoryParams low;
    low.efficiency = 1;
    low.fidelity = 0.8;
    store.upsert(Template{"low_memory", low});
    store.upsert(Template{"low_router", RouterTemplate{10, "low_memory"}});
    Topology t("line3");
    t.add_node("r1", NodeType::QuantumRouter, "default_router", store);
    t.add_node("r2", NodeType::QuantumRouter, "default_router", store);
    t.add_node("r3", NodeType::QuantumRouter, "low_router", store);
    t.add_edge("r1", "r2", 100, 0.2, store);
    t.add_edge("r2", "r3", 100, 0.2, store);

    for (auto [target, delivered] : {std::pair{0.71, true}, std::pair{0.73, false}}) {
        auto cfg = config(0.05, 0);
        cfg.target_fidelity = target;
        RandomRequestApp app(t, store, cfg);
        app.submit({request("r1", "r3", 0)});
        app.run();
        const auto& tot = app.counters();
        EXPECT_EQ(tot.swap_successes > 0, true) << target;
        EXPECT_EQ(tot.pairs_delivered > 0, delivered) << target;
        EXPECT_EQ(tot.pairs_discarded > 0, !delivered) << target;
    }
}

TEST(Swapping, ZeroSwapProbabilityNeverCompletesMultiHop) {
    auto cfg = config(5, 2, 3);
    cfg.swap_success_prob = 0;
    const auto rep = run_simulation(test::line(3, 100), store_with(1, 1), cfg);
    EXPECT_GT(rep.totals.swap_attempts, 0u);
    EXPECT_EQ(rep.totals.swap_successes, 0u);
    // Only r1<->r2 and r2<->r3 requests (one hop) can finish.
    RandomRequestApp app(test::line(3, 100), store_with(1, 1), cfg);
    app.generate();
    app.run();
    for (const auto& r : app.requests())
        if (r.path.size() > 2) EXPECT_FALSE(r.completed_at);
}

TEST(Simulation, NoRequestsNoMetrics) {
    const auto rep = run_simulation(test::line(3), TemplateStore::with_defaults(), config(2, 0));
    ASSERT_EQ(rep.nodes.size(), 3u);
    for (const auto& n : rep.nodes) {
        EXPECT_EQ(n.avg_wait_time_ps, 0.0);
        EXPECT_EQ(n.reservations, 0u);
        EXPECT_EQ(n.throughput_pairs_per_s, 0.0);
    }
}

TEST(Simulation, SingleRequestIdealLink) {
    RandomRequestApp app(test::line(2, 0), store_with(1, 1), config(1, 0));
    app.submit({request("r1", "r2", 0)});
    app.run();
    const auto rep = app.report();
    EXPECT_EQ(rep.totals.completed, 1u);
    EXPECT_DOUBLE_EQ(rep.nodes[0].throughput_pairs_per_s, 1.0);
    EXPECT_DOUBLE_EQ(rep.nodes[1].throughput_pairs_per_s, 1.0);
    EXPECT_EQ(rep.nodes[0].avg_wait_time_ps, 0.0);
    EXPECT_EQ(rep.totals.link_successes, 1u);
}

TEST(Simulation, TemplateResolutionError) {
    const auto store = TemplateStore::with_defaults();
    Topology t = test::line(2);
    auto other = TemplateStore::with_defaults();
    other.erase("default_bsm");
    EXPECT_EQ(code_of([&] { RandomRequestApp(t, other, config(1, 1)); }), "TemplateResolutionError");
}

TEST(Simulation, MemoryAccountingAndTeardown) {
    auto cfg = config(20, 5, 4);
    cfg.memories_per_request = 2;
    const auto store = store_with(0.75, 0.9, 4);
    RandomRequestApp app(test::triangle(), store, cfg);
    std::size_t violations = 0;
    app.set_probe([&](const RandomRequestApp& a) {
        for (const auto& [_, mem] : a.memories())
            if (mem.held_count() > mem.size()) ++violations;
    });
    app.generate();
    app.run();
    EXPECT_EQ(violations, 0u);
    for (const auto& [_, mem] : app.memories()) EXPECT_EQ(mem.free_count(), mem.size());
    const auto& t = app.counters();
    EXPECT_LE(t.completed, t.granted);
    EXPECT_LE(t.granted, t.generated);
}

TEST(Simulation, ExpiredPairsRegenerate) {
    // Coherence far below the link herald time: every pair dies before it can be swapped.
    auto store = store_with(1, 1);
    MemoryParams fleeting;
    fleeting.efficiency = 1;
    fleeting.coherence_time_s = 1e-9;
    store.upsert(Template{"default_memory", fleeting});
    auto cfg = config(0.01, 0);
    RandomRequestApp app(test::line(3, 2000), store, cfg);
    app.submit({request("r1", "r3", 0)});
    app.run();
    EXPECT_GT(app.counters().expired_pairs, 0u);
    EXPECT_EQ(app.counters().swap_successes, 0u);
    EXPECT_FALSE(app.requests()[0].completed_at);
    EXPECT_EQ(app.report().totals.incomplete, 1u);
}

TEST(Simulation, DeterministicReports) {
    const auto store = TemplateStore::with_defaults();
    const auto a = run_simulation(test::line(4), store, config(10, 1, 42));
    const auto b = run_simulation(test::line(4), store, config(10, 1, 42));
    EXPECT_EQ(a, b);
    EXPECT_NE(a, run_simulation(test::line(4), store, config(10, 1, 43)));
}
