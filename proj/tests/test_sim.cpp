#include <doctest.h>

#include "ccnmig/sim.hpp"

using namespace ccnmig;

namespace {

// line topology a - b - c, returns (net already routed for /svc at c)
struct Line {
    Simulator sim;
    Network net{sim, 7};
    NodeId a, b, c;
    size_t ab, bc;

    Line() {
        a = net.add_node("a");
        b = net.add_node("b");
        c = net.add_node("c");
        ab = net.add_link(a, b, 1000, 0.0);
        bc = net.add_link(b, c, 1000, 0.0);
    }
};

ProducerFn echo_producer(const std::string& tag) {
    return [tag](const Interest& i) -> std::optional<ContentObject> {
        ContentObject o;
        o.name = i.address.name;
        o.payload = to_bytes(tag);
        return o;
    };
}

}  // namespace

TEST_CASE("events fire in time order; ties in scheduling order") {
    Simulator sim;
    std::vector<int> order;
    sim.at(100, [&] { order.push_back(2); });
    sim.at(50, [&] { order.push_back(1); });
    sim.at(100, [&] { order.push_back(3); });  // same time, scheduled later
    sim.run();
    CHECK(order == std::vector<int>{1, 2, 3});
    CHECK(sim.now() == 100);
}

TEST_CASE("interest forwards hop by hop and the response retraces the path") {
    Line t;
    t.net.static_route(Name::parse("/svc"), t.c);
    t.net.node(t.c).register_producer(Name::parse("/svc"), echo_producer("from-c"));

    std::optional<Micros> arrival;
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/x"), {}, {}}},
                           [&](const ContentObject& o) {
                               arrival = t.sim.now();
                               CHECK(to_string(o.payload) == "from-c");
                           });
    t.sim.run();
    REQUIRE(arrival.has_value());
    CHECK(*arrival == 4000);  // 2 hops out + 2 hops back at 1000us each
}

TEST_CASE("a node answers from its own producer before forwarding") {
    Line t;
    t.net.static_route(Name::parse("/svc"), t.c);
    t.net.node(t.b).register_producer(Name::parse("/svc"), echo_producer("from-b"));
    t.net.node(t.c).register_producer(Name::parse("/svc"), echo_producer("from-c"));

    std::string who;
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/x"), {}, {}}},
                           [&](const ContentObject& o) { who = to_string(o.payload); });
    t.sim.run();
    CHECK(who == "from-b");  // intercepted en route
}

TEST_CASE("unroutable interests and producer declines go unanswered") {
    Line t;
    int called = 0;
    t.net.express_interest(t.a, Interest{{Name::parse("/nowhere"), {}, {}}},
                           [&](const ContentObject&) { called++; });

    t.net.static_route(Name::parse("/svc"), t.c);
    t.net.node(t.c).register_producer(
        Name::parse("/svc"), [](const Interest&) { return std::nullopt; });
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/x"), {}, {}}},
                           [&](const ContentObject&) { called++; });
    t.sim.run();
    CHECK(called == 0);
}

TEST_CASE("scripted loss consumes the schedule, then falls back to the rng") {
    Line t;
    t.net.static_route(Name::parse("/svc"), t.c);
    t.net.node(t.c).register_producer(Name::parse("/svc"), echo_producer("c"));
    t.net.script_loss(t.ab, {true});  // swallow exactly the first traversal

    int got = 0;
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/1"), {}, {}}},
                           [&](const ContentObject&) { got++; });
    t.sim.run();
    CHECK(got == 0);
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/2"), {}, {}}},
                           [&](const ContentObject&) { got++; });
    t.sim.run();
    CHECK(got == 1);
    CHECK(t.net.total_stats().packets_lost == 1);
}

TEST_CASE("sdn repoint atomically moves a prefix; unknown prefixes throw") {
    Line t;
    t.net.static_route(Name::parse("/parc/vm3"), t.a);
    t.net.node(t.a).register_producer(Name::parse("/parc/vm3"), echo_producer("src"));
    t.net.node(t.c).register_producer(Name::parse("/parc/vm3"), echo_producer("dst"));

    std::string who;
    auto probe = [&] {
        t.net.express_interest(t.b, Interest{{Name::parse("/parc/vm3/probe"), {}, {}}},
                               [&](const ContentObject& o) { who = to_string(o.payload); });
        t.sim.run();
    };
    probe();
    CHECK(who == "src");
    t.net.sdn_repoint(Name::parse("/parc/vm3"), t.c);
    probe();
    CHECK(who == "dst");
    CHECK_THROWS_AS(t.net.sdn_repoint(Name::parse("/unknown"), t.c), std::invalid_argument);
}

TEST_CASE("distributed advertisement floods with per-hop delay; withdraw retracts") {
    Line t;
    Name vm = Name::parse("/parc/vm3");
    t.net.node(t.a).register_producer(vm, echo_producer("a"));
    t.net.advertise(t.a, vm);
    // before propagation reaches c's FIB, c cannot resolve the name
    CHECK_FALSE(t.net.node(t.c).fib().lookup(vm).has_value());
    t.sim.run();
    CHECK(t.net.node(t.c).fib().lookup(vm).has_value());

    std::string who;
    t.net.express_interest(t.c, Interest{{vm.append("probe"), {}, {}}},
                           [&](const ContentObject& o) { who = to_string(o.payload); });
    t.sim.run();
    CHECK(who == "a");

    t.net.withdraw(t.a, vm);
    // the old host also stops serving the name; producers intercept
    // interests at any on-path node regardless of FIBs
    t.net.node(t.a).unregister_producer(vm);
    t.net.node(t.c).register_producer(vm, echo_producer("c"));
    t.net.advertise(t.c, vm);
    t.sim.run();
    CHECK(t.net.node(t.a).fib().lookup(vm).has_value());
    who.clear();
    t.net.express_interest(t.a, Interest{{vm.append("probe"), {}, {}}},
                           [&](const ContentObject& o) { who = to_string(o.payload); });
    t.sim.run();
    CHECK(who == "c");
}

TEST_CASE("dual advertisement resolves to the lowest node id") {
    Line t;
    Name vm = Name::parse("/parc/vm3");
    t.net.node(t.a).register_producer(vm, echo_producer("a"));
    t.net.node(t.c).register_producer(vm, echo_producer("c"));
    t.net.advertise(t.a, vm);
    t.net.advertise(t.c, vm);
    t.sim.run();
    std::string who;
    t.net.express_interest(t.b, Interest{{vm.append("probe"), {}, {}}},
                           [&](const ContentObject& o) { who = to_string(o.payload); });
    t.sim.run();
    CHECK(who == "a");  // node a has the lower id
}

TEST_CASE("per-phase stats attribute traffic to the active phase") {
    Line t;
    t.net.static_route(Name::parse("/svc"), t.c);
    t.net.node(t.c).register_producer(Name::parse("/svc"), echo_producer("c"));

    t.net.set_phase("push");
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/1"), {}, {}}},
                           [](const ContentObject&) {});
    t.sim.run();
    t.net.set_phase("pull");
    t.net.express_interest(t.a, Interest{{Name::parse("/svc/2"), {}, {}}},
                           [](const ContentObject&) {});
    t.sim.run();

    auto& stats = t.net.stats();
    REQUIRE(stats.contains("push"));
    REQUIRE(stats.contains("pull"));
    CHECK(stats.at("push").interests_sent == 2);  // 2 hops
    CHECK(stats.at("pull").interests_sent == 2);
    CHECK(stats.at("push").bytes_sent > 0);
}
