#include <doctest.h>

#include <random>

#include "ccnmig/fib.hpp"

using namespace ccnmig;

TEST_CASE("longest matching prefix wins") {
    FibTable fib;
    fib.set(Name::parse("/"), 1);
    fib.set(Name::parse("/parc"), 2);
    fib.set(Name::parse("/parc/vm3"), 3);

    CHECK(fib.lookup(Name::parse("/parc/vm3/ram/page/0")) == 3);
    CHECK(fib.lookup(Name::parse("/parc/vm9")) == 2);
    CHECK(fib.lookup(Name::parse("/sfo/host2")) == 1);  // default route
    fib.remove(Name::parse("/"));
    CHECK_FALSE(fib.lookup(Name::parse("/sfo/host2")).has_value());
}

TEST_CASE("segment boundaries are respected") {
    FibTable fib;
    fib.set(Name::parse("/parc/vm3"), 1);
    CHECK_FALSE(fib.lookup(Name::parse("/parc/vm30/x")).has_value());
}

TEST_CASE("lookup agrees with a brute-force oracle on random tables") {
    std::mt19937_64 rng(2024);
    std::vector<std::string> segs = {"a", "b", "c", "vm3", "host7", "ram", "disk"};
    auto random_name = [&] {
        size_t len = 1 + rng() % 4;
        Name n = Name::parse("/");
        for (size_t i = 0; i < len; i++) n = n.append(segs[rng() % segs.size()]);
        return n;
    };

    for (int trial = 0; trial < 20; trial++) {
        FibTable fib;
        std::vector<std::pair<Name, FaceId>> table;
        for (int e = 0; e < 12; e++) {
            Name p = random_name();
            FaceId f = static_cast<FaceId>(rng() % 5);
            fib.set(p, f);
            std::erase_if(table, [&](auto& kv) { return kv.first == p; });
            table.emplace_back(p, f);
        }
        for (int q = 0; q < 50; q++) {
            Name target = random_name();
            // oracle: scan every entry, keep the longest matching prefix
            std::optional<FaceId> best;
            size_t best_len = 0;
            for (const auto& [p, f] : table) {
                if (p.is_prefix_of(target) && (!best || p.size() >= best_len)) {
                    if (!best || p.size() > best_len) {
                        best = f;
                        best_len = p.size();
                    }
                }
            }
            CHECK(fib.lookup(target) == best);
        }
    }
}
