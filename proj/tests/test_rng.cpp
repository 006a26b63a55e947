#include <doctest.h>

#include <cmath>
#include <set>

#include "rfsearch/rng.hpp"

using rfsearch::Rng;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(Rng(42).next() != c.next());
}

TEST_CASE("state round-trips") {
    Rng a(9);
    for (int i = 0; i < 17; ++i) a.next();
    Rng b;
    b.set_state(a.state());
    for (int i = 0; i < 50; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("uniform and below stay in range") {
    Rng r(1);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        REQUIRE(r.below(7) < 7);
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(r.below(5));
    CHECK(seen.size() == 5);
}

TEST_CASE("normal has unit moments") {
    Rng r(5);
    double s = 0.0, s2 = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        REQUIRE(std::isfinite(x));
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.02);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("mix_seed is order sensitive") {
    CHECK(rfsearch::mix_seed(1, 2) != rfsearch::mix_seed(2, 1));
    CHECK(rfsearch::mix_seed(1, 2) == rfsearch::mix_seed(1, 2));
}
