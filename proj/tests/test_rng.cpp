#include <doctest.h>

#include <cmath>

#include "rmi/rng.hpp"

using namespace rmi;

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible and seed-separated") {
    Rng a(123), b(123), c(124);
    bool differ = false;
    for (int i = 0; i < 64; ++i) {
        const uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        differ = differ || (va != c.next_u64());
    }
    CHECK(differ);
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("uniform moments and range") {
    Rng rng(99);
    const int n = 200000;
    double mean = 0, lo = 1, hi = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        mean += u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    mean /= n;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("normal moments") {
    Rng rng(7);
    const int n = 200000;
    double m = 0, v = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        m += x;
        v += x * x;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::fabs(m) < 0.01);
    CHECK(v == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson mean and variance at the radiograph rates") {
    for (const double lambda : {350.0, 39000.0}) {
        Rng rng(uint64_t(lambda));
        const int n = 200000;
        double m = 0, v = 0;
        for (int i = 0; i < n; ++i) {
            const double x = double(rng.poisson(lambda));
            m += x;
        }
        m /= n;
        Rng rng2(uint64_t(lambda));
        for (int i = 0; i < n; ++i) {
            const double x = double(rng2.poisson(lambda));
            v += (x - m) * (x - m);
        }
        v /= (n - 1);
        CHECK(m == doctest::Approx(lambda).epsilon(0.01));
        CHECK(v == doctest::Approx(lambda).epsilon(0.03));
    }
}

TEST_CASE("poisson small-rate edge cases") {
    Rng rng(5);
    CHECK(rng.poisson(0.0) == 0);
    double m = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) m += double(rng.poisson(2.5));
    CHECK(m / n == doctest::Approx(2.5).epsilon(0.02));
}

} // TEST_SUITE
