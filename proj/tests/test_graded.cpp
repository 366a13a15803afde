#include "shlr/perm.hpp"
#include "shlr/prng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace shlr;

TEST_CASE("koszul sign basics") {
    // odd-odd transposition
    CHECK(koszul_sign({1, 1}, Perm({2, 1})) == -1);
    // identity permutation
    CHECK(koszul_sign({1, 1}, Perm::identity(2)) == 1);
    CHECK(koszul_sign({3, -1, 2, 0}, Perm::identity(4)) == 1);
    // degrees (1,1,0), output order m3,m1,m2: two crossings of a degree-0 element
    CHECK(koszul_sign({1, 1, 0}, Perm({3, 1, 2})) == 1);
    // all-even degrees give +1
    SplitMix rng(17);
    for (int t = 0; t < 50; ++t) {
        int n = 1 + (int)(rng.next() % 5);
        std::vector<Deg> deg(n);
        for (auto& d : deg) d = 2 * (int)(rng.next() % 4) - 4;
        std::vector<int> im(n);
        std::iota(im.begin(), im.end(), 1);
        for (int i = n - 1; i > 0; --i) std::swap(im[i], im[rng.next() % (i + 1)]);
        CHECK(koszul_sign(deg, Perm(im)) == 1);
    }
}

TEST_CASE("koszul sign is decomposition independent") {
    // sign of a composite equals the product of signs along any transposition
    // decomposition; equivalently sign(sigma, d) * sign(tau, d o sigma) =
    // sign(sigma o tau ... ) -- checked via multiplicativity on permutation
    // matrices with permuted degree vectors, 200 random pairs, fixed seed.
    SplitMix rng(42);
    for (int t = 0; t < 200; ++t) {
        int n = 2 + (int)(rng.next() % 4);
        std::vector<Deg> deg(n);
        for (auto& d : deg) d = (int)(rng.next() % 5) - 2;
        auto rand_perm = [&]() {
            std::vector<int> im(n);
            std::iota(im.begin(), im.end(), 1);
            for (int i = n - 1; i > 0; --i) std::swap(im[i], im[rng.next() % (i + 1)]);
            return Perm(im);
        };
        Perm s = rand_perm(), u = rand_perm();
        // composite: first reorder by u, then by s on top: (s o u)(i) = u(s(i))
        std::vector<int> comp(n);
        for (int i = 1; i <= n; ++i) comp[i - 1] = u(s(i));
        // degrees seen by s after u was applied: deg_u[i] = deg[u(i)]
        std::vector<Deg> deg_u(n);
        for (int i = 1; i <= n; ++i) deg_u[i - 1] = deg[u(i) - 1];
        int lhs = koszul_sign(deg, Perm(comp));
        int rhs = koszul_sign(deg, u) * koszul_sign(deg_u, s);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("unshuffles") {
    CHECK(unshuffles(1, 2).size() == 3);
    CHECK(unshuffles(0, 4).size() == 1);
    CHECK(unshuffles(0, 4)[0] == Perm::identity(4));
    CHECK(unshuffles(2, 2).size() == 6);
    // cardinality C(l+m, l) for all l+m <= 8
    for (int n = 0; n <= 8; ++n)
        for (int l = 0; l <= n; ++l) CHECK((long)unshuffles(l, n - l).size() == binomial(n, l));
    // each result is increasing inside both blocks
    for (auto& s : unshuffles(3, 2)) {
        CHECK(s(1) < s(2));
        CHECK(s(2) < s(3));
        CHECK(s(4) < s(5));
    }
}

TEST_CASE("multi-unshuffles") {
    CHECK(multi_unshuffles({1, 1, 1}).size() == 6);
    CHECK(multi_unshuffles({3}).size() == 1);
    CHECK(multi_unshuffles({2, 1}).size() == 3);
    CHECK_THROWS_AS(multi_unshuffles({2, 0}), argument_error);
    // agreement with the two-block case
    CHECK(multi_unshuffles({2, 2}).size() == unshuffles(2, 2).size());
}

TEST_CASE("set partitions") {
    CHECK(set_partitions(1).size() == 1);
    CHECK(set_partitions(2).size() == 2);
    CHECK(set_partitions(3).size() == 5);
    CHECK(set_partitions(4).size() == 15);
}
