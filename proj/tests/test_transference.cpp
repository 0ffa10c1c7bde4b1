#include <doctest.h>

#include <cmath>
#include <random>

#include "nlab/norlund.hpp"
#include "nlab/transference.hpp"

using namespace nlab;

namespace {

cvec random_cvec(std::mt19937_64& rng, index_t n)
{
    std::normal_distribution<double> g;
    cvec v(n);
    for (auto& z : v)
        z = {g(rng), g(rng)};
    return v;
}

// Direct evaluation of the cyclic maximal function from its definition.
double brute_maximal(const CyclicSystem& sys, const WeightSequence& w, index_t M, long x)
{
    const cvec a = w.values(M);
    const rvec A = w.partial_sums(M);
    double best = 0;
    for (index_t m = 0; m <= M; ++m) {
        if (A[m] == 0)
            continue;
        cplx s = 0;
        long y = x;
        for (index_t k = 0; k <= m; ++k) {
            s += a[k] * sys.f(y);
            y = sys.rotate(y);
        }
        best = std::max(best, std::abs(s) / A[m]);
    }
    return best;
}

} // namespace

TEST_CASE("cyclic system basics")
{
    const CyclicSystem sys(2, cvec{1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(sys.size() == 5);
    CHECK(sys.f(-2) == cplx(1.0));
    CHECK(sys.f(2) == cplx(5.0));
    CHECK(sys.rotate(2) == -2);
    CHECK(sys.rotate(0) == 1);
    CHECK_THROWS_AS(CyclicSystem(2, cvec{1.0}), ValidationError);

    const auto from = CyclicSystem::from_two_sided(3, TwoSidedVector{-1, cvec{7.0, 8.0}});
    CHECK(from.f(-1) == cplx(7.0));
    CHECK(from.f(0) == cplx(8.0));
    CHECK(from.f(3) == cplx(0.0));
}

TEST_CASE("weighted maximal function matches the definition")
{
    std::mt19937_64 rng(4);
    const CyclicSystem sys(12, random_cvec(rng, 25));
    for (const auto& w : {WeightSequence::cesaro(), WeightSequence::primes(), WeightSequence::divisor()}) {
        const rvec mf = weighted_maximal(sys, w, 20);
        for (long x = -12; x <= 12; ++x)
            CHECK(mf[static_cast<index_t>(x + 12)] == doctest::Approx(brute_maximal(sys, w, 20, x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(weighted_maximal(sys, WeightSequence::cesaro(), 0), ValidationError);
    CHECK_THROWS_AS(weighted_maximal(sys, WeightSequence::cesaro(), 25), ValidationError);
}

TEST_CASE("delta transference ratio is a partial zeta sum")
{
    const TwoSidedVector delta{0, cvec{1.0}};
    for (index_t M : {10, 100, 1000}) {
        double z = 0;
        for (index_t k = 0; k <= M; ++k)
            z += 1.0 / ((k + 1.0) * (k + 1.0));
        CHECK(transference_ratio(WeightSequence::cesaro(), 2.0, delta, 10 * M, M) == doctest::Approx(z).epsilon(1e-12));
    }
    const double r = transference_ratio(WeightSequence::cesaro(), 2.0, delta, 10000, 1000);
    CHECK(std::abs(r / (M_PI * M_PI / 6.0) - 1.0) < 0.01);
    CHECK(transference_ratio(WeightSequence::cesaro(), 2.0, delta, 0, 100) ==
          transference_ratio(WeightSequence::cesaro(), 2.0, delta, 1000, 100));
}

TEST_CASE("transference ratio input checks")
{
    const auto w = WeightSequence::cesaro();
    CHECK_THROWS_AS(transference_ratio(w, 2.0, TwoSidedVector{0, cvec{0.0}}, 100, 10), ValidationError);
    CHECK_THROWS_AS(transference_ratio(w, 2.0, TwoSidedVector{200, cvec{1.0}}, 100, 10), ValidationError);
    CHECK_THROWS_AS(transference_ratio(w, 0.5, TwoSidedVector{0, cvec{1.0}}, 100, 10), ValidationError);
    CHECK_THROWS_AS(transference_ratio(w, 2.0, TwoSidedVector{0, cvec{1.0}}, 10, 10), ValidationError);
    CHECK_THROWS_AS(transference_ratio(w, 2.0, TwoSidedVector{0, cvec{1.0}}, 100, 0), ValidationError);
}

TEST_CASE("one-sided embedding reproduces the Norlund norm")
{
    std::mt19937_64 rng(21);
    for (const auto& w : {WeightSequence::cesaro(), WeightSequence::primes(), WeightSequence::divisor()}) {
        const NorlundOperator op(w);
        for (double p : {1.5, 2.0, 3.0}) {
            for (int t = 0; t < 5; ++t) {
                const cvec u = random_cvec(rng, 60);
                const double lhs = std::pow(lp_norm(apply(op, u, 59), p), p);
                const double rhs = embedded_norlund_sum(w, p, embed_one_sided(u), 59);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, lhs));
            }
        }
    }
    const auto v = embed_one_sided(cvec{1.0, 2.0, 3.0});
    CHECK(v.first == -2);
    CHECK(v(0) == cplx(1.0));
    CHECK(v(-2) == cplx(3.0));
    CHECK(v(1) == cplx(0.0));
}

TEST_CASE("two-sided maximal sums are majorized by the cyclic system")
{
    std::mt19937_64 rng(2);
    for (const auto& w : {WeightSequence::cesaro(), WeightSequence::primes(), WeightSequence::divisor()}) {
        for (double p : {1.5, 2.0, 3.0}) {
            const cvec vals = random_cvec(rng, 41);
            const TwoSidedVector v{-20, vals};
            const auto mc = majoration_check(w, p, v, 40, 15);
            CHECK(mc.holds);
            CHECK(mc.two_sided > 0.0);
        }
    }
}

TEST_CASE("two-sided maximal sum clips to the support")
{
    const TwoSidedVector v{5, cvec{1.0, -1.0}};
    const auto w = WeightSequence::cesaro();
    CHECK(two_sided_maximal_sum(w, 2.0, v, -1000, 1000, 4) == two_sided_maximal_sum(w, 2.0, v, 1, 6, 4));
    CHECK(two_sided_maximal_sum(w, 2.0, v, 100, 200, 4) == 0.0);
}

TEST_CASE("maximal function of constants and of an indicator")
{
    const index_t N = 30;
    const auto w = WeightSequence::cesaro();
    for (double c : {0.0, 1.0}) {
        const rvec mf = weighted_maximal(CyclicSystem(N, cvec(2 * N + 1, c)), w, 2 * N);
        for (double x : mf)
            CHECK(x == doctest::Approx(c));
    }
    cvec ind(2 * N + 1, 0.0);
    ind[N] = 1.0;
    const rvec mf = weighted_maximal(CyclicSystem(N, ind), w, N);
    for (index_t i = 0; i <= N; ++i)
        CHECK(mf[N - i] == doctest::Approx(1.0 / (i + 1.0)));
}

TEST_CASE("transference ratio limits and monotonicity in M")
{
    const auto w = WeightSequence::cesaro();
    const index_t N = 2000;
    const TwoSidedVector ones{-static_cast<long>(N), cvec(2 * N + 1, 1.0)};
    const double r = transference_ratio(w, 2.0, ones, N, 20);
    CHECK(r <= 1.0 + 1e-12);
    CHECK(r > 0.99);

    const TwoSidedVector delta{0, cvec{1.0}};
    CHECK(transference_ratio(WeightSequence::finite({1.0}), 2.0, delta, 100, 10) == doctest::Approx(1.0));

    std::mt19937_64 rng(3);
    const TwoSidedVector v{-50, random_cvec(rng, 101)};
    double prev = 0;
    for (index_t M = 1; M <= 40; ++M) {
        const double x = transference_ratio(WeightSequence::primes(), 1.5, v, 400, M);
        CHECK(x >= prev * (1 - 1e-14));
        prev = x;
    }
}
