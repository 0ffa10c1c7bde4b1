#include <doctest.h>

#include <cmath>
#include <random>

#include "nlab/series.hpp"

using namespace nlab;

namespace {

Vector random_vector(index_t d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Vector v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = {g(rng), g(rng)};
    return v;
}

Vector one()
{
    return Vector::Ones(1);
}

} // namespace

TEST_CASE("condition ids round trip")
{
    for (const char* s : {"obvious", "suff1", "suff2", "ae", "ae-bis", "alpha-ii", "cor", "eht-norm", "eht-ae"})
        CHECK(to_string(parse_condition_id(s)) == s);
    CHECK_THROWS_AS(parse_condition_id("bogus"), ValidationError);
}

TEST_CASE("trend classification")
{
    CHECK(classify_trend(rvec{}) == Verdict::inconclusive);
    CHECK(classify_trend(rvec{0, 0, 0}) == Verdict::stabilizing);
    CHECK(classify_trend(rvec{1, 2, 3, 3.001}) == Verdict::stabilizing);
    CHECK(classify_trend(rvec{1, 2, 3, 4}) == Verdict::inconclusive);
    CHECK(classify_trend(rvec{1, 2, 3, 5}) == Verdict::growing);
}

TEST_CASE("geometric orbit oracles")
{
    const double lam = 0.9;
    const auto P = Contraction::diagonal({lam});
    const auto w = WeightSequence::cesaro();
    const index_t N = 400;

    const auto r = evaluate_condition(ConditionId::alpha_ii, P, one(), w, N, 0.0);
    REQUIRE(r.checkpoints == std::vector<index_t>{100, 200, 300, 400});
    double s = 0;
    index_t c = 0;
    for (index_t n = 0; n <= N; ++n) {
        s += (n + 1.0) * std::pow(lam * lam, static_cast<double>(n));
        if (n == r.checkpoints[c])
            CHECK(r.partial_sums[c++] == doctest::Approx(s).epsilon(1e-12));
    }
    CHECK(r.partial_sums.back() == doctest::Approx(1.0 / std::pow(1 - lam * lam, 2)).epsilon(1e-10));
    CHECK(r.verdict == Verdict::stabilizing);

    const auto e = evaluate_condition(ConditionId::eht_norm, P, one(), w, N);
    double se = 0;
    for (index_t n = 0; n <= N; ++n)
        se += std::log(n + 1.0) / (n + 1.0) * std::pow(lam * lam, static_cast<double>(n));
    CHECK(e.partial_sums.back() == doctest::Approx(se).epsilon(1e-12));

    const auto o = evaluate_condition(ConditionId::obvious, P, one(), w, N);
    CHECK(o.partial_sums.back() == doctest::Approx((1 - std::pow(lam, N + 1.0)) / (1 - lam)).epsilon(1e-12));

    const auto s1 = evaluate_condition(ConditionId::suff1, P, one(), w, N);
    double ss = 0;
    for (index_t n = 0; n <= N; ++n)
        ss += (n + 1.0) * std::pow(lam * lam, static_cast<double>(n));
    CHECK(s1.partial_sums.back() == doctest::Approx(ss).epsilon(1e-12));

    const auto s2 = evaluate_condition(ConditionId::suff2, P, one(), w, N);
    double s2d = 0;
    for (index_t n = 0; n <= N; ++n)
        s2d += (n + 1.0) * (n + 1.0) * std::pow(lam * lam, static_cast<double>(n)) * (1 - lam * lam);
    CHECK(s2.partial_sums.back() == doctest::Approx(s2d).epsilon(1e-10));
}

TEST_CASE("log-weighted conditions on a scalar orbit")
{
    const double lam = 0.95;
    const auto P = Contraction::diagonal({lam});
    const auto w = WeightSequence::cesaro();

    const auto a = evaluate_condition(ConditionId::ae, P, one(), w, 8);
    double s = 0;
    for (index_t n = 1; n <= 8; ++n) {
        const double L = std::log(n + 1.0);
        const double A = std::pow(2.0, n + 1.0) + 1.0;
        s += L * L * A * A * std::pow(lam, 2.0 * std::pow(2.0, static_cast<double>(n)));
    }
    CHECK(a.partial_sums.back() == doctest::Approx(s).epsilon(1e-10));
    CHECK_THROWS_AS(evaluate_condition(ConditionId::ae, P, one(), w, 27), ValidationError);

    const auto b = evaluate_condition(ConditionId::ae_bis, P, one(), w, 200);
    double sb = 0;
    for (index_t n = 1; n <= 200; ++n) {
        const double ll = std::log(std::log(n + 3.0));
        sb += ll * ll * std::pow(4.0 * n + 1.0, 2) / (n + 1.0) * std::pow(lam, 2.0 * n);
    }
    CHECK(b.partial_sums.back() == doctest::Approx(sb).epsilon(1e-12));

    const auto c = evaluate_condition(ConditionId::cor, P, one(), w, 200, 0.3);
    double sc = 0;
    for (index_t n = 0; n <= 200; ++n) {
        const double ll = std::log(std::log(n + 3.0));
        sc += ll * ll * std::pow(n + 1.0, 1 - 0.6) * std::pow(lam, 2.0 * n);
    }
    CHECK(c.partial_sums.back() == doctest::Approx(sc).epsilon(1e-12));

    const auto d = evaluate_condition(ConditionId::eht_ae, P, one(), w, 200);
    double sd = 0;
    for (index_t n = 0; n <= 200; ++n) {
        const double lll = std::log(std::log(std::log(n + 9.0)));
        sd += std::log(n + 1.0) * lll * lll / (n + 1.0) * std::pow(lam, 2.0 * n);
    }
    CHECK(d.partial_sums.back() == doctest::Approx(sd).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate_condition(ConditionId::alpha_ii, P, one(), w, 10, 1.0), ValidationError);
}

TEST_CASE("condition verdicts on extreme contractions")
{
    const auto w = WeightSequence::cesaro();
    const auto U = Contraction::random_unitary(4, 2);
    const Vector f = random_vector(4, 3);
    CHECK(evaluate_condition(ConditionId::suff1, U, f, w, 1024).verdict == Verdict::growing);

    const auto S = Contraction::nilpotent_shift(6);
    for (auto id : {ConditionId::obvious, ConditionId::suff1, ConditionId::suff2, ConditionId::alpha_ii,
                    ConditionId::eht_norm})
        CHECK(evaluate_condition(id, S, random_vector(6, 4), w, 1024).verdict == Verdict::stabilizing);
}

TEST_CASE("double dyadic schedule")
{
    const auto P = Contraction::diagonal({0.5});
    const auto r = evaluate_condition(ConditionId::alpha_ii, P, one(), WeightSequence::cesaro(), 300, 0.0,
                                      Schedule::double_dyadic);
    CHECK(r.checkpoints == std::vector<index_t>{1, 3, 15, 255, 300});
    for (index_t i = 1; i < r.partial_sums.size(); ++i)
        CHECK(r.partial_sums[i] >= r.partial_sums[i - 1]);
}

TEST_CASE("partial sums and the maximal function match direct evaluation")
{
    const auto P = Contraction::random(5, 3);
    const Vector f = random_vector(5, 4);
    const auto w = WeightSequence::divisor();
    const cvec a = w.values(30);
    Vector S = Vector::Zero(5), x = f;
    Eigen::VectorXd mx = Eigen::VectorXd::Zero(5);
    for (index_t n = 0; n <= 30; ++n) {
        S += a[n] * x;
        x = P.matrix() * x;
        mx = mx.cwiseMax(S.cwiseAbs());
    }
    CHECK((partial_sum(P, f, w, 30) - S).norm() < 1e-10 * S.norm());
    const auto m = maximal_function(P, f, w, 30);
    CHECK((m.values - mx).norm() < 1e-10 * mx.norm());
    CHECK(m.l2_norm == doctest::Approx(P.vnorm(mx.cast<cplx>())).epsilon(1e-12));
}

TEST_CASE("increment inequality")
{
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto P = Contraction::random(6, seed, seed % 2 ? 1.0 : 0.95);
        const Vector f = random_vector(6, seed + 10);
        for (const auto& w : {WeightSequence::cesaro(), WeightSequence::divisor(), WeightSequence::primes()}) {
            const auto c = increment_check(P, f, w, 10, 40, 200);
            CHECK(c.holds);
            CHECK(c.lhs <= c.rhs + c.tail + 1e-10 * c.rhs);
        }
    }
    const auto P = Contraction::random(4, 1);
    CHECK_THROWS_AS(increment_check(P, random_vector(4, 1), WeightSequence::cesaro(), 5, 4, 10), ValidationError);
}

TEST_CASE("block energy matches a direct double sum")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0, 1);
    rvec a(40), u(200);
    for (auto& x : a)
        x = U(rng);
    for (auto& x : u)
        x = U(rng);
    double d = 0;
    for (index_t n = 0; n <= 50; ++n) {
        double s = 0;
        for (index_t k = 8; k < 16; ++k)
            s += a[k] * u[n + k];
        d += s * s;
    }
    CHECK(block_energy(a, u, 8, 16, 50) == doctest::Approx(d).epsilon(1e-13));
    CHECK(block_energy(a, u, 8, 8, 50) == 0.0);
}

TEST_CASE("cauchy gap bound and degenerate case")
{
    const auto w = WeightSequence::cesaro();
    const auto P = Contraction::random(5, 7, 0.97);
    const auto g = cauchy_gap(P, random_vector(5, 8), w, 40);
    CHECK(g.gap <= g.increment_bound * (1 + 1e-10));
    CHECK(g.bound == doctest::Approx(g.first_factor * g.second_factor));
    CHECK_FALSE(g.degenerate);

    const auto U = Contraction::random_unitary(4, 5);
    const auto gu = cauchy_gap(U, random_vector(4, 6), w, 40);
    CHECK(gu.degenerate);
    CHECK(gu.gap > 0.0);
    CHECK(gu.gap <= gu.increment_bound * (1 + 1e-10));

    double first = 0;
    for (index_t k = 41; k <= 80; ++k)
        first += 1.0 / ((k + 1.0) * (k + 1.0));
    CHECK(gu.first_factor == doctest::Approx(std::sqrt(first)));
}

TEST_CASE("ritt profile examples")
{
    const rvec r = ritt_profile(Contraction::diagonal({-1.0}), 60);
    for (index_t n = 1; n <= 60; ++n)
        CHECK(r[n - 1] == doctest::Approx(2.0 * n));
    CHECK(ritt_constant(Contraction::diagonal({-1.0}), 60) == doctest::Approx(120.0));

    const rvec g = ritt_profile(Contraction::diagonal({0.5}), 30);
    for (index_t n = 1; n <= 30; ++n)
        CHECK(g[n - 1] == doctest::Approx(n * std::pow(0.5, n + 1.0)));

    const auto S = Contraction::nilpotent_shift(4);
    const rvec s = ritt_profile(S, 10);
    for (index_t n = 4; n <= 10; ++n)
        CHECK(s[n - 1] == 0.0);

    // for a diagonal positive contraction the constant stays bounded as N grows
    cvec lam(40);
    for (index_t j = 0; j < 40; ++j)
        lam[j] = j / 39.0;
    const auto D = Contraction::diagonal(lam);
    const double c1 = ritt_constant(D, 500), c2 = ritt_constant(D, 2000);
    CHECK(c2 >= c1);
    CHECK(c2 < 1.0 / std::exp(1.0) + 1e-12);

    const auto P = Contraction::random(6, 4);
    const rvec rp = ritt_profile(P, 50);
    for (index_t n = 1; n <= 50; ++n) {
        Matrix Pn = Matrix::Identity(6, 6);
        for (index_t k = 0; k < n; ++k)
            Pn = Pn * P.matrix();
        const Matrix Dm = Pn - Pn * P.matrix();
        const double oracle = n * weighted_opnorm(Dm, P.measure());
        CHECK(rp[n - 1] == doctest::Approx(oracle).epsilon(1e-8));
    }

    // above the exact-SVD dimension the power iteration must still track the top singular value
    const auto B = Contraction::random(90, 5, 0.99);
    const rvec rb = ritt_profile(B, 25);
    Matrix Bn = B.matrix();
    for (index_t n = 1; n <= 25; ++n) {
        const double oracle = n * weighted_opnorm(Bn - Bn * B.matrix(), B.measure());
        CHECK(rb[n - 1] == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(rb[n - 1] <= oracle * (1 + 1e-12));
        Bn = Bn * B.matrix();
    }

    // a Markov operator is self-adjoint in L^2(pi), so the eigenvalue path applies
    const auto M = Contraction::reversible_markov(30, 6);
    const rvec rm = ritt_profile(M, 40);
    Matrix Mn = M.matrix();
    for (index_t n = 1; n <= 40; ++n) {
        CHECK(rm[n - 1] == doctest::Approx(n * weighted_opnorm(Mn - Mn * M.matrix(), M.measure())).epsilon(1e-9));
        Mn = Mn * M.matrix();
    }
}

TEST_CASE("dyadic block diagnostics")
{
    const auto P = Contraction::random(6, 2, 0.99);
    const Vector f = random_vector(6, 3);
    for (const auto& w : {WeightSequence::cesaro(), WeightSequence::divisor()}) {
        const auto d = dyadic_diagnostics(P, f, w, 8);
        CHECK(d.horizon == 1024);
        REQUIRE(d.blocks.size() == 9);
        double ws = 0;
        for (const auto& b : d.blocks) {
            CHECK(b.d >= 0.0);
            CHECK(b.block_norm_sq <= b.d + b.d_tail + 1e-10 * (b.d + b.d_tail));
            CHECK(b.block_norm_sq <= b.max_norm * b.max_norm * (1 + 1e-12) + 1e-300);
            CHECK(b.max_norm <= b.crude_bound * (1 + 1e-12));
            ws += (b.level + 1.0) * (b.level + 1.0) * b.d;
        }
        CHECK(d.weighted_sum == doctest::Approx(ws));
    }
    CHECK_THROWS_AS(dyadic_diagnostics(P, f, WeightSequence::cesaro(), 15), ValidationError);
}

TEST_CASE("subadditive comparison")
{
    const index_t N = 100000;
    rvec lin(N), sq(N), bounded(N);
    for (index_t n = 1; n <= N; ++n) {
        lin[n - 1] = static_cast<double>(n);
        sq[n - 1] = static_cast<double>(n) * static_cast<double>(n);
        bounded[n - 1] = 1.0;
    }
    const auto r = subadditive_compare(lin, 1.0, 3.0, N);
    double lhs = 0, rhs = 0;
    for (index_t n = 1; n <= N; ++n)
        lhs += 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (index_t k = 0; (index_t{1} << k) <= N; ++k)
        rhs += std::pow(4.0, -static_cast<double>(k));
    CHECK(r.lhs == doctest::Approx(lhs).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(r.implied_C == doctest::Approx(lhs / rhs).epsilon(1e-12));

    const auto b = subadditive_compare(bounded, 2.0, 2.0, N);
    double bl = 0, br = 0;
    for (index_t n = 1; n <= N; ++n)
        bl += 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (index_t k = 0; (index_t{1} << k) <= N; ++k)
        br += std::pow(4.0, -static_cast<double>(k));
    CHECK(b.implied_C == doctest::Approx(bl / br).epsilon(1e-12));

    CHECK_THROWS_AS(subadditive_compare(sq, 1.0, 2.0, N), ValidationError);
    CHECK_THROWS_AS(subadditive_compare(lin, 0.5, 2.0, N), ValidationError);
    CHECK_THROWS_AS(subadditive_compare(lin, 1.0, 1.0, N), ValidationError);
    CHECK_THROWS_AS(subadditive_compare(lin, 1.0, 2.0, N + 1), ValidationError);

    const rvec zero(10, 0.0);
    CHECK(subadditive_compare(zero, 1.0, 2.0, 10).implied_C == 0.0);
}
