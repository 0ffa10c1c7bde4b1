#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nlab/models.hpp"

using namespace nlab;

namespace {

rvec random_rvec(std::mt19937_64& rng, index_t n)
{
    std::normal_distribution<double> g;
    rvec v(n);
    for (auto& x : v)
        x = g(rng);
    return v;
}

// Trapezoid rule after x = e^t; the integrand decays exponentially in t at both ends.
double alpha_k_trapezoid(double a, double k)
{
    const double h = 0.002;
    double s = 0;
    for (double t = -150.0; t <= 80.0; t += h) {
        const double x = std::exp(t);
        const double y = x + k;
        const double ll = std::log(std::log(y + 2.0));
        s += x / (std::pow(x, a) * std::pow(y, 1.5 - a) * std::sqrt(std::log1p(x + (k - 1.0)) * ll * ll * ll));
    }
    return s * h;
}

} // namespace

TEST_CASE("coefficient shift model")
{
    const auto S = shift_contraction(5);
    Matrix Pn = Matrix::Identity(5, 5);
    for (int k = 0; k < 5; ++k)
        Pn = Pn * S.matrix();
    CHECK(Pn.norm() == 0.0);
    CHECK(S.matrix()(0, 1) == cplx(1.0));
    CHECK(S.norm() == doctest::Approx(1.0));

    const ShiftModel m{rvec{3.0, -1.0, 0.5, 2.0}};
    CHECK(m.dim() == 4);
    const rvec u = increments(m.contraction(), m.f(), 6);
    for (index_t n = 0; n <= 6; ++n)
        CHECK(u[n] == doctest::Approx(n < 4 ? std::abs(m.u[n]) : 0.0));
    CHECK_THROWS_AS(shift_contraction(0), ValidationError);
}

TEST_CASE("shift model norm identity on random pairs")
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
        const index_t d = 5 + (t % 40);
        const rvec u = random_rvec(rng, d);
        cvec a(d);
        for (auto& z : a)
            z = {g(rng), g(rng)};
        const auto w = WeightSequence::finite(a);
        const index_t N = d - 1 - (t % 3);
        const auto id = model_norm_identity(u, w, N);
        double rhs = 0;
        for (index_t i = 0; i < d; ++i) {
            cplx s = 0;
            for (index_t n = 0; n <= N && i + n < d; ++n)
                s += a[n] * u[i + n];
            rhs += std::norm(s);
        }
        CHECK(id.rhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(id.deviation < 1e-10 * std::max(1.0, id.lhs));
    }
    CHECK_THROWS_AS(model_norm_identity(rvec{}, WeightSequence::cesaro(), 3), ValidationError);
}

TEST_CASE("counterexample coefficients")
{
    const double ll3 = std::log(std::log(3.0));
    CHECK(cex_c(0.0, 0.0, 1.5) == doctest::Approx(1.0 / std::sqrt(std::log(2.0) * std::pow(ll3, 1.5))));
    CHECK(cex_c(0.0, 0.0) == doctest::Approx(1.0 / std::sqrt(std::log(2.0) * std::pow(ll3, 3.0))));
    const double x = 37.0, a = 0.3;
    CHECK(cex_c(a, x) == doctest::Approx(std::pow(x + 1, a - 1.5) /
                                         std::sqrt(std::log(x + 2) * std::pow(std::log(std::log(x + 3)), 3))));

    const auto s = cex_coeffs(0.2, 5000);
    REQUIRE(s.c.size() == 5001);
    for (index_t n = 0; n <= 5000; ++n) {
        CHECK(s.c[n] > 0.0);
        CHECK(s.c[n] == cex_c(0.2, static_cast<double>(n)));
    }
    for (index_t n = s.n0 + 1; n <= 5000; ++n)
        REQUIRE(s.c[n] < s.c[n - 1]);
    CHECK_THROWS_AS(cex_coeffs(1.0, 10), ValidationError);
}

TEST_CASE("alpha_k quadrature against a trapezoid oracle")
{
    for (double a : {0.0, 0.25, 0.45}) {
        for (index_t k : {1, 2, 10, 1000}) {
            if (k == 1 && a > 0.3)
                continue; // x^{1/2-a} decays too slowly at 0 for the oracle
            const double x = alpha_k(a, k);
            CHECK(x == doctest::Approx(alpha_k_trapezoid(a, static_cast<double>(k))).epsilon(1e-7));
            CHECK(alpha_k(a, k, 1e-8, AlphaForm::u) == doctest::Approx(x).epsilon(1e-10));
        }
    }
    CHECK(alpha_k(0.0, 1000) == doctest::Approx(0.006919323247674).epsilon(1e-10));
}

TEST_CASE("alpha_k decreases with k and diverges at k = 1 for alpha >= 1/2")
{
    for (double a : {0.0, 0.3, 0.7}) {
        double prev = INFINITY;
        for (index_t k = a >= 0.5 ? 2 : 1; k <= 4096; k *= 2) {
            const double v = alpha_k(a, k);
            CHECK(v < prev);
            prev = v;
        }
    }
    CHECK_THROWS_AS(alpha_k(0.5, 1), NumericalError);
    CHECK_THROWS_AS(alpha_k(0.2, 0), ValidationError);
    CHECK_THROWS_AS(alpha_k(0.2, 3, 0.0), ValidationError);
}

TEST_CASE("FFT correlation matches the direct sum")
{
    std::mt19937_64 rng(5);
    for (index_t nb : {1, 7, 64, 300}) {
        const rvec b = random_rvec(rng, nb);
        const rvec x = random_rvec(rng, 1000);
        const index_t count = 1000 - nb + 1;
        const rvec r = correlate(b, x, count);
        REQUIRE(r.size() == count);
        for (index_t t = 0; t < count; ++t) {
            double s = 0;
            for (index_t n = 0; n < nb; ++n)
                s += b[n] * x[t + n];
            REQUIRE(std::abs(r[t] - s) < 1e-11 * (1 + std::abs(s)));
        }
    }
    CHECK_THROWS_AS(correlate(rvec{1.0, 2.0}, rvec{1.0}, 1), ValidationError);
    CHECK_THROWS_AS(correlate(rvec{}, rvec{1.0}, 1), ValidationError);
}

TEST_CASE("tail brackets contain a brute-force evaluation")
{
    // alpha = 0: b_n = 1, so both tails reduce to partial sums of c.
    const index_t T = 10000000;
    rvec c(T + 1);
    for (index_t n = 0; n <= T; ++n)
        c[n] = cex_c(0.0, static_cast<double>(n));
    rvec pre(T + 2, 0.0);
    for (index_t n = 0; n <= T; ++n)
        pre[n + 1] = pre[n] + c[n];

    const auto t = cex_tail_bounds(0.0, 4, 2);
    REQUIRE(t.rows.size() == 3);
    for (const auto& r : t.rows) {
        const index_t K = index_t{1} << r.N;
        double v = 0;
        for (index_t k = K + 1; k + K <= T; ++k) {
            const double s = pre[k + K + 1] - pre[k];
            v += s * s;
        }
        double w = 0;
        for (index_t k = 0; k <= K; ++k) {
            const double s = pre[T + 1] - pre[k + K + 1];
            w += s * s;
        }
        CHECK(r.vN2_lo <= r.vN2);
        CHECK(r.vN2 <= r.vN2_hi);
        CHECK(r.wN2_lo <= r.wN2);
        CHECK(r.wN2 <= r.wN2_hi);
        CHECK(v >= r.vN2_lo * (1 - 1e-9));
        CHECK(v <= r.vN2_hi * (1 + 1e-9));
        // truncated at T, so only a lower bound; the dropped part is below 1% here
        CHECK(w <= r.wN2_hi * (1 + 1e-9));
        CHECK(w >= 0.99 * r.wN2_lo);
    }
}

TEST_CASE("tail table structure and fit")
{
    const auto t = cex_tail_bounds(0.0, 12, 2);
    REQUIRE(t.rows.size() == 11);
    CHECK_FALSE(t.flagged);
    CHECK(t.stable);
    CHECK(t.refit_change <= 0.2);
    CHECK(t.plateau >= 0.8);
    double vs = 0, cmax = 0;
    for (index_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        CHECK(r.N == i + 2);
        if (i > 0) {
            CHECK(r.vN2 < t.rows[i - 1].vN2);
            CHECK(r.wN2 < t.rows[i - 1].wN2);
        }
        const double L = std::log(r.N + 1.0);
        CHECK(r.bound == doctest::Approx(t.C_full / (r.N * L * L * L)));
        CHECK(r.ratio <= 1.0 + 1e-12);
        cmax = std::max(cmax, r.N * L * L * L * std::max(r.vN2_hi, r.wN2_hi));
        vs += r.vN2;
        CHECK(t.v_partial_sums[i] == doctest::Approx(vs));
    }
    CHECK(t.C_full == doctest::Approx(cmax));

    std::ostringstream os;
    write_tail_csv(t, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "N,vN2,wN2,bound,ratio");
    int rows = 0;
    while (std::getline(is, line))
        ++rows;
    CHECK(rows == 11);

    CHECK_THROWS_AS(cex_tail_bounds(0.0, 23), ValidationError);
    CHECK_THROWS_AS(cex_tail_bounds(0.0, 5, 6), ValidationError);
}
