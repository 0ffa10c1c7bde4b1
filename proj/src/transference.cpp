#include "nlab/transference.hpp"

#include <algorithm>
#include <cmath>

namespace nlab {

CyclicSystem::CyclicSystem(index_t N, cvec f) : N_(N), f_(std::move(f))
{
    require(f_.size() == 2 * N_ + 1, "cyclic system: expected 2N+1 values");
}

CyclicSystem CyclicSystem::from_two_sided(index_t N, const TwoSidedVector& v)
{
    cvec f(2 * N + 1);
    for (index_t k = 0; k < f.size(); ++k)
        f[k] = v(static_cast<long>(k) - static_cast<long>(N));
    return CyclicSystem(N, std::move(f));
}

namespace {

struct Averages {
    cvec a;
    rvec inv_A;
    Averages(const WeightSequence& w, index_t M) : a(w.values(M)), inv_A(M + 1)
    {
        const rvec A = w.partial_sums(M);
        for (index_t m = 0; m <= M; ++m)
            inv_A[m] = A[m] > 0.0 ? 1.0 / A[m] : 0.0;
    }

    // max_m (1/A_m)|sum_{k<=m} a_k g(k)|
    template <class G>
    double maximal(G&& g) const
    {
        cplx acc = 0.0;
        double best = 0.0;
        for (index_t m = 0; m < a.size(); ++m) {
            acc += a[m] * g(m);
            best = std::max(best, std::abs(acc) * inv_A[m]);
        }
        return best;
    }
};

double pow_p(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

} // namespace

rvec weighted_maximal(const CyclicSystem& sys, const WeightSequence& w, index_t M)
{
    require(M >= 1 && M <= 2 * sys.N(), "weighted_maximal: need 1 <= M <= 2N");
    const Averages avg(w, M);
    const long N = static_cast<long>(sys.N());
    const long period = 2 * N + 1;
    rvec out(sys.size());
    for (long x = -N; x <= N; ++x) {
        out[static_cast<index_t>(x + N)] = avg.maximal([&](index_t k) {
            long y = x + static_cast<long>(k);
            if (y > N)
                y -= period;
            return sys.f(y);
        });
    }
    return out;
}

double two_sided_maximal_sum(const WeightSequence& w, double p, const TwoSidedVector& v, long lo, long hi, index_t M)
{
    const Averages avg(w, M);
    double acc = 0.0;
    // terms vanish unless [i, i+M] meets the support of v
    lo = std::max(lo, v.first - static_cast<long>(M));
    hi = std::min(hi, v.last());
    for (long i = lo; i <= hi; ++i)
        acc += pow_p(avg.maximal([&](index_t k) { return v(i + static_cast<long>(k)); }), p);
    return acc;
}

double transference_ratio(const WeightSequence& w, double p, const TwoSidedVector& v, index_t N, index_t M)
{
    require(std::isfinite(p) && p >= 1.0, "transference_ratio: p must be >= 1");
    require(M >= 1, "transference_ratio: M must be >= 1");
    if (N == 0)
        N = 10 * M;
    require(N > M, "transference_ratio: need N > M");
    const long n = static_cast<long>(N);
    require(v.values.empty() || (v.first >= -n && v.last() <= n), "transference_ratio: v must be supported in -N..N");
    double denom = 0.0;
    for (const auto& z : v.values)
        denom += pow_p(std::abs(z), p);
    require(denom > 0.0, "transference_ratio: v must not vanish identically");
    return two_sided_maximal_sum(w, p, v, -n, n + 1 - static_cast<long>(M), M) / denom;
}

TwoSidedVector embed_one_sided(std::span<const cplx> u)
{
    TwoSidedVector v;
    if (u.empty())
        return v;
    v.first = -static_cast<long>(u.size() - 1);
    v.values.assign(u.rbegin(), u.rend());
    return v;
}

double embedded_norlund_sum(const WeightSequence& w, double p, const TwoSidedVector& v, index_t n)
{
    const cvec a = w.values(n);
    const rvec A = w.partial_sums(n);
    double acc = 0.0;
    for (index_t i = 0; i <= n; ++i) {
        if (A[i] == 0.0)
            continue;
        cplx s = 0.0;
        for (index_t j = 0; j <= i; ++j)
            s += a[j] * v(-static_cast<long>(i) + static_cast<long>(j));
        acc += pow_p(std::abs(s) / A[i], p);
    }
    return acc;
}

MajorationCheck majoration_check(const WeightSequence& w, double p, const TwoSidedVector& v, index_t N, index_t M)
{
    const auto sys = CyclicSystem::from_two_sided(N, v);
    MajorationCheck c;
    const long n = static_cast<long>(N);
    c.two_sided = two_sided_maximal_sum(w, p, v, -n, n - static_cast<long>(M), M);
    for (double m : weighted_maximal(sys, w, M))
        c.system += pow_p(m, p);
    c.holds = c.two_sided <= c.system * (1.0 + 1e-12) + 1e-300;
    return c;
}

} // namespace nlab
