#include "nlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

namespace nlab {

Contraction shift_contraction(index_t dim)
{
    require(dim >= 1, "shift_contraction: dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix S = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k)
        S(k, k + 1) = 1.0;
    return Contraction(S);
}

Vector ShiftModel::f() const
{
    Vector v(static_cast<Eigen::Index>(u.size()));
    for (index_t i = 0; i < u.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = u[i];
    return v;
}

ModelIdentity model_norm_identity(std::span<const double> u, const WeightSequence& w, index_t N)
{
    require(!u.empty(), "model_norm_identity: u must be nonempty");
    const ShiftModel model{rvec(u.begin(), u.end())};
    const Contraction P = model.contraction();
    const cvec a = w.values(N);

    ModelIdentity r;
    Vector S = Vector::Zero(P.dim());
    Vector x = model.f();
    for (index_t n = 0; n <= N; ++n) {
        S += a[n] * x;
        x = P.matrix() * x;
    }
    r.lhs = S.squaredNorm();

    const index_t d = u.size();
    for (index_t i = 0; i < d; ++i) {
        cplx s = 0.0;
        for (index_t n = 0; n <= N && i + n < d; ++n)
            s += a[n] * u[i + n];
        r.rhs += std::norm(s);
    }
    r.deviation = std::abs(r.lhs - r.rhs);
    return r;
}

double cex_c(double alpha, double x, double e)
{
    const double ll = std::log(std::log(x + 3.0));
    return std::pow(x + 1.0, alpha - 1.5) / std::sqrt(std::log(x + 2.0) * std::pow(ll, e));
}

CexSequence cex_coeffs(double alpha, index_t N, double loglog_power)
{
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0, "cex_coeffs: alpha must lie in [0,1)");
    require(std::isfinite(loglog_power) && loglog_power >= 0.0, "cex_coeffs: loglog power must be >= 0");
    CexSequence s;
    s.alpha = alpha;
    s.loglog_power = loglog_power;
    s.c.resize(N + 1);
    for (index_t n = 0; n <= N; ++n)
        s.c[n] = cex_c(alpha, static_cast<double>(n), loglog_power);
    s.n0 = N;
    while (s.n0 > 0 && s.c[s.n0 - 1] > s.c[s.n0])
        --s.n0;
    return s;
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr unsigned max_depth = 15;

struct Quad {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Quad finite(F&& f, double a, double b, double rel)
{
    Quad q;
    q.value = GK::integrate(f, a, b, max_depth, rel, &q.error);
    return q;
}

// int_a^inf g by the exp-sinh rule.
template <class F>
Quad tail(F&& g, double a, double rel)
{
    thread_local boost::math::quadrature::exp_sinh<double> rule;
    Quad q;
    double L1 = 0.0;
    q.value = rule.integrate([&](double x) { return g(x); }, a, std::numeric_limits<double>::infinity(), rel,
                             &q.error, &L1);
    return q;
}

// int_0^X g where g behaves like x^{-beta} at 0, via x = t^{1/(1-beta)}.
template <class F>
Quad head(F&& g, double X, double beta, double rel)
{
    const double gamma = 1.0 / (1.0 - beta);
    auto h = [&](double t) {
        if (t <= 0.0)
            return 0.0;
        const double x = std::pow(t, gamma);
        return g(x) * gamma * std::pow(t, gamma - 1.0);
    };
    return finite(h, 0.0, std::pow(X, 1.0 - beta), rel);
}

} // namespace

double alpha_k(double alpha, index_t k, double tol, AlphaForm form)
{
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0, "alpha_k: alpha must lie in [0,1)");
    require(k >= 1, "alpha_k: k must be >= 1");
    require(tol > 0.0, "alpha_k: tol must be positive");
    if (k == 1 && alpha >= 0.5)
        throw NumericalError("alpha_k: the integral diverges for k = 1 and alpha >= 1/2");

    const double kd = static_cast<double>(k);
    const double lk = std::log(kd);
    const double beta = k == 1 ? alpha + 0.5 : alpha;

    Quad h, t;
    double scale = 1.0;
    if (form == AlphaForm::x) {
        auto g = [&](double x) {
            const double L = k == 1 ? std::log1p(x) : std::log(x + kd);
            const double ll = std::log(std::log(x + kd + 2.0));
            return 1.0 / (std::pow(x, alpha) * std::pow(x + kd, 1.5 - alpha) * std::sqrt(L * ll * ll * ll));
        };
        h = head(g, kd, beta, 1e-13);
        t = tail(g, kd, 1e-13);
    } else {
        auto g = [&](double u) {
            const double L = lk + std::log1p(u);
            const double ll = std::log(std::log(kd * u + kd + 2.0));
            return 1.0 / (std::pow(u, alpha) * std::pow(u + 1.0, 1.5 - alpha) * std::sqrt(L * ll * ll * ll));
        };
        h = head(g, 1.0, beta, 1e-13);
        t = tail(g, 1.0, 1e-13);
        scale = 1.0 / std::sqrt(kd);
    }
    const double value = scale * (h.value + t.value);
    const double err = scale * (h.error + t.error);
    if (!std::isfinite(value) || !(err <= tol))
        throw NumericalError("alpha_k: quadrature did not reach the requested tolerance");
    return value;
}

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

std::size_t smooth_size(std::size_t n)
{
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5})
            while (r % p == 0)
                r /= p;
        if (r == 1)
            return m;
    }
}

struct FftBuffers {
    std::size_t L;
    double* real;
    fftw_complex* spec_x;
    fftw_complex* spec_b;
    explicit FftBuffers(std::size_t n)
        : L(n), real(fftw_alloc_real(n)), spec_x(fftw_alloc_complex(n / 2 + 1)), spec_b(fftw_alloc_complex(n / 2 + 1))
    {
        if (!real || !spec_x || !spec_b) {
            release();
            throw NumericalError("correlate: out of memory");
        }
    }
    ~FftBuffers() { release(); }
    FftBuffers(const FftBuffers&) = delete;
    FftBuffers& operator=(const FftBuffers&) = delete;
    void release()
    {
        fftw_free(real);
        fftw_free(spec_x);
        fftw_free(spec_b);
        real = nullptr;
        spec_x = spec_b = nullptr;
    }
};

} // namespace

rvec correlate(std::span<const double> b, std::span<const double> x, index_t count)
{
    require(!b.empty(), "correlate: empty kernel");
    require(count + b.size() - 1 <= x.size(), "correlate: x too short for the requested count");
    if (count == 0)
        return {};
    const std::size_t L = smooth_size(x.size());
    FftBuffers buf(L);
    fftw_plan fwd_x, fwd_b, inv;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_x = fftw_plan_dft_r2c_1d(static_cast<int>(L), buf.real, buf.spec_x, FFTW_ESTIMATE);
        fwd_b = fftw_plan_dft_r2c_1d(static_cast<int>(L), buf.real, buf.spec_b, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(static_cast<int>(L), buf.spec_x, buf.real, FFTW_ESTIMATE);
    }
    std::fill(buf.real, buf.real + L, 0.0);
    std::copy(x.begin(), x.end(), buf.real);
    fftw_execute(fwd_x);
    std::fill(buf.real, buf.real + L, 0.0);
    std::copy(b.begin(), b.end(), buf.real);
    fftw_execute(fwd_b);
    for (std::size_t j = 0; j < L / 2 + 1; ++j) {
        const double xr = buf.spec_x[j][0], xi = buf.spec_x[j][1];
        const double br = buf.spec_b[j][0], bi = -buf.spec_b[j][1];
        buf.spec_x[j][0] = xr * br - xi * bi;
        buf.spec_x[j][1] = xr * bi + xi * br;
    }
    fftw_execute(inv);
    rvec r(buf.real, buf.real + count);
    for (double& v : r)
        v /= static_cast<double>(L);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_x);
        fftw_destroy_plan(fwd_b);
        fftw_destroy_plan(inv);
    }
    return r;
}

namespace {

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

// ||v_N||^2 = sum_{k>K} (sum_{n<=K} b_n c_{k+n})^2 with K = 2^N.
Bracket tail_v(double alpha, double e, index_t K)
{
    rvec b(K + 1);
    double B = 0.0;
    for (index_t n = 0; n <= K; ++n) {
        b[n] = std::pow(static_cast<double>(n) + 1.0, -alpha);
        B += b[n];
    }
    auto c2 = [&](double x) {
        const double v = cex_c(alpha, x, e);
        return v * v;
    };
    Bracket out;
    for (index_t M = 8 * K;; M *= 2) {
        rvec x(M);
        for (index_t j = 0; j < M; ++j)
            x[j] = cex_c(alpha, static_cast<double>(K + 1 + j), e);
        const rvec S = correlate(b, x, M - K);
        double head = 0.0;
        for (double s : S)
            head += s * s;
        const Quad up = tail(c2, static_cast<double>(M), 1e-12);
        const Quad lo = tail(c2, static_cast<double>(M + K + 1), 1e-12);
        out.lo = head + B * B * lo.value;
        out.hi = head + B * B * up.value;
        if (out.width() <= 0.01 * out.mid() || M >= 256 * K)
            break;
    }
    return out;
}

// ||w_N||^2 = sum_{k<=K} (sum_{n>K} b_n c_{k+n})^2 with K = 2^N.
Bracket tail_w(double alpha, double e, index_t K)
{
    const index_t M = 4 * K;
    rvec b(M - K);
    for (index_t j = 0; j < b.size(); ++j)
        b[j] = std::pow(static_cast<double>(K + 1 + j) + 1.0, -alpha);
    rvec x(M);
    for (index_t j = 0; j < M; ++j)
        x[j] = cex_c(alpha, static_cast<double>(K + 1 + j), e);
    // D(k) = sum_{n=K+1}^{M} b_n c_{k+n}
    const rvec D = correlate(b, x, K + 1);

    // R(k) = sum_{n>M} b_n c_{n+k}, bracketed by integrals of a decreasing integrand
    const index_t grid = std::min<index_t>(K, 1024);
    std::vector<index_t> ks(grid + 1);
    for (index_t j = 0; j <= grid; ++j)
        ks[j] = j * K / grid;
    rvec R_lo(grid + 1), R_hi(grid + 1);
    const double Md = static_cast<double>(M);
    for (index_t j = 0; j <= grid; ++j) {
        const double k = static_cast<double>(ks[j]);
        auto g = [&](double y) { return std::pow(y + 1.0, -alpha) * cex_c(alpha, y + k, e); };
        const Quad far = tail(g, Md + 1.0, 1e-12);
        const Quad near = finite(g, Md, Md + 1.0, 1e-12);
        R_lo[j] = far.value;
        R_hi[j] = far.value + near.value;
    }
    Bracket out;
    index_t j = 0;
    for (index_t k = 0; k <= K; ++k) {
        while (j < grid && ks[j + 1] <= k)
            ++j;
        const bool on_grid = ks[j] == k;
        const double lo = D[k] + (on_grid ? R_lo[j] : R_lo[j + 1]);
        const double hi = D[k] + R_hi[j];
        out.lo += lo * lo;
        out.hi += hi * hi;
    }
    return out;
}

} // namespace

CexTailTable cex_tail_bounds(double alpha, index_t N_max, index_t N_min, double loglog_power)
{
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0, "cex_tail_bounds: alpha must lie in [0,1)");
    require(N_min >= 1 && N_min <= N_max, "cex_tail_bounds: need 1 <= N_min <= N_max");
    require(N_max <= 22, "cex_tail_bounds: N_max must be <= 22");
    require(std::isfinite(loglog_power) && loglog_power >= 0.0, "cex_tail_bounds: loglog power must be >= 0");

    CexTailTable t;
    t.alpha = alpha;
    t.loglog_power = loglog_power;
    double vsum = 0.0;
    for (index_t N = N_min; N <= N_max; ++N) {
        const index_t K = index_t{1} << N;
        const Bracket v = tail_v(alpha, loglog_power, K);
        const Bracket w = tail_w(alpha, loglog_power, K);
        CexTailRow r;
        r.N = N;
        r.vN2 = v.mid();
        r.vN2_lo = v.lo;
        r.vN2_hi = v.hi;
        r.wN2 = w.mid();
        r.wN2_lo = w.lo;
        r.wN2_hi = w.hi;
        r.flagged = v.width() > 0.1 * v.mid() || w.width() > 0.1 * w.mid();
        t.flagged = t.flagged || r.flagged;
        vsum += r.vN2;
        t.v_partial_sums.push_back(vsum);
        t.rows.push_back(r);
    }

    auto scaled = [](const CexTailRow& r) {
        const double N = static_cast<double>(r.N);
        const double L = std::log(N + 1.0);
        return std::max(r.vN2_hi, r.wN2_hi) * N * L * L * L;
    };
    const index_t split = N_min + (N_max - N_min) / 2;
    double upper_min = std::numeric_limits<double>::infinity();
    for (const auto& r : t.rows) {
        const double s = scaled(r);
        t.C_full = std::max(t.C_full, s);
        if (r.N >= split) {
            t.C_upper = std::max(t.C_upper, s);
            upper_min = std::min(upper_min, s);
        }
    }
    for (auto& r : t.rows) {
        const double N = static_cast<double>(r.N);
        const double L = std::log(N + 1.0);
        r.bound = t.C_full / (N * L * L * L);
        r.ratio = std::max(r.vN2_hi, r.wN2_hi) / r.bound;
    }
    t.refit_change = std::abs(t.C_upper / t.C_full - 1.0);
    t.plateau = upper_min / t.C_upper;
    t.stable = std::isfinite(t.C_full) && t.refit_change <= 0.2 && t.plateau >= 0.8;
    return t;
}

void write_tail_csv(const CexTailTable& t, std::ostream& os)
{
    const auto old = os.precision(17);
    os << "N,vN2,wN2,bound,ratio\n";
    for (const auto& r : t.rows)
        os << r.N << ',' << r.vN2 << ',' << r.wN2 << ',' << r.bound << ',' << r.ratio << '\n';
    os.precision(old);
}

} // namespace nlab
