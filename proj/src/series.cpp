#include "nlab/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nlab {

ConditionId parse_condition_id(const std::string& s)
{
    if (s == "obvious") return ConditionId::obvious;
    if (s == "suff1") return ConditionId::suff1;
    if (s == "suff2") return ConditionId::suff2;
    if (s == "ae") return ConditionId::ae;
    if (s == "ae-bis") return ConditionId::ae_bis;
    if (s == "alpha-ii") return ConditionId::alpha_ii;
    if (s == "cor") return ConditionId::cor;
    if (s == "eht-norm") return ConditionId::eht_norm;
    if (s == "eht-ae") return ConditionId::eht_ae;
    throw ValidationError("unknown condition id '" + s + "'");
}

std::string to_string(ConditionId id)
{
    switch (id) {
    case ConditionId::obvious: return "obvious";
    case ConditionId::suff1: return "suff1";
    case ConditionId::suff2: return "suff2";
    case ConditionId::ae: return "ae";
    case ConditionId::ae_bis: return "ae-bis";
    case ConditionId::alpha_ii: return "alpha-ii";
    case ConditionId::cor: return "cor";
    case ConditionId::eht_norm: return "eht-norm";
    case ConditionId::eht_ae: return "eht-ae";
    }
    return "?";
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::stabilizing: return "stabilizing";
    case Verdict::growing: return "growing";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

Verdict classify_trend(std::span<const double> s)
{
    if (s.empty())
        return Verdict::inconclusive;
    const double total = s.back();
    if (total <= 0.0)
        return Verdict::stabilizing;
    const double prev = s.size() >= 2 ? s[s.size() - 2] : 0.0;
    const double rel = (total - prev) / total;
    if (rel < 0.01)
        return Verdict::stabilizing;
    if (rel > 0.25)
        return Verdict::growing;
    return Verdict::inconclusive;
}

namespace {

std::vector<index_t> make_checkpoints(index_t first, index_t N, Schedule schedule)
{
    std::vector<index_t> cp;
    if (schedule == Schedule::linear) {
        for (index_t k = 1; k <= 4; ++k)
            cp.push_back(std::max(first, k * N / 4));
    } else {
        for (index_t j = 0; j < 6; ++j) {
            const index_t e = index_t{1} << j;
            if (e >= 63)
                break;
            const index_t c = (index_t{1} << e) - 1;
            if (c > N)
                break;
            cp.push_back(std::max(first, c));
        }
        if (cp.empty() || cp.back() != N)
            cp.push_back(N);
    }
    cp.erase(std::unique(cp.begin(), cp.end()), cp.end());
    return cp;
}

double loglog(double x) { return std::log(std::log(x)); }

} // namespace

ConditionReport evaluate_condition(ConditionId id, const Contraction& P, const Vector& f, const WeightSequence& w,
                                   index_t N, double alpha, Schedule schedule)
{
    require(f.size() == P.matrix().rows(), "evaluate_condition: vector length must equal the dimension");
    require(N >= 1, "evaluate_condition: N must be >= 1");
    if (id == ConditionId::alpha_ii || id == ConditionId::cor)
        require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0, "evaluate_condition: alpha must lie in [0,1)");

    ConditionReport rep;
    rep.id = id;
    rep.alpha = alpha;

    const bool from_one = id == ConditionId::ae || id == ConditionId::ae_bis;
    rep.checkpoints = make_checkpoints(from_one ? 1 : 0, N, schedule);

    rvec terms(N + 1, 0.0);
    if (id == ConditionId::ae) {
        require(N <= 26, "evaluate_condition: ae exponent cap must be <= 26");
        const rvec A = w.partial_sums(index_t{1} << (N + 1));
        Matrix Q = P.matrix(); // P^{2^n}
        for (index_t n = 1; n <= N; ++n) {
            Q = Q * Q;
            const double r = P.vnorm(Q * f);
            const double L = std::log(static_cast<double>(n) + 1.0);
            const double An = A[index_t{1} << (n + 1)];
            terms[n] = L * L * An * An * r * r;
        }
    } else {
        const index_t wlen = id == ConditionId::ae_bis ? 4 * N : N;
        const cvec a = w.values(wlen);
        const rvec A = w.partial_sums(wlen);
        const rvec norms = orbit_norms_sq(P, f, N);
        const rvec u = id == ConditionId::suff2 ? increments(P, f, N) : rvec{};
        for (index_t n = 0; n <= N; ++n) {
            const double x = static_cast<double>(n);
            switch (id) {
            case ConditionId::obvious: terms[n] = std::abs(a[n]) * std::sqrt(norms[n]); break;
            case ConditionId::suff1: terms[n] = std::abs(a[n]) * A[n] * norms[n]; break;
            case ConditionId::suff2: terms[n] = A[n] * A[n] * u[n] * u[n]; break;
            case ConditionId::ae_bis:
                if (n >= 1) {
                    const double ll = loglog(x + 3.0);
                    terms[n] = ll * ll * A[4 * n] * A[4 * n] / (x + 1.0) * norms[n];
                }
                break;
            case ConditionId::alpha_ii: terms[n] = std::pow(x + 1.0, 1.0 - 2.0 * alpha) * norms[n]; break;
            case ConditionId::cor: {
                const double ll = loglog(x + 3.0);
                terms[n] = ll * ll * std::pow(x + 1.0, 1.0 - 2.0 * alpha) * norms[n];
                break;
            }
            case ConditionId::eht_norm: terms[n] = std::log(x + 1.0) / (x + 1.0) * norms[n]; break;
            case ConditionId::eht_ae: {
                const double lll = std::log(loglog(x + 9.0));
                terms[n] = std::log(x + 1.0) * lll * lll / (x + 1.0) * norms[n];
                break;
            }
            case ConditionId::ae: break;
            }
        }
    }

    double acc = 0.0;
    index_t next = 0;
    for (index_t n = 0; n <= N && next < rep.checkpoints.size(); ++n) {
        acc += terms[n];
        while (next < rep.checkpoints.size() && rep.checkpoints[next] == n) {
            rep.partial_sums.push_back(acc);
            ++next;
        }
    }
    rep.verdict = classify_trend(rep.partial_sums);
    return rep;
}

Vector partial_sum(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N)
{
    require(f.size() == P.matrix().rows(), "partial_sum: vector length must equal the dimension");
    const cvec a = w.values(N);
    Vector S = Vector::Zero(f.size());
    Vector x = f;
    for (index_t n = 0; n <= N; ++n) {
        S += a[n] * x;
        if (n < N)
            x = P.matrix() * x;
    }
    return S;
}

IncrementCheck increment_check(const Contraction& P, const Vector& f, const WeightSequence& w, index_t lo, index_t hi,
                               index_t horizon)
{
    require(lo <= hi, "increment_check: need lo <= hi");
    const cvec a = w.values(hi);
    const rvec u = increments(P, f, horizon + hi);
    const rvec norms = orbit_norms_sq(P, f, horizon + 1 + hi);

    Vector V = Vector::Zero(f.size());
    Vector x = f;
    for (index_t k = 0; k <= hi; ++k) {
        if (k >= lo)
            V += a[k] * x;
        x = P.matrix() * x;
    }
    IncrementCheck c;
    const double vn = P.vnorm(V);
    c.lhs = vn * vn;
    rvec abs_a(hi + 1);
    for (index_t k = 0; k <= hi; ++k)
        abs_a[k] = std::abs(a[k]);
    c.rhs = block_energy(abs_a, u, lo, hi + 1, horizon);
    double t = 0.0;
    for (index_t k = lo; k <= hi; ++k)
        t += abs_a[k] * std::sqrt(norms[horizon + 1 + k]);
    c.tail = t * t;
    c.holds = c.lhs <= (c.rhs + c.tail) * (1.0 + 1e-10) + 1e-14 * P.vnorm(f) * P.vnorm(f);
    return c;
}

CauchyGap cauchy_gap(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N)
{
    require(N >= 1, "cauchy_gap: N must be >= 1");
    const index_t H = 6 * N;
    const cvec a = w.values(H);
    const rvec A = w.partial_sums(H);
    const rvec u = increments(P, f, H);

    CauchyGap g;
    Vector D = Vector::Zero(f.size());
    Vector x = f;
    for (index_t k = 0; k <= 2 * N; ++k) {
        if (k > N)
            D += a[k] * x;
        x = P.matrix() * x;
    }
    g.gap = P.vnorm(D);

    const IncrementCheck inc = increment_check(P, f, w, N + 1, 2 * N, 4 * N);
    g.increment_bound = std::sqrt(inc.rhs + inc.tail);

    double first = 0.0;
    for (index_t k = N + 1; k <= 2 * N; ++k)
        if (A[k] > 0.0)
            first += std::norm(a[k]) / (A[k] * A[k]);
    double second = 0.0;
    for (index_t k = N + 1; k <= H; ++k)
        second += A[k] * A[k] * u[k] * u[k];
    g.first_factor = std::sqrt(first);
    g.second_factor = std::sqrt(second);
    g.bound = g.first_factor * g.second_factor;
    const double scale = 1e-13 * std::max(P.vnorm(f), std::numeric_limits<double>::min());
    g.degenerate = g.second_factor <= scale && g.gap > scale;
    return g;
}

namespace {

constexpr Eigen::Index exact_svd_dim = 64;

// Normal Q: ||Q^n (I - Q)|| = max_j |mu_j|^n |1 - mu_j| over the eigenvalues.
rvec ritt_profile_normal(const Matrix& Q, index_t N)
{
    const Eigen::ComplexEigenSolver<Matrix> es(Q, false);
    const Eigen::VectorXcd mu = es.eigenvalues();
    rvec out(N, 0.0);
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        const double r = std::abs(mu(j));
        const double gap = std::abs(1.0 - mu(j));
        if (gap == 0.0 || r == 0.0)
            continue;
        double rn = 1.0;
        for (index_t n = 1; n <= N; ++n) {
            rn *= r;
            if (rn == 0.0)
                break;
            out[n - 1] = std::max(out[n - 1], static_cast<double>(n) * rn * gap);
        }
    }
    return out;
}

template <class Mat>
double top_singular_value(const Mat& R, Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>& x)
{
    using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
    const auto d = R.rows();
    if (d <= exact_svd_dim) {
        const Eigen::JacobiSVD<Mat> svd(R);
        return svd.singularValues()(0);
    }
    // warm start mixed with a fixed dense vector so a component that became small can regrow
    const Vec ones = Vec::Ones(d) / std::sqrt(static_cast<double>(d));
    double best = 0.0;
    for (const double mix : {1e-3, 1.0}) {
        Vec v = x + mix * ones;
        v /= v.norm();
        double sigma = 0.0, prev = -1.0;
        for (int it = 0; it < 2000; ++it) {
            const Vec y = R * v;
            sigma = y.norm();
            if (sigma == 0.0 || std::abs(sigma - prev) <= 1e-15 * sigma)
                break;
            prev = sigma;
            const Vec z = R.adjoint() * y;
            const double zn = z.norm();
            if (zn == 0.0)
                break;
            v = z / zn;
        }
        if (sigma > best) {
            best = sigma;
            x = v;
        }
    }
    return best;
}

template <class Mat>
rvec ritt_profile_dense(const Mat& Q, index_t N)
{
    using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
    const auto d = Q.rows();
    const Mat ImQ = Mat::Identity(d, d) - Q;
    rvec out;
    out.reserve(N);
    Mat Qn = Q; // Q^n
    Vec x = Vec::Ones(d) / std::sqrt(static_cast<double>(d));
    for (index_t n = 1; n <= N; ++n) {
        const Mat R = Qn * ImQ;
        out.push_back(static_cast<double>(n) * top_singular_value(R, x));
        Qn = Qn * Q;
    }
    return out;
}

} // namespace

rvec ritt_profile(const Contraction& P, index_t N)
{
    require(N >= 1, "ritt_constant: N must be >= 1");
    // whitened P; the weighted operator norm is the Euclidean norm of S P S^{-1}
    const Eigen::VectorXd s = P.measure().array().sqrt().matrix();
    const Matrix Q = s.asDiagonal() * P.matrix() * s.cwiseInverse().asDiagonal();
    const double scale = std::max(Q.squaredNorm(), 1.0);
    if ((Q * Q.adjoint() - Q.adjoint() * Q).norm() <= 1e-13 * scale)
        return ritt_profile_normal(Q, N);
    if (Q.imag().isZero(0.0))
        return ritt_profile_dense(Eigen::MatrixXd(Q.real()), N);
    return ritt_profile_dense(Q, N);
}

double ritt_constant(const Contraction& P, index_t N)
{
    const rvec prof = ritt_profile(P, N);
    double best = 0.0;
    for (double v : prof)
        best = std::max(best, v);
    return best;
}

MaximalFunction maximal_function(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N)
{
    require(f.size() == P.matrix().rows(), "maximal_function: vector length must equal the dimension");
    const cvec a = w.values(N);
    MaximalFunction mf;
    mf.values = Eigen::VectorXd::Zero(f.size());
    Vector S = Vector::Zero(f.size());
    Vector x = f;
    for (index_t n = 0; n <= N; ++n) {
        S += a[n] * x;
        mf.values = mf.values.cwiseMax(S.cwiseAbs());
        x = P.matrix() * x;
    }
    mf.l2_norm = std::sqrt((mf.values.array().square() * P.measure().array()).sum());
    return mf;
}

double block_energy(std::span<const double> abs_a, std::span<const double> u, index_t lo, index_t hi, index_t horizon)
{
    require(lo <= hi && hi <= abs_a.size(), "block_energy: block outside the weight range");
    if (lo == hi)
        return 0.0;
    require(horizon + hi <= u.size(), "block_energy: increments do not cover the n-range");
    double acc = 0.0;
    for (index_t n = 0; n <= horizon; ++n) {
        double s = 0.0;
        for (index_t k = lo; k < hi; ++k)
            s += abs_a[k] * u[n + k];
        acc += s * s;
    }
    return acc;
}

DyadicDiagnostics dyadic_diagnostics(const Contraction& P, const Vector& f, const WeightSequence& w, index_t L)
{
    require(L >= 1 && L <= 14, "dyadic_diagnostics: exponent cap must lie in [1,14]");
    require(f.size() == P.matrix().rows(), "dyadic_diagnostics: vector length must equal the dimension");
    DyadicDiagnostics dd;
    dd.horizon = index_t{1} << (L + 2);
    const index_t top = index_t{1} << (L + 1); // first index past the last block
    const index_t T = dd.horizon;

    const cvec a = w.values(top);
    const rvec A = w.partial_sums(top);
    rvec abs_a(top + 1);
    for (index_t k = 0; k <= top; ++k)
        abs_a[k] = std::abs(a[k]);
    const rvec u = increments(P, f, T + top);
    const rvec norms = orbit_norms_sq(P, f, T + 1 + top);

    std::vector<Vector> Pk;
    Pk.reserve(top);
    Pk.push_back(f);
    for (index_t k = 1; k < top; ++k)
        Pk.push_back(P.matrix() * Pk.back());

    for (index_t l = 0; l <= L; ++l) {
        DyadicBlock b;
        b.level = l;
        const index_t lo = index_t{1} << l;
        const index_t hi = index_t{1} << (l + 1);
        b.d = block_energy(abs_a, u, lo, hi, T);
        double a2 = 0.0;
        for (index_t k = lo; k < hi; ++k)
            a2 += abs_a[k] * abs_a[k];
        b.d_tail = a2 * static_cast<double>(hi - lo) * norms[T + 1 + lo];

        Eigen::VectorXd mx = Eigen::VectorXd::Zero(f.size());
        Vector S = Vector::Zero(f.size());
        for (index_t k = lo; k < hi; ++k) {
            S += a[k] * Pk[k];
            mx = mx.cwiseMax(S.cwiseAbs());
        }
        b.max_norm = std::sqrt((mx.array().square() * P.measure().array()).sum());
        const double sn = P.vnorm(S);
        b.block_norm_sq = sn * sn;
        b.crude_bound = A[hi] * std::sqrt(norms[lo]);
        dd.weighted_sum += static_cast<double>((l + 1) * (l + 1)) * b.d;
        dd.blocks.push_back(b);
    }
    return dd;
}

SubadditiveComparison subadditive_compare(std::span<const double> V, double q, double p, index_t N)
{
    require(std::isfinite(q) && q >= 1.0, "subadditive_compare: q must be >= 1");
    require(std::isfinite(p) && p > 1.0, "subadditive_compare: p must be > 1");
    require(N >= 1 && N <= V.size(), "subadditive_compare: need 1 <= N <= len(V)");
    for (index_t i = 0; i < N; ++i)
        require(std::isfinite(V[i]) && V[i] >= 0.0, "subadditive_compare: V must be nonnegative");

    auto at = [&](index_t n) { return V[n - 1]; };
    auto check = [&](index_t n, index_t m) {
        const double lhs = at(n + m);
        const double rhs = at(n) + at(m);
        if (lhs > rhs + 1e-12 * std::max(1.0, rhs))
            throw ValidationError("subadditive_compare: V_" + std::to_string(n + m) + " > V_" + std::to_string(n) +
                                  " + V_" + std::to_string(m));
    };
    const index_t small = std::min<index_t>(64, N);
    for (index_t n = 1; n <= small; ++n)
        for (index_t m = 1; m <= small && n + m <= N; ++m)
            check(n, m);
    if (N > 2) {
        std::mt19937_64 rng(0x5eedULL);
        std::uniform_int_distribution<index_t> pick(1, N - 1);
        for (int s = 0; s < 10000; ++s) {
            const index_t n = pick(rng);
            const index_t m = std::uniform_int_distribution<index_t>(1, N - n)(rng);
            check(n, m);
        }
    }

    SubadditiveComparison r;
    double running = 0.0;
    for (index_t n = 1; n <= N; ++n) {
        running = std::max(running, at(n));
        r.lhs += std::pow(running, q) / std::pow(static_cast<double>(n), p);
    }
    for (index_t k = 0; (index_t{1} << k) <= N; ++k)
        r.rhs += std::pow(at(index_t{1} << k), q) / std::pow(2.0, static_cast<double>(k) * p);
    if (r.rhs > 0.0)
        r.implied_C = r.lhs / r.rhs;
    else
        r.implied_C = r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return r;
}

} // namespace nlab
