#include "nlab/norlund.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nlab {

cplx NorlundOperator::entry(index_t i, index_t j) const
{
    if (j > i)
        return {};
    const double Ai = w_.abs_sum(i);
    if (Ai == 0.0)
        return {};
    return w_.value(i - j) / Ai;
}

namespace {

// Weights and inverse row sums of one section, fetched once per operation.
struct Section {
    index_t size;
    cvec a;
    rvec inv_A; // 0 where A_i = 0

    Section(const WeightSequence& w, index_t n) : size(n + 1), a(w.values(n)), inv_A(n + 1)
    {
        const rvec A = w.partial_sums(n);
        for (index_t i = 0; i <= n; ++i)
            inv_A[i] = A[i] > 0.0 ? 1.0 / A[i] : 0.0;
    }

    void forward(std::span<const cplx> u, std::span<cplx> out) const
    {
        const index_t len = std::min<index_t>(u.size(), size);
        for (index_t i = 0; i < size; ++i) {
            if (inv_A[i] == 0.0) {
                out[i] = 0.0;
                continue;
            }
            cplx acc = 0.0;
            const index_t jmax = std::min(i + 1, len);
            for (index_t j = 0; j < jmax; ++j)
                acc += a[i - j] * u[j];
            out[i] = acc * inv_A[i];
        }
    }

    void adjoint(std::span<const cplx> v, std::span<cplx> out) const
    {
        const index_t len = std::min<index_t>(v.size(), size);
        cvec scaled(len);
        for (index_t i = 0; i < len; ++i)
            scaled[i] = v[i] * inv_A[i];
        for (index_t j = 0; j < size; ++j) {
            cplx acc = 0.0;
            for (index_t i = j; i < len; ++i)
                acc += std::conj(a[i - j]) * scaled[i];
            out[j] = acc;
        }
    }
};

// x -> |x|^{r-1} x/|x|, the duality map of l^r up to normalization.
void duality_map(std::span<const cplx> x, double r, std::span<cplx> out)
{
    for (index_t i = 0; i < x.size(); ++i) {
        const double m = std::abs(x[i]);
        out[i] = m == 0.0 ? cplx{} : x[i] * std::pow(m, r - 2.0);
    }
}

template <class Fwd, class Adj>
NormEstimate ascent(Fwd&& fwd, Adj&& adj, double p, index_t n, bool nonneg, const NormOptions& opts)
{
    require(std::isfinite(p) && p > 1.0, "norm estimate: p must be > 1");
    require(n >= 1, "norm estimate: n must be >= 1");
    require(opts.tol > 0.0, "norm estimate: tol must be positive");
    const double q = p / (p - 1.0);
    const index_t size = n + 1;

    NormEstimate best;
    best.p = p;
    best.n = n;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss;

    cvec x(size), y(size), s(size), z(size);
    for (index_t start = 0; start <= opts.restarts; ++start) {
        for (auto& xi : x) {
            if (start == 0)
                xi = 1.0;
            else if (nonneg)
                xi = unif(rng);
            else
                xi = cplx(gauss(rng), gauss(rng));
        }
        double nx = lp_norm(x, p);
        for (auto& xi : x)
            xi /= nx;

        double ratio = 0.0;
        double prev = 0.0;
        double change = 1.0;
        index_t it = 0;
        bool conv = false;
        double run_best = 0.0;
        while (it < opts.max_iterations) {
            ++it;
            fwd(std::span<const cplx>(x), std::span<cplx>(y));
            ratio = lp_norm(y, p); // ||x||_p = 1
            run_best = std::max(run_best, ratio);
            if (ratio == 0.0)
                break;
            change = std::abs(ratio - prev) / ratio;
            if (it > 1 && change < opts.tol) {
                conv = true;
                break;
            }
            prev = ratio;
            duality_map(y, p, s);
            adj(std::span<const cplx>(s), std::span<cplx>(z));
            duality_map(z, q, x);
            nx = lp_norm(x, p);
            if (nx == 0.0)
                break;
            for (auto& xi : x)
                xi /= nx;
        }
        if (start == 0 || run_best > best.lower_bound) {
            best.lower_bound = run_best;
            best.iterations = it;
            best.residual = ratio == 0.0 ? 0.0 : change;
            best.converged = conv || ratio == 0.0;
        }
    }
    return best;
}

} // namespace

cvec apply(const NorlundOperator& op, std::span<const cplx> u, index_t n)
{
    Section sec(op.weights(), n);
    cvec out(n + 1);
    sec.forward(u, out);
    return out;
}

cvec apply_adjoint(const NorlundOperator& op, std::span<const cplx> v, index_t n)
{
    Section sec(op.weights(), n);
    cvec out(n + 1);
    sec.adjoint(v, out);
    return out;
}

double lp_norm(std::span<const cplx> x, double p)
{
    double acc = 0.0;
    if (p == 2.0) {
        for (const auto& xi : x)
            acc += std::norm(xi);
        return std::sqrt(acc);
    }
    for (const auto& xi : x)
        acc += std::pow(std::abs(xi), p);
    return std::pow(acc, 1.0 / p);
}

NormEstimate norm_estimate(const NorlundOperator& op, double p, index_t n, const NormOptions& opts)
{
    require(n >= 1, "norm estimate: n must be >= 1");
    Section sec(op.weights(), n);
    return ascent([&](auto in, auto out) { sec.forward(in, out); },
                  [&](auto in, auto out) { sec.adjoint(in, out); }, p, n, op.weights().nonnegative(), opts);
}

NormEstimate adjoint_norm_estimate(const NorlundOperator& op, double q, index_t n, const NormOptions& opts)
{
    require(n >= 1, "norm estimate: n must be >= 1");
    Section sec(op.weights(), n);
    return ascent([&](auto in, auto out) { sec.adjoint(in, out); },
                  [&](auto in, auto out) { sec.forward(in, out); }, q, n, op.weights().nonnegative(), opts);
}

double diagonal_ratio_sum(const WeightSequence& w, double p, index_t n)
{
    require(std::isfinite(p) && p > 1.0, "diagonal_ratio_sum: p must be > 1");
    const cvec a = w.values(n);
    const rvec A = w.partial_sums(n);
    double acc = 0.0;
    for (index_t i = 0; i <= n; ++i)
        if (A[i] > 0.0)
            acc += std::pow(std::abs(a[i]) / A[i], p);
    return acc;
}

std::pair<double, double> dual_form_sides(const WeightSequence& w, std::span<const cplx> v, double q)
{
    require(std::isfinite(q) && q > 1.0, "dual form: q must be > 1");
    if (v.empty())
        return {0.0, 0.0};
    const index_t n = v.size() - 1;
    const cvec a = w.values(n);
    const rvec A = w.partial_sums(n);
    double lhs = 0.0;
    double rhs = 0.0;
    for (index_t j = 0; j <= n; ++j) {
        cplx acc = 0.0;
        for (index_t i = 0; i + j <= n; ++i)
            acc += a[i] * v[i + j];
        lhs += std::pow(std::abs(acc), q);
        rhs += std::pow(A[j] * std::abs(v[j]), q);
    }
    return {lhs, rhs};
}

DualFormReport dual_form_check(const WeightSequence& w, double p, index_t n, index_t samples, std::uint64_t seed,
                               double margin)
{
    require(std::isfinite(p) && p > 1.0, "dual form: p must be > 1");
    require(n >= 1, "dual form: n must be >= 1");
    DualFormReport rep;
    rep.p = p;
    rep.q = p / (p - 1.0);
    rep.n = n;
    rep.samples = samples;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const bool real = w.nonnegative();
    cvec v(n + 1);
    for (index_t s = 0; s < samples; ++s) {
        for (auto& vi : v)
            vi = real ? cplx(gauss(rng), 0.0) : cplx(gauss(rng), gauss(rng));
        const auto [lhs, rhs] = dual_form_sides(w, v, rep.q);
        if (rhs > 0.0)
            rep.max_ratio = std::max(rep.max_ratio, lhs / rhs);
    }
    NormOptions opts;
    opts.seed = seed;
    rep.adjoint_norm = adjoint_norm_estimate(NorlundOperator(w), rep.q, n, opts).lower_bound;
    rep.bound = std::pow(rep.adjoint_norm + margin, rep.q);
    rep.ok = rep.max_ratio <= rep.bound;
    return rep;
}

Eigen::MatrixXcd dense_section(const NorlundOperator& op, index_t n)
{
    const auto size = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
    const cvec a = op.weights().values(n);
    const rvec A = op.weights().partial_sums(n);
    for (index_t i = 0; i <= n; ++i) {
        if (A[i] == 0.0)
            continue;
        for (index_t j = 0; j <= i; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i - j] / A[i];
    }
    return m;
}

} // namespace nlab
