#include "nlab/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace nlab {

namespace {

Eigen::VectorXd sqrt_measure(const Eigen::VectorXd& m) { return m.array().sqrt().matrix(); }

// M^{1/2} A M^{-1/2}: the Euclidean representative of A on (C^d, m).
Matrix whiten(const Matrix& A, const Eigen::VectorXd& m)
{
    const Eigen::VectorXd s = sqrt_measure(m);
    return s.asDiagonal() * A * s.cwiseInverse().asDiagonal();
}

Matrix unwhiten(const Matrix& A, const Eigen::VectorXd& m)
{
    const Eigen::VectorXd s = sqrt_measure(m);
    return s.cwiseInverse().asDiagonal() * A * s.asDiagonal();
}

// Positive square root of a Hermitian PSD matrix; negative eigenvalues clamp to 0.
Matrix psd_sqrt(const Matrix& H)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    // eigenvalues at rounding level are zeros; their square roots would be O(1e-8)
    const double floor = 8.0 * static_cast<double>(H.rows()) * std::numeric_limits<double>::epsilon();
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        ev(i) = ev(i) <= floor ? 0.0 : std::sqrt(ev(i));
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix gaussian(index_t d, std::mt19937_64& rng, bool complex_entries)
{
    std::normal_distribution<double> g;
    const auto n = static_cast<Eigen::Index>(d);
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            G(i, j) = complex_entries ? cplx(g(rng), g(rng)) : cplx(g(rng), 0.0);
    return G;
}

} // namespace

double weighted_opnorm(const Matrix& A, const Eigen::VectorXd& measure)
{
    if (A.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(whiten(A, measure));
    return svd.singularValues()(0);
}

Contraction::Contraction(Matrix P, Eigen::VectorXd measure) : P_(std::move(P)), m_(std::move(measure))
{
    require(P_.rows() == P_.cols() && P_.rows() > 0, "contraction: matrix must be square and non-empty");
    if (m_.size() == 0)
        m_ = Eigen::VectorXd::Ones(P_.rows());
    require(m_.size() == P_.rows(), "contraction: measure length must equal the dimension");
    for (Eigen::Index i = 0; i < m_.size(); ++i)
        require(std::isfinite(m_(i)) && m_(i) > 0.0, "contraction: measure must be positive");
    require(P_.allFinite(), "contraction: non-finite entry");

    norm_ = weighted_opnorm(P_, m_);
    if (norm_ > 1.0 + norm_tolerance) {
        std::ostringstream os;
        os << "contraction: operator norm " << std::setprecision(17) << norm_ << " exceeds 1";
        throw ValidationError(os.str());
    }

    const auto d = P_.rows();
    flags_.nonnegative = true;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (P_(i, j).imag() != 0.0 || P_(i, j).real() < 0.0)
                flags_.nonnegative = false;
    flags_.markov = flags_.nonnegative;
    if (flags_.markov)
        for (Eigen::Index i = 0; i < d; ++i)
            if (std::abs(P_.row(i).sum().real() - 1.0) > 1e-12)
                flags_.markov = false;
    const Matrix Pa = adjoint();
    flags_.normal = (P_ * Pa - Pa * P_).norm() <= 1e-10;
    flags_.unitary = (Pa * P_ - Matrix::Identity(d, d)).norm() <= 1e-10;
}

Contraction Contraction::random(index_t d, std::uint64_t seed, double slack)
{
    require(d >= 1, "random contraction: dimension must be >= 1");
    require(slack > 0.0 && slack <= 1.0, "random contraction: slack must lie in (0,1]");
    std::mt19937_64 rng(seed);
    Matrix G = gaussian(d, rng, false);
    const double s = Eigen::JacobiSVD<Matrix>(G).singularValues()(0);
    return Contraction(G * (slack / s));
}

Contraction Contraction::random_unitary(index_t d, std::uint64_t seed)
{
    require(d >= 1, "random unitary: dimension must be >= 1");
    std::mt19937_64 rng(seed);
    Matrix G = gaussian(d, rng, true);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        const cplx r = R(j, j);
        if (std::abs(r) > 0.0)
            Q.col(j) *= r / std::abs(r);
    }
    return Contraction(Q);
}

Contraction Contraction::nilpotent_shift(index_t d)
{
    require(d >= 1, "nilpotent shift: dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    Matrix S = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k)
        S(k + 1, k) = 1.0;
    return Contraction(S);
}

Contraction Contraction::diagonal(const cvec& lambda)
{
    require(!lambda.empty(), "diagonal contraction: no eigenvalues");
    return Contraction(Matrix(to_vector(lambda).asDiagonal()));
}

Contraction Contraction::doubly_stochastic(index_t d, std::uint64_t seed)
{
    require(d >= 1, "doubly stochastic: dimension must be >= 1");
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(d);
    Matrix S = Matrix::Zero(n, n);
    constexpr int perms = 3;
    std::vector<index_t> sigma(d);
    for (int k = 0; k < perms; ++k) {
        std::iota(sigma.begin(), sigma.end(), index_t{0});
        std::shuffle(sigma.begin(), sigma.end(), rng);
        for (index_t i = 0; i < d; ++i) {
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(sigma[i]);
            S(a, b) += 0.5 / perms;
            S(b, a) += 0.5 / perms;
        }
    }
    constexpr double mix = 0.1;
    S = (1.0 - mix) * S + Matrix::Constant(n, n, mix / static_cast<double>(d));
    return Contraction(S);
}

Contraction Contraction::reversible_markov(index_t d, std::uint64_t seed)
{
    require(d >= 1, "reversible markov: dimension must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd W(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            W(i, j) = W(j, i) = u(rng);
    const Eigen::VectorXd r = W.rowwise().sum();
    Matrix P = (r.cwiseInverse().asDiagonal() * W).cast<cplx>();
    return Contraction(P, r / r.sum());
}

Matrix Contraction::adjoint() const
{
    return m_.cwiseInverse().asDiagonal() * P_.adjoint() * m_.asDiagonal();
}

cplx Contraction::inner(const Vector& x, const Vector& y) const
{
    return (x.array() * y.conjugate().array() * m_.array().cast<cplx>()).sum();
}

double Contraction::vnorm(const Vector& x) const
{
    return std::sqrt((x.array().abs2() * m_.array()).sum());
}

Matrix defect(const Contraction& P)
{
    const Matrix Q = whiten(P.matrix(), P.measure());
    const auto d = Q.rows();
    return unwhiten(psd_sqrt(Matrix::Identity(d, d) - Q.adjoint() * Q), P.measure());
}

Matrix defect_adjoint(const Contraction& P)
{
    const Matrix Q = whiten(P.matrix(), P.measure());
    const auto d = Q.rows();
    return unwhiten(psd_sqrt(Matrix::Identity(d, d) - Q * Q.adjoint()), P.measure());
}

rvec increments(const Contraction& P, const Vector& f, index_t N)
{
    require(f.size() == P.matrix().rows(), "increments: vector length must equal the dimension");
    const Matrix D = defect(P);
    rvec u(N + 1);
    Vector x = f;
    for (index_t n = 0; n <= N; ++n) {
        u[n] = P.vnorm(D * x);
        x = P.matrix() * x;
    }
    return u;
}

rvec orbit_norms_sq(const Contraction& P, const Vector& f, index_t N)
{
    require(f.size() == P.matrix().rows(), "orbit norms: vector length must equal the dimension");
    rvec out(N + 1);
    Vector x = f;
    for (index_t n = 0; n <= N; ++n) {
        const double r = P.vnorm(x);
        out[n] = r * r;
        x = P.matrix() * x;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Schaffer dilation

DilationOperators::DilationOperators(const Contraction& c)
    : P(c.matrix()), P_adj(c.adjoint()), D(defect(c)), D_adj(defect_adjoint(c)), measure(c.measure())
{
}

DilationTruncation DilationTruncation::embed(const Contraction& P, const Vector& h, index_t L)
{
    return embed(std::make_shared<const DilationOperators>(P), h, L);
}

DilationTruncation DilationTruncation::embed(std::shared_ptr<const DilationOperators> ops, const Vector& h, index_t L)
{
    require(h.size() == ops->P.rows(), "dilation: vector length must equal the dimension");
    DilationTruncation s;
    const Vector zero = Vector::Zero(h.size());
    s.ops = std::move(ops);
    s.past.assign(L, zero);
    s.future.assign(L, zero);
    s.center = h;
    return s;
}

cplx DilationTruncation::inner(const DilationTruncation& o) const
{
    require(capacity() == o.capacity(), "dilation: buffer lengths differ");
    const auto& m = ops->measure;
    auto ip = [&](const Vector& x, const Vector& y) {
        return (x.array() * y.conjugate().array() * m.array().cast<cplx>()).sum();
    };
    cplx acc = ip(center, o.center);
    for (index_t k = 0; k < capacity(); ++k)
        acc += ip(past[k], o.past[k]) + ip(future[k], o.future[k]);
    return acc;
}

double DilationTruncation::norm() const { return std::sqrt(std::max(0.0, inner(*this).real())); }

DilationTruncation DilationTruncation::operator-(const DilationTruncation& o) const
{
    require(capacity() == o.capacity(), "dilation: buffer lengths differ");
    DilationTruncation r = *this;
    r.center -= o.center;
    for (index_t k = 0; k < capacity(); ++k) {
        r.past[k] -= o.past[k];
        r.future[k] -= o.future[k];
    }
    r.past_used = std::max(past_used, o.past_used);
    r.future_used = std::max(future_used, o.future_used);
    return r;
}

DilationTruncation schaffer_step(const DilationTruncation& s, Direction dir)
{
    const auto& op = *s.ops;
    const index_t L = s.capacity();
    DilationTruncation r = s;
    const Vector zero = Vector::Zero(s.center.size());
    if (dir == Direction::forward) {
        if (s.future_used >= L)
            throw NumericalError("schaffer_step: future buffer exhausted");
        const Vector& p1 = s.past_used > 0 ? s.past[0] : zero;
        r.center = op.P * s.center + op.D_adj * p1;
        for (index_t k = L - 1; k > 0; --k)
            r.future[k] = s.future[k - 1];
        r.future[0] = op.D * s.center - op.P_adj * p1;
        for (index_t k = 0; k + 1 < L; ++k)
            r.past[k] = s.past[k + 1];
        r.past[L - 1] = zero;
        r.future_used = s.future_used + 1;
        r.past_used = s.past_used > 0 ? s.past_used - 1 : 0;
    } else {
        if (s.past_used >= L)
            throw NumericalError("schaffer_step: past buffer exhausted");
        const Vector& f1 = s.future_used > 0 ? s.future[0] : zero;
        r.center = op.P_adj * s.center + op.D * f1;
        for (index_t k = L - 1; k > 0; --k)
            r.past[k] = s.past[k - 1];
        r.past[0] = op.D_adj * s.center - op.P * f1;
        for (index_t k = 0; k + 1 < L; ++k)
            r.future[k] = s.future[k + 1];
        r.future[L - 1] = zero;
        r.past_used = s.past_used + 1;
        r.future_used = s.future_used > 0 ? s.future_used - 1 : 0;
    }
    return r;
}

DilationReport verify_dilation(const Contraction& P, const Vector& f, index_t N, double tol, std::uint64_t seed)
{
    require(f.size() == P.matrix().rows(), "verify_dilation: vector length must equal the dimension");
    const auto ops = std::make_shared<const DilationOperators>(P);
    const index_t L = 2 * N + 4;
    const auto d = f.size();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i)
        g(i) = cplx(gauss(rng), gauss(rng));

    auto powers = [&](const Vector& h, index_t count) {
        std::vector<Vector> out{h};
        for (index_t k = 1; k <= count; ++k)
            out.push_back(P.matrix() * out.back());
        return out;
    };
    const auto Pf = powers(f, N + 1);
    const auto Pg = powers(g, N + 1);
    const rvec u = increments(P, f, N);

    DilationReport rep;
    auto step = [&](const DilationTruncation& x, Direction dir) {
        DilationTruncation y = schaffer_step(x, dir);
        rep.isometry_dev = std::max(rep.isometry_dev, std::abs(y.norm() - x.norm()));
        return y;
    };

    // E U^n (0,f,0) = P^n f
    DilationTruncation x = DilationTruncation::embed(ops, f, L);
    for (index_t n = 1; n <= N; ++n) {
        x = step(x, Direction::forward);
        rep.projection_dev = std::max(rep.projection_dev, P.vnorm(x.center - Pf[n]));
    }

    // U^{-k} (0, P^k h, 0)
    auto pulled_back = [&](const std::vector<Vector>& Ph, index_t k) {
        DilationTruncation y = DilationTruncation::embed(ops, Ph[k], L);
        for (index_t j = 0; j < k; ++j)
            y = step(y, Direction::backward);
        return y;
    };
    std::vector<DilationTruncation> Yf, Yg;
    for (index_t k = 0; k <= N + 1; ++k) {
        Yf.push_back(pulled_back(Pf, k));
        Yg.push_back(pulled_back(Pg, k));
    }
    const double scale = std::max(P.vnorm(f) * P.vnorm(g), std::numeric_limits<double>::min());
    for (index_t n = 0; n < N; ++n) {
        const DilationTruncation diff = Yf[n] - Yf[n + 1];
        for (index_t l = 1; n + l <= N + 1; ++l)
            rep.orthogonality_dev = std::max(rep.orthogonality_dev, std::abs(diff.inner(Yg[n + l])) / scale);
    }

    for (index_t n = 0; n <= N; ++n) {
        const DilationTruncation moved = step(DilationTruncation::embed(ops, Pf[n], L), Direction::forward);
        const double gap = (moved - DilationTruncation::embed(ops, Pf[n + 1], L)).norm();
        rep.increment_dev = std::max(rep.increment_dev, std::abs(gap - u[n]));
    }

    rep.max_deviation = std::max({rep.projection_dev, rep.orthogonality_dev, rep.increment_dev, rep.isometry_dev});
    rep.ok = rep.max_deviation <= tol;
    return rep;
}

double lemeq_residual(const Contraction& P, const Vector& f, index_t N)
{
    const rvec norms = orbit_norms_sq(P, f, N + 1);
    const rvec u = increments(P, f, N);
    double tail = norms[N + 1];
    double worst = 0.0;
    // sweep n downward so that tail = sum_{k=n}^{N} u_k^2 + ||P^{N+1} f||^2
    for (index_t n = N + 1; n-- > 0;) {
        tail += u[n] * u[n];
        worst = std::max(worst, std::abs(norms[n] - tail));
    }
    return worst;
}

LemeqSeries lemeq_series(const Contraction& P, const Vector& f, const rvec& b, index_t N)
{
    require(b.size() > N, "lemeq_series: need b_0..b_N");
    for (index_t n = 1; n <= N; ++n)
        require(b[n] >= b[n - 1], "lemeq_series: b must be non-decreasing");
    const rvec norms = orbit_norms_sq(P, f, N + 1);
    const rvec u = increments(P, f, N);
    LemeqSeries s;
    for (index_t n = 0; n <= N; ++n) {
        s.weighted_norms += (b[n] - (n > 0 ? b[n - 1] : 0.0)) * norms[n];
        s.weighted_increments += b[n] * u[n] * u[n];
    }
    s.boundary = b[N] * norms[N + 1];
    return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_entry(cplx z)
{
    std::ostringstream os;
    os << std::setprecision(17) << z.real();
    if (z.imag() != 0.0)
        os << (z.imag() < 0.0 || std::signbit(z.imag()) ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

double to_double(const std::string& s)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ValidationError("contraction csv: cannot parse '" + s + "'");
    }
    if (pos != s.size())
        throw ValidationError("contraction csv: cannot parse '" + s + "'");
    return x;
}

cplx parse_entry(std::string s)
{
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty())
        throw ValidationError("contraction csv: empty entry");
    if (s.back() != 'i')
        return {to_double(s), 0.0};
    s.pop_back();
    // split at the last sign that is not an exponent sign
    for (std::size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E')
            return {to_double(s.substr(0, k)), to_double(s.substr(k))};
    }
    return {0.0, to_double(s)};
}

std::vector<std::string> csv_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ','))
        out.push_back(cur);
    return out;
}

} // namespace

void write_contraction_csv(const Contraction& P, std::ostream& os)
{
    const auto d = P.matrix().rows();
    os << "d," << d << "\nmeasure";
    for (Eigen::Index i = 0; i < d; ++i)
        os << ',' << format_entry(P.measure()(i));
    os << '\n';
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            os << (j ? "," : "") << format_entry(P.matrix()(i, j));
        os << '\n';
    }
}

Contraction read_contraction_csv(std::istream& is)
{
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        rows.push_back(line);
    }
    require(rows.size() >= 2, "contraction csv: missing header");
    const auto head = csv_fields(rows[0]);
    require(head.size() == 2 && head[0] == "d", "contraction csv: first line must be `d,<dim>`");
    const double dd = to_double(head[1]);
    require(dd >= 1 && dd == std::floor(dd), "contraction csv: bad dimension");
    const auto d = static_cast<Eigen::Index>(dd);
    const auto meas = csv_fields(rows[1]);
    require(static_cast<Eigen::Index>(meas.size()) == d + 1 && meas[0] == "measure",
            "contraction csv: second line must be `measure,m_1,...,m_d`");
    require(static_cast<Eigen::Index>(rows.size()) == d + 2, "contraction csv: expected d matrix rows");
    Eigen::VectorXd m(d);
    for (Eigen::Index i = 0; i < d; ++i)
        m(i) = to_double(meas[static_cast<index_t>(i + 1)]);
    Matrix P(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto f = csv_fields(rows[static_cast<index_t>(i + 2)]);
        require(static_cast<Eigen::Index>(f.size()) == d, "contraction csv: row " + std::to_string(i) + " has wrong length");
        for (Eigen::Index j = 0; j < d; ++j)
            P(i, j) = parse_entry(f[static_cast<index_t>(j)]);
    }
    return Contraction(P, m);
}

Contraction read_contraction_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open contraction file '" + path + "'");
    return read_contraction_csv(in);
}

Vector to_vector(const cvec& v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (index_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

cvec to_cvec(const Vector& v) { return cvec(v.data(), v.data() + v.size()); }

} // namespace nlab
