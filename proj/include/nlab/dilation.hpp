#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include <Eigen/Dense>

#include "nlab/common.hpp"
#include "nlab/weights.hpp"

namespace nlab {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct ContractionFlags {
    bool nonnegative = false; // real entries >= 0
    bool markov = false;      // nonnegative with unit row sums
    bool normal = false;      // P P* = P* P
    bool unitary = false;     // P* P = I
};

// Dense operator on C^d with inner product <x,y> = sum_i m_i x_i conj(y_i),
// verified at construction to have operator norm <= 1 + 1e-10.
class Contraction {
public:
    static constexpr double norm_tolerance = 1e-10;

    // Empty measure means counting measure m_i = 1.
    explicit Contraction(Matrix P, Eigen::VectorXd measure = {});

    // Gaussian matrix scaled to operator norm `slack` (<= 1).
    static Contraction random(index_t d, std::uint64_t seed, double slack = 1.0);
    // Haar-like unitary from the QR factorization of a Gaussian matrix.
    static Contraction random_unitary(index_t d, std::uint64_t seed);
    // e_k -> e_{k+1}, e_{d-1} -> 0.
    static Contraction nilpotent_shift(index_t d);
    static Contraction diagonal(const cvec& lambda);
    // Symmetric doubly stochastic with positive entries.
    static Contraction doubly_stochastic(index_t d, std::uint64_t seed);
    // Reversible Markov matrix acting on L^2(pi), pi its stationary law.
    static Contraction reversible_markov(index_t d, std::uint64_t seed);

    index_t dim() const { return static_cast<index_t>(P_.rows()); }
    const Matrix& matrix() const { return P_; }
    const Eigen::VectorXd& measure() const { return m_; }
    const ContractionFlags& flags() const { return flags_; }
    double norm() const { return norm_; }
    // 1 - operator norm; negative only within the construction tolerance.
    double norm_slack() const { return 1.0 - norm_; }

    // Adjoint with respect to the weighted inner product.
    Matrix adjoint() const;
    cplx inner(const Vector& x, const Vector& y) const;
    double vnorm(const Vector& x) const;

private:
    Matrix P_;
    Eigen::VectorXd m_;
    ContractionFlags flags_;
    double norm_ = 0.0;
};

// Operator norm of A on (C^d, m).
double weighted_opnorm(const Matrix& A, const Eigen::VectorXd& measure);

// (I - P*P)^{1/2}, self-adjoint in the weighted inner product.
Matrix defect(const Contraction& P);
// (I - P P*)^{1/2}.
Matrix defect_adjoint(const Contraction& P);

// u_n = ||D_P P^n f|| = (||P^n f||^2 - ||P^{n+1} f||^2)^{1/2}, n = 0..N.
rvec increments(const Contraction& P, const Vector& f, index_t N);
// ||P^n f||^2, n = 0..N.
rvec orbit_norms_sq(const Contraction& P, const Vector& f, index_t N);

struct DilationOperators;

enum class Direction { forward, backward };

// Element of a truncated K = ... + H + [H] + H + ... carrying L slots on each side.
// past[k] is slot -(k+1), future[k] is slot k+1. The *_used counts bound the
// slots that may be nonzero.
struct DilationTruncation {
    std::shared_ptr<const DilationOperators> ops;
    std::vector<Vector> past;
    Vector center;
    std::vector<Vector> future;
    index_t past_used = 0;
    index_t future_used = 0;

    // (0, h, 0) with buffer length L.
    static DilationTruncation embed(const Contraction& P, const Vector& h, index_t L);
    static DilationTruncation embed(std::shared_ptr<const DilationOperators> ops, const Vector& h, index_t L);

    index_t capacity() const { return past.size(); }
    cplx inner(const DilationTruncation& other) const;
    double norm() const;
    DilationTruncation operator-(const DilationTruncation& other) const;
};

struct DilationOperators {
    Matrix P, P_adj, D, D_adj;
    Eigen::VectorXd measure;
    explicit DilationOperators(const Contraction& c);
};

// One application of the Schaffer unitary U (forward) or U* (backward):
//   forward:  center' = P c + D_{P*} p_1,  future'_1 = D_P c - P* p_1
//   backward: center' = P* c + D_P f_1,   past'_1  = D_{P*} c - P f_1
// Throws NumericalError when the buffer would overflow.
DilationTruncation schaffer_step(const DilationTruncation& state, Direction dir);

struct DilationReport {
    double projection_dev = 0.0;    // max_n ||E U^n (0,f,0) - P^n f||
    double orthogonality_dev = 0.0; // max |<(U^-n P^n - U^-n-1 P^n+1) f, U^-n-l P^n+l g>| / (||f|| ||g||)
    double increment_dev = 0.0;     // max_n | ||U (0,P^n f,0) - (0,P^{n+1} f,0)|| - u_n |
    double isometry_dev = 0.0;      // max | ||U x|| - ||x|| | along the run
    double max_deviation = 0.0;
    bool ok = false;
};

DilationReport verify_dilation(const Contraction& P, const Vector& f, index_t N, double tol = 1e-10,
                               std::uint64_t seed = 7);

// max_n | ||P^n f||^2 - sum_{k=n}^{N} u_k^2 - ||P^{N+1} f||^2 |.
double lemeq_residual(const Contraction& P, const Vector& f, index_t N);

// N-truncations of the two series compared by summation by parts:
//   weighted_norms = sum_{n<=N} (b_n - b_{n-1}) ||P^n f||^2   (b_{-1} = 0)
//   weighted_increments = sum_{n<=N} b_n u_n^2
//   boundary = b_N ||P^{N+1} f||^2
// and weighted_increments = weighted_norms - boundary.
struct LemeqSeries {
    double weighted_norms = 0.0;
    double weighted_increments = 0.0;
    double boundary = 0.0;
};
LemeqSeries lemeq_series(const Contraction& P, const Vector& f, const rvec& b, index_t N);

// CSV: `d,<d>` line, `measure,m_1,...,m_d` line, then d rows of d entries.
// Entries are real numbers or `re+imi` / `re-imi`.
void write_contraction_csv(const Contraction& P, std::ostream& os);
Contraction read_contraction_csv(std::istream& is);
Contraction read_contraction_csv_file(const std::string& path);

Vector to_vector(const cvec& v);
cvec to_cvec(const Vector& v);

} // namespace nlab
