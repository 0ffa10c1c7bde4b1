#pragma once

#include <iosfwd>
#include <span>

#include "nlab/dilation.hpp"
#include "nlab/weights.hpp"

namespace nlab {

// Coefficient shift on C^dim: e_{n+1} -> e_n, e_0 -> 0.
Contraction shift_contraction(index_t dim);

// f = sum u_i e_i, with the standard basis standing in for an orthonormal system.
struct ShiftModel {
    rvec u;

    index_t dim() const { return u.size(); }
    Vector f() const;
    Contraction contraction() const { return shift_contraction(dim()); }
};

struct ModelIdentity {
    double lhs = 0.0; // ||sum_{n<=N} a_n P^n f||^2 by matrix application
    double rhs = 0.0; // sum_i |sum_{n<=N} a_n u_{i+n}|^2
    double deviation = 0.0;
};
ModelIdentity model_norm_identity(std::span<const double> u, const WeightSequence& w, index_t N);

// c(x) = (x+1)^{-(3/2-alpha)} (log(x+2) loglog(x+3)^e)^{-1/2}.
// e = 3 gives the summable tail bounds. e = 1.5 is provided for comparison.
double cex_c(double alpha, double x, double loglog_power = 3.0);

struct CexSequence {
    double alpha = 0.0;
    double loglog_power = 3.0;
    rvec c;            // c_0..c_N
    index_t n0 = 0;    // c strictly decreasing from n0 on (over the computed range)
    double tol = 0.0;  // pointwise evaluation has no quadrature; kept for table metadata
};
CexSequence cex_coeffs(double alpha, index_t N, double loglog_power = 3.0);

// The integral alpha_k in two equivalent forms.
//   x:  int_0^inf dx / (x^a (x+k)^{3/2-a} (log(x+k) loglog(x+k+2)^3)^{1/2})
//   u:  k^{-1/2} int_0^inf du / (u^a (u+1)^{3/2-a} (log(ku+k) loglog(ku+k+2)^3)^{1/2})
// Absolute error <= tol or NumericalError. alpha_1 diverges for a >= 1/2.
enum class AlphaForm { x, u };
double alpha_k(double alpha, index_t k, double tol = 1e-8, AlphaForm form = AlphaForm::x);

// r[t] = sum_{n<len(b)} b_n x_{t+n} for t < count, by FFT. Needs count + len(b) - 1 <= len(x).
rvec correlate(std::span<const double> b, std::span<const double> x, index_t count);

struct CexTailRow {
    index_t N = 0;
    double vN2 = 0.0, vN2_lo = 0.0, vN2_hi = 0.0;
    double wN2 = 0.0, wN2_lo = 0.0, wN2_hi = 0.0;
    double bound = 0.0; // C'/(N log^3(N+1))
    double ratio = 0.0; // max(vN2_hi, wN2_hi)/bound
    bool flagged = false; // bracket width above 10% of the value
};

struct CexTailTable {
    double alpha = 0.0;
    double loglog_power = 3.0;
    std::vector<CexTailRow> rows;
    double C_full = 0.0;       // max_N N log^3(N+1) max(v, w) over all rows
    double C_upper = 0.0;      // same over the upper half of the N-range
    double refit_change = 0.0; // |C_upper/C_full - 1|
    double plateau = 0.0;      // min over the upper half divided by C_upper
    rvec v_partial_sums;       // sum_{M<=N} vN2
    bool stable = false;       // refit_change <= 0.2 and plateau >= 0.8
    bool flagged = false;      // some row flagged
};

// Tail norms of the counterexample for N = N_min..N_max (dyadic exponents, N_max <= 22).
CexTailTable cex_tail_bounds(double alpha, index_t N_max, index_t N_min = 2, double loglog_power = 3.0);

// Columns N,vN2,wN2,bound,ratio.
void write_tail_csv(const CexTailTable& t, std::ostream& os);

} // namespace nlab
