#pragma once

#include <span>

#include "nlab/weights.hpp"

namespace nlab {

// Finitely supported vector over Z; entries outside [first, first + size) are 0.
struct TwoSidedVector {
    long first = 0;
    cvec values;

    cplx operator()(long i) const
    {
        const long k = i - first;
        return (k >= 0 && k < static_cast<long>(values.size())) ? values[static_cast<index_t>(k)] : cplx{};
    }
    long last() const { return first + static_cast<long>(values.size()) - 1; }
};

// Rotation k -> k+1 (N -> -N) on {-N..N} with uniform measure 1/(2N+1).
class CyclicSystem {
public:
    CyclicSystem(index_t N, cvec f);
    // f_k = v_k on {-N..N}
    static CyclicSystem from_two_sided(index_t N, const TwoSidedVector& v);

    index_t N() const { return N_; }
    index_t size() const { return f_.size(); }
    long rotate(long x) const { return x == static_cast<long>(N_) ? -static_cast<long>(N_) : x + 1; }
    cplx f(long x) const { return f_[static_cast<index_t>(x + static_cast<long>(N_))]; }
    const cvec& values() const { return f_; }

private:
    index_t N_;
    cvec f_;
};

// Entry x + N holds max over 0 <= m <= M of (1/A_m)|sum_{k<=m} a_k f(tau^k x)|,
// with the average read as 0 when A_m = 0.
rvec weighted_maximal(const CyclicSystem& sys, const WeightSequence& w, index_t M);

// sum_{i=lo}^{hi} (max_{0<=m<=M} (1/A_m)|sum_{k<=m} a_k v_{i+k}|)^p on Z (no wraparound).
double two_sided_maximal_sum(const WeightSequence& w, double p, const TwoSidedVector& v, long lo, long hi, index_t M);

// Empirical constant C^p at scale (N, M):
//   sum_{i=-N}^{N+1-M} (max_m ...)^p / sum_i |v_i|^p,  v supported in -N..N.
// N = 0 selects the default N = 10 M.
double transference_ratio(const WeightSequence& w, double p, const TwoSidedVector& v, index_t N, index_t M);

// v_n = u_{-n} for n <= 0, v_n = 0 for n > 0.
TwoSidedVector embed_one_sided(std::span<const cplx> u);

// sum_{i=0}^{n} ((1/A_i)|sum_{j<=i} a_j v_{-i+j}|)^p evaluated on the embedded vector.
double embedded_norlund_sum(const WeightSequence& w, double p, const TwoSidedVector& v, index_t n);

struct MajorationCheck {
    double two_sided = 0.0; // sum over i in [-N, N-M] of the two-sided maximal terms
    double system = 0.0;    // sum over X of the finite-system maximal function^p
    bool holds = false;
};

// The two-sided sum, over the indices whose orbit segment stays inside {-N..N},
// against the maximal p-sum of the cyclic system carrying v.
MajorationCheck majoration_check(const WeightSequence& w, double p, const TwoSidedVector& v, index_t N, index_t M);

} // namespace nlab
