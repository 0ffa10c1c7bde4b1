#pragma once

#include <span>
#include <string>

#include "nlab/dilation.hpp"
#include "nlab/weights.hpp"

namespace nlab {

// Convergence-condition series, all with nonnegative terms:
//   obvious   sum |a_n| ||P^n f||
//   suff1     sum |a_n| A_n ||P^n f||^2
//   suff2     sum A_n^2 u_n^2
//   ae        sum_{n>=1} log(n+1)^2 A_{2^{n+1}}^2 ||P^{2^n} f||^2   (n is a dyadic exponent)
//   ae-bis    sum_{n>=1} loglog(n+3)^2 A_{4n}^2/(n+1) ||P^n f||^2
//   alpha-ii  sum (n+1)^{1-2 alpha} ||P^n f||^2
//   cor       sum loglog(n+3)^2 (n+1)^{1-2 alpha} ||P^n f||^2
//   eht-norm  sum log(n+1)/(n+1) ||P^n f||^2
//   eht-ae    sum log(n+1) logloglog(n+9)^2/(n+1) ||P^n f||^2
enum class ConditionId { obvious, suff1, suff2, ae, ae_bis, alpha_ii, cor, eht_norm, eht_ae };
enum class Verdict { stabilizing, growing, inconclusive };
// linear: checkpoints N/4, N/2, 3N/4, N.
// double_dyadic: checkpoints 2^{2^j} - 1 <= N.
enum class Schedule { linear, double_dyadic };

ConditionId parse_condition_id(const std::string& s);
std::string to_string(ConditionId id);
std::string to_string(Verdict v);

struct ConditionReport {
    ConditionId id = ConditionId::obvious;
    double alpha = 0.0;
    std::vector<index_t> checkpoints;
    rvec partial_sums; // one per checkpoint, non-decreasing
    Verdict verdict = Verdict::inconclusive;
};

// Stabilizing if the last increment is < 1% of the total, growing if > 25%.
Verdict classify_trend(std::span<const double> partial_sums);

ConditionReport evaluate_condition(ConditionId id, const Contraction& P, const Vector& f, const WeightSequence& w,
                                   index_t N, double alpha = 0.0, Schedule schedule = Schedule::linear);

// S_N = sum_{n<=N} a_n P^n f.
Vector partial_sum(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N);

// ||sum_{k=lo}^{hi} a_k P^k f||^2 against its increment majorant
//   sum_{n<=T} (sum_{k=lo}^{hi} |a_k| u_{n+k})^2 + (sum_k |a_k| ||P^{T+1+k} f||)^2.
struct IncrementCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double tail = 0.0;
    bool holds = false;
};
IncrementCheck increment_check(const Contraction& P, const Vector& f, const WeightSequence& w, index_t lo, index_t hi,
                               index_t horizon);

struct CauchyGap {
    double gap = 0.0;             // ||S_{2N} - S_N||
    double increment_bound = 0.0; // square root of the increment majorant for k in (N, 2N]
    double first_factor = 0.0;    // (sum_{k=N+1}^{2N} |a_k|^2/A_k^2)^{1/2}
    double second_factor = 0.0;   // (sum_{k=N+1}^{H} A_k^2 u_k^2)^{1/2}, H = 6N
    double bound = 0.0;           // first_factor * second_factor
    bool degenerate = false;      // second factor vanishes while the gap does not
};
CauchyGap cauchy_gap(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N);

// n ||P^n - P^{n+1}|| for n = 1..N (entry n-1). Exact from the eigenvalues when P is normal,
// by SVD up to dimension 64, otherwise a power-iteration lower estimate.
rvec ritt_profile(const Contraction& P, index_t N);
double ritt_constant(const Contraction& P, index_t N);

struct MaximalFunction {
    Eigen::VectorXd values; // max_{M<=N} |S_M| coordinatewise
    double l2_norm = 0.0;   // in L^2(m)
};
MaximalFunction maximal_function(const Contraction& P, const Vector& f, const WeightSequence& w, index_t N);

// d over the half-open block [lo, hi):  sum_{n<=T} (sum_{k=lo}^{hi-1} |a_k| u_{n+k})^2.
// abs_a and u must cover indices up to hi-1 and T+hi-1.
double block_energy(std::span<const double> abs_a, std::span<const double> u, index_t lo, index_t hi, index_t horizon);

struct DyadicBlock {
    index_t level = 0;           // block [2^level, 2^{level+1})
    double d = 0.0;              // block_energy over the truncated n-range
    double d_tail = 0.0;         // bound on the dropped n > T part
    double max_norm = 0.0;       // || max_{n in block} |sum_{k=2^l}^{n} a_k P^k f| ||_{L^2(m)}
    double crude_bound = 0.0;    // A_{2^{l+1}} ||P^{2^l} f||
    double block_norm_sq = 0.0;  // ||sum_{k in block} a_k P^k f||^2
};

struct DyadicDiagnostics {
    index_t horizon = 0; // T = 2^{L+2}
    std::vector<DyadicBlock> blocks;
    double weighted_sum = 0.0; // sum (l+1)^2 d_l
};
DyadicDiagnostics dyadic_diagnostics(const Contraction& P, const Vector& f, const WeightSequence& w, index_t L);

struct SubadditiveComparison {
    double lhs = 0.0;        // sum_{n<=N} max_{i<=n} V_i^q / n^p
    double rhs = 0.0;        // sum_{2^k<=N} V_{2^k}^q / 2^{kp}
    double implied_C = 0.0;  // lhs/rhs, +inf when rhs = 0 < lhs, 0 when both vanish
};
// V[0] holds V_1. Subadditivity is checked on all pairs n, m <= 64 and on
// a fixed pseudo-random sample of larger pairs.
SubadditiveComparison subadditive_compare(std::span<const double> V, double q, double p, index_t N);

} // namespace nlab
