#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "nlab/weights.hpp"

namespace nlab {

// Lower-triangular Norlund matrix of a weight sequence:
//   entry(i,j) = a_{i-j}/A_i for j <= i and A_i > 0, otherwise 0.
// Never stored; applications stream over the weight cache.
class NorlundOperator {
public:
    explicit NorlundOperator(WeightSequence w) : w_(std::move(w)) {}

    const WeightSequence& weights() const { return w_; }
    cplx entry(index_t i, index_t j) const;

private:
    WeightSequence w_;
};

// (N u)_i for i = 0..n; u is zero-padded (or cut) to length n+1.
cvec apply(const NorlundOperator& op, std::span<const cplx> u, index_t n);
// (N* v)_j = sum_{i=j}^{n} conj(a_{i-j}) v_i / A_i, rows with A_i = 0 skipped.
cvec apply_adjoint(const NorlundOperator& op, std::span<const cplx> v, index_t n);

// Lower estimate of the l^p operator norm of the (n+1)x(n+1) section.
// lower_bound is always ||N x||_p / ||x||_p for an explicit x.
struct NormEstimate {
    double p = 2.0;
    index_t n = 0;
    double lower_bound = 0.0;
    index_t iterations = 0;
    double residual = 0.0; // relative change of the last iteration
    bool converged = false;
};

struct NormOptions {
    index_t restarts = 0; // random starts on top of the all-ones start
    double tol = 1e-10;
    index_t max_iterations = 100000;
    std::uint64_t seed = 1;
};

// p = 2: power iteration on the section Gram operator N*N.
// p != 2: nonlinear power ascent x <- J_q(N* J_p(N x)) on the unit l^p sphere.
NormEstimate norm_estimate(const NorlundOperator& op, double p, index_t n, const NormOptions& opts = {});
// Same for the section adjoint N* acting on l^q.
NormEstimate adjoint_norm_estimate(const NorlundOperator& op, double q, index_t n, const NormOptions& opts = {});

// sum_{i<=n} (|a_i|/A_i)^p, with the ratio read as 0 when A_i = 0.
double diagonal_ratio_sum(const WeightSequence& w, double p, index_t n);

// L(v) = sum_j |sum_i a_i v_{i+j}|^q and R(v) = sum_j |A_j v_j|^q for finite v.
std::pair<double, double> dual_form_sides(const WeightSequence& w, std::span<const cplx> v, double q);

struct DualFormReport {
    double p = 2.0;
    double q = 2.0;
    index_t n = 0;
    index_t samples = 0;
    double max_ratio = 0.0;     // max L(v)/R(v) over the random samples
    double adjoint_norm = 0.0;  // lower estimate of ||N*||_{q -> q} on the section
    double bound = 0.0;         // (adjoint_norm + margin)^q
    bool ok = false;
};

DualFormReport dual_form_check(const WeightSequence& w, double p, index_t n, index_t samples, std::uint64_t seed,
                               double margin = 1e-6);

// Dense (n+1)x(n+1) section, for small-n oracles only.
Eigen::MatrixXcd dense_section(const NorlundOperator& op, index_t n);

double lp_norm(std::span<const cplx> x, double p);

} // namespace nlab
