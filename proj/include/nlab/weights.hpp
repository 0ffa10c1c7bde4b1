#pragma once

#include <memory>
#include <optional>
#include <string>

#include "nlab/common.hpp"

namespace nlab {

// Non-increasing sequence of nonnegative reals (b_n).
class MonotoneSequence {
public:
    // Explicit values; beyond the last entry the final value is held.
    static MonotoneSequence from_values(rvec values);
    // b_n = (n+1)^{-beta}, beta >= 0.
    static MonotoneSequence power(double beta);

    double operator[](index_t n) const;
    std::string describe() const;

private:
    MonotoneSequence() = default;
    rvec values_;
    std::optional<double> beta_;
};

enum class OrbitMap { rotation, doubling };
enum class OrbitObservable { pole, identity };

// a_n = g(T^n x0) for a deterministic map T of [0,1).
//   rotation: x -> x + phi mod 1 with phi the golden-ratio conjugate
//   doubling: x -> 2x mod 1; binary digits past the 53 carried by x0 are
//             drawn from a generator seeded by the bit pattern of x0
// pole observable: g(x) = min((1-x)^{-1/q_conj}, cap), in L^q for q < q_conj.
struct OrbitParams {
    OrbitMap map = OrbitMap::rotation;
    OrbitObservable observable = OrbitObservable::pole;
    double x0 = 0.0;
    double q_conj = 2.0;
    double cap = 1e6;
};

enum class WeightKind { cesaro, power, primes, squares, divisor, orbit, modulated, file, finite };

std::string to_string(WeightKind kind);

// Lazily extended weight sequence a_n with cached absolute partial sums
// A_n = |a_0| + ... + |a_n|. Copies share the cache; extension is internally
// synchronized, so one instance may be read from several threads.
class WeightSequence {
public:
    static WeightSequence cesaro();
    static WeightSequence power(double alpha); // a_n = (n+1)^{-alpha}, 0 <= alpha < 1
    static WeightSequence primes();
    static WeightSequence squares();
    static WeightSequence divisor(); // a_0 = 0, a_n = number of divisors of n
    static WeightSequence orbit(const OrbitParams& params);
    static WeightSequence from_file(const std::string& path);
    // Finitely supported sequence, zero past the given values.
    static WeightSequence finite(cvec values);

    WeightKind kind() const;
    std::string describe() const;
    // True when every a_n is real and >= 0.
    bool nonnegative() const;

    cplx value(index_t n) const;
    double abs_sum(index_t n) const;
    cvec values(index_t n) const;       // a_0..a_n
    rvec partial_sums(index_t n) const; // A_0..A_n

    struct Generator;
    struct Impl;

private:
    friend WeightSequence modulate(const WeightSequence&, const MonotoneSequence&);
    explicit WeightSequence(std::shared_ptr<Impl> impl);
    void ensure(index_t n) const;
    std::shared_ptr<Impl> impl_;
};

struct WeightSpec {
    WeightKind kind = WeightKind::cesaro;
    double alpha = 0.0;
    OrbitParams orbit{};
    std::string path;
    cvec values;
};

WeightSequence make_weight(const WeightSpec& spec);

// Parses "cesaro", "power:0.5", "primes", "squares", "divisor", "unit",
// "orbit:rotation[:x0[:q_conj]]", "orbit:doubling[:x0[:q_conj]]",
// "orbit-id:<map>[:x0]" (identity observable), "file:<path>", "values:1,0,2".
WeightSpec parse_weight_spec(const std::string& text);

rvec partial_sums(const WeightSequence& w, index_t n);

// max over 1 <= k <= n of k|a_k|/A_k, with 0 where A_k = 0.
double regularity_ratio(const WeightSequence& w, index_t n);

// c_n = a_n b_n.
WeightSequence modulate(const WeightSequence& w, const MonotoneSequence& b);

// Weight-file reader: one `real[,imag]` per line, `#` starts a comment.
cvec read_weight_file(const std::string& path);
// Same format, imaginary parts must vanish.
rvec read_real_file(const std::string& path);

} // namespace nlab
