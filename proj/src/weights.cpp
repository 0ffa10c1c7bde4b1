#include "nlab/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

namespace nlab {

// ---------------------------------------------------------------------------
// MonotoneSequence

MonotoneSequence MonotoneSequence::from_values(rvec values)
{
    require(!values.empty(), "monotone sequence: no values");
    for (index_t i = 0; i < values.size(); ++i) {
        require(std::isfinite(values[i]) && values[i] >= 0.0,
                "monotone sequence: negative or non-finite value at index " + std::to_string(i));
        if (i > 0)
            require(values[i] <= values[i - 1],
                    "monotone sequence: increases at index " + std::to_string(i));
    }
    MonotoneSequence b;
    b.values_ = std::move(values);
    return b;
}

MonotoneSequence MonotoneSequence::power(double beta)
{
    require(std::isfinite(beta) && beta >= 0.0, "monotone sequence: power exponent must be >= 0");
    MonotoneSequence b;
    b.beta_ = beta;
    return b;
}

double MonotoneSequence::operator[](index_t n) const
{
    if (beta_)
        return std::pow(static_cast<double>(n) + 1.0, -*beta_);
    return n < values_.size() ? values_[n] : values_.back();
}

std::string MonotoneSequence::describe() const
{
    if (beta_) {
        std::ostringstream os;
        os << "power:" << *beta_;
        return os.str();
    }
    return "values[" + std::to_string(values_.size()) + "]";
}

// ---------------------------------------------------------------------------
// generators

struct WeightSequence::Generator {
    virtual ~Generator() = default;
    // Append entries until cache.size() == new_size.
    virtual void extend(cvec& cache, index_t new_size) = 0;
};

namespace {

struct CesaroGen final : WeightSequence::Generator {
    void extend(cvec& cache, index_t new_size) override { cache.resize(new_size, cplx{1.0, 0.0}); }
};

struct PowerGen final : WeightSequence::Generator {
    double alpha;
    explicit PowerGen(double a) : alpha(a) {}
    void extend(cvec& cache, index_t new_size) override
    {
        for (index_t n = cache.size(); n < new_size; ++n)
            cache.emplace_back(std::pow(static_cast<double>(n) + 1.0, -alpha), 0.0);
    }
};

struct PrimesGen final : WeightSequence::Generator {
    void extend(cvec& cache, index_t new_size) override
    {
        std::vector<char> composite(new_size, 0);
        for (index_t p = 2; p * p < new_size; ++p)
            if (!composite[p])
                for (index_t m = p * p; m < new_size; m += p)
                    composite[m] = 1;
        for (index_t n = cache.size(); n < new_size; ++n)
            cache.emplace_back((n >= 2 && !composite[n]) ? 1.0 : 0.0, 0.0);
    }
};

struct SquaresGen final : WeightSequence::Generator {
    void extend(cvec& cache, index_t new_size) override
    {
        for (index_t n = cache.size(); n < new_size; ++n) {
            auto r = static_cast<index_t>(std::sqrt(static_cast<double>(n)));
            while (r * r > n)
                --r;
            while ((r + 1) * (r + 1) <= n)
                ++r;
            cache.emplace_back(r * r == n ? 1.0 : 0.0, 0.0);
        }
    }
};

struct DivisorGen final : WeightSequence::Generator {
    void extend(cvec& cache, index_t new_size) override
    {
        const index_t start = cache.size();
        std::vector<unsigned> count(new_size - start, 0);
        for (index_t d = 1; d < new_size; ++d) {
            index_t m = ((start + d - 1) / d) * d;
            if (m == 0)
                m = d;
            for (; m < new_size; m += d)
                ++count[m - start];
        }
        for (index_t n = start; n < new_size; ++n)
            cache.emplace_back(n == 0 ? 0.0 : static_cast<double>(count[n - start]), 0.0);
    }
};

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct OrbitGen final : WeightSequence::Generator {
    OrbitParams params;
    // doubling map state: bits n+1..n+64 of the orbit point, most significant first
    std::uint64_t window = 0;
    std::uint64_t rng_state = 0;
    std::uint64_t pending = 0;
    int pending_bits = 0;

    explicit OrbitGen(const OrbitParams& p) : params(p)
    {
        if (params.map == OrbitMap::doubling) {
            const auto mantissa = static_cast<std::uint64_t>(std::ldexp(params.x0, 53));
            rng_state = std::bit_cast<std::uint64_t>(params.x0);
            window = mantissa << 11;
            for (int i = 10; i >= 0; --i)
                window |= next_bit() << i;
        }
    }

    std::uint64_t next_bit()
    {
        if (pending_bits == 0) {
            pending = splitmix64(rng_state);
            pending_bits = 64;
        }
        --pending_bits;
        return (pending >> pending_bits) & 1U;
    }

    double observe(double x) const
    {
        if (params.observable == OrbitObservable::identity)
            return x;
        return std::min(std::pow(1.0 - x, -1.0 / params.q_conj), params.cap);
    }

    void extend(cvec& cache, index_t new_size) override
    {
        for (index_t n = cache.size(); n < new_size; ++n) {
            double x;
            if (params.map == OrbitMap::rotation) {
                constexpr long double phi = 0.6180339887498948482045868343656381L;
                long double t = static_cast<long double>(params.x0) + static_cast<long double>(n) * phi;
                x = static_cast<double>(t - std::floor(t));
            } else {
                x = std::ldexp(static_cast<double>(window >> 11), -53);
                window = (window << 1) | next_bit();
            }
            cache.emplace_back(observe(x), 0.0);
        }
    }
};

struct FiniteGen final : WeightSequence::Generator {
    cvec values;
    explicit FiniteGen(cvec v) : values(std::move(v)) {}
    void extend(cvec& cache, index_t new_size) override
    {
        for (index_t n = cache.size(); n < new_size; ++n)
            cache.push_back(n < values.size() ? values[n] : cplx{});
    }
};

struct ModulatedGen final : WeightSequence::Generator {
    WeightSequence base;
    MonotoneSequence b;
    ModulatedGen(WeightSequence w, MonotoneSequence m) : base(std::move(w)), b(std::move(m)) {}
    void extend(cvec& cache, index_t new_size) override
    {
        const cvec a = base.values(new_size - 1);
        for (index_t n = cache.size(); n < new_size; ++n)
            cache.push_back(a[n] * b[n]);
    }
};

} // namespace

// ---------------------------------------------------------------------------
// WeightSequence

struct WeightSequence::Impl {
    WeightKind kind;
    std::string description;
    bool nonnegative;
    std::unique_ptr<Generator> gen;
    mutable std::mutex mutex;
    cvec cache;
    rvec psums;
};

WeightSequence::WeightSequence(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

namespace {

std::shared_ptr<WeightSequence::Impl> make_impl(WeightKind kind, std::string description, bool nonneg,
                                                std::unique_ptr<WeightSequence::Generator> gen)
{
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->kind = kind;
    impl->description = std::move(description);
    impl->nonnegative = nonneg;
    impl->gen = std::move(gen);
    return impl;
}

std::string fmt_double(double x)
{
    std::ostringstream os;
    os << x;
    return os.str();
}

bool all_nonnegative(const cvec& v)
{
    return std::all_of(v.begin(), v.end(), [](cplx z) { return z.imag() == 0.0 && z.real() >= 0.0; });
}

} // namespace

WeightSequence WeightSequence::cesaro()
{
    return WeightSequence(make_impl(WeightKind::cesaro, "cesaro", true, std::make_unique<CesaroGen>()));
}

WeightSequence WeightSequence::power(double alpha)
{
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0, "power weight: alpha must lie in [0,1)");
    return WeightSequence(make_impl(WeightKind::power, "power:" + fmt_double(alpha), true,
                                    std::make_unique<PowerGen>(alpha)));
}

WeightSequence WeightSequence::primes()
{
    return WeightSequence(make_impl(WeightKind::primes, "primes", true, std::make_unique<PrimesGen>()));
}

WeightSequence WeightSequence::squares()
{
    return WeightSequence(make_impl(WeightKind::squares, "squares", true, std::make_unique<SquaresGen>()));
}

WeightSequence WeightSequence::divisor()
{
    return WeightSequence(make_impl(WeightKind::divisor, "divisor", true, std::make_unique<DivisorGen>()));
}

WeightSequence WeightSequence::orbit(const OrbitParams& p)
{
    require(std::isfinite(p.x0) && p.x0 >= 0.0 && p.x0 < 1.0, "orbit weight: x0 must lie in [0,1)");
    require(std::isfinite(p.q_conj) && p.q_conj > 0.0, "orbit weight: q_conj must be positive");
    require(p.cap >= 1.0, "orbit weight: cap must be >= 1");
    std::string d = std::string("orbit:") + (p.map == OrbitMap::rotation ? "rotation" : "doubling") + ":" +
                    (p.observable == OrbitObservable::pole ? "pole" : "identity") + ":" + fmt_double(p.x0);
    if (p.observable == OrbitObservable::pole)
        d += ":" + fmt_double(p.q_conj);
    return WeightSequence(make_impl(WeightKind::orbit, d, true, std::make_unique<OrbitGen>(p)));
}

WeightSequence WeightSequence::from_file(const std::string& path)
{
    cvec v = read_weight_file(path);
    const bool nonneg = all_nonnegative(v);
    return WeightSequence(make_impl(WeightKind::file, "file:" + path, nonneg, std::make_unique<FiniteGen>(std::move(v))));
}

WeightSequence WeightSequence::finite(cvec values)
{
    for (const auto& z : values)
        require(std::isfinite(z.real()) && std::isfinite(z.imag()), "finite weight: non-finite value");
    const bool nonneg = all_nonnegative(values);
    std::string d = "values[" + std::to_string(values.size()) + "]";
    return WeightSequence(make_impl(WeightKind::finite, d, nonneg, std::make_unique<FiniteGen>(std::move(values))));
}

WeightSequence modulate(const WeightSequence& w, const MonotoneSequence& b)
{
    auto impl = make_impl(WeightKind::modulated, w.describe() + "*" + b.describe(), w.nonnegative(),
                          std::make_unique<ModulatedGen>(w, b));
    return WeightSequence(std::move(impl));
}

WeightKind WeightSequence::kind() const { return impl_->kind; }
std::string WeightSequence::describe() const { return impl_->description; }
bool WeightSequence::nonnegative() const { return impl_->nonnegative; }

void WeightSequence::ensure(index_t n) const
{
    auto& s = *impl_;
    if (n < s.cache.size())
        return;
    const index_t target = std::max<index_t>({n + 1, 2 * s.cache.size(), 64});
    s.gen->extend(s.cache, target);
    double acc = s.psums.empty() ? 0.0 : s.psums.back();
    for (index_t k = s.psums.size(); k < s.cache.size(); ++k) {
        acc += std::abs(s.cache[k]);
        s.psums.push_back(acc);
    }
}

cplx WeightSequence::value(index_t n) const
{
    std::lock_guard lock(impl_->mutex);
    ensure(n);
    return impl_->cache[n];
}

double WeightSequence::abs_sum(index_t n) const
{
    std::lock_guard lock(impl_->mutex);
    ensure(n);
    return impl_->psums[n];
}

cvec WeightSequence::values(index_t n) const
{
    std::lock_guard lock(impl_->mutex);
    ensure(n);
    return cvec(impl_->cache.begin(), impl_->cache.begin() + static_cast<std::ptrdiff_t>(n + 1));
}

rvec WeightSequence::partial_sums(index_t n) const
{
    std::lock_guard lock(impl_->mutex);
    ensure(n);
    return rvec(impl_->psums.begin(), impl_->psums.begin() + static_cast<std::ptrdiff_t>(n + 1));
}

// ---------------------------------------------------------------------------
// free functions

std::string to_string(WeightKind kind)
{
    switch (kind) {
    case WeightKind::cesaro: return "cesaro";
    case WeightKind::power: return "power";
    case WeightKind::primes: return "primes";
    case WeightKind::squares: return "squares";
    case WeightKind::divisor: return "divisor";
    case WeightKind::orbit: return "orbit";
    case WeightKind::modulated: return "modulated";
    case WeightKind::file: return "file";
    case WeightKind::finite: return "finite";
    }
    return "?";
}

WeightSequence make_weight(const WeightSpec& spec)
{
    switch (spec.kind) {
    case WeightKind::cesaro: return WeightSequence::cesaro();
    case WeightKind::power: return WeightSequence::power(spec.alpha);
    case WeightKind::primes: return WeightSequence::primes();
    case WeightKind::squares: return WeightSequence::squares();
    case WeightKind::divisor: return WeightSequence::divisor();
    case WeightKind::orbit: return WeightSequence::orbit(spec.orbit);
    case WeightKind::file: return WeightSequence::from_file(spec.path);
    case WeightKind::finite: return WeightSequence::finite(spec.values);
    case WeightKind::modulated: break;
    }
    throw ValidationError("make_weight: modulated weights are built with modulate()");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        out.push_back(cur);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& context)
{
    try {
        std::size_t pos = 0;
        double x = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos != s.size())
            throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw ValidationError(context + ": cannot parse number '" + s + "'");
    }
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

OrbitMap parse_map(const std::string& s)
{
    if (s == "rotation")
        return OrbitMap::rotation;
    if (s == "doubling")
        return OrbitMap::doubling;
    throw ValidationError("unknown orbit map '" + s + "'");
}

} // namespace

WeightSpec parse_weight_spec(const std::string& text)
{
    WeightSpec spec;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    const auto args = rest.empty() ? std::vector<std::string>{} : split(rest, ':');

    auto no_args = [&] { require(args.empty(), "weight '" + head + "' takes no parameters"); };

    if (head == "cesaro") {
        no_args();
        spec.kind = WeightKind::cesaro;
    } else if (head == "power") {
        require(args.size() == 1, "weight 'power' needs one parameter alpha");
        spec.kind = WeightKind::power;
        spec.alpha = parse_double(args[0], "power weight");
    } else if (head == "primes") {
        no_args();
        spec.kind = WeightKind::primes;
    } else if (head == "squares") {
        no_args();
        spec.kind = WeightKind::squares;
    } else if (head == "divisor") {
        no_args();
        spec.kind = WeightKind::divisor;
    } else if (head == "unit") {
        no_args();
        spec.kind = WeightKind::finite;
        spec.values = {cplx{1.0, 0.0}};
    } else if (head == "orbit" || head == "orbit-id") {
        require(!args.empty() && args.size() <= 3, "weight '" + head + "' expects map[:x0[:q_conj]]");
        spec.kind = WeightKind::orbit;
        spec.orbit.map = parse_map(args[0]);
        spec.orbit.observable = head == "orbit" ? OrbitObservable::pole : OrbitObservable::identity;
        spec.orbit.x0 = args.size() > 1 ? parse_double(args[1], "orbit x0") : 0.0;
        if (spec.orbit.map == OrbitMap::doubling && args.size() <= 1)
            spec.orbit.x0 = 0.5772156649015329;
        if (args.size() > 2)
            spec.orbit.q_conj = parse_double(args[2], "orbit q_conj");
    } else if (head == "file") {
        require(!rest.empty(), "weight 'file' needs a path");
        spec.kind = WeightKind::file;
        spec.path = rest;
    } else if (head == "values") {
        require(!rest.empty(), "weight 'values' needs a comma-separated list");
        spec.kind = WeightKind::finite;
        for (const auto& tok : split(rest, ','))
            spec.values.emplace_back(parse_double(trim(tok), "values weight"), 0.0);
    } else {
        throw ValidationError("unknown weight kind '" + head + "'");
    }
    return spec;
}

rvec partial_sums(const WeightSequence& w, index_t n) { return w.partial_sums(n); }

double regularity_ratio(const WeightSequence& w, index_t n)
{
    require(n >= 1, "regularity_ratio: n must be >= 1");
    const cvec a = w.values(n);
    const rvec A = w.partial_sums(n);
    double best = 0.0;
    for (index_t k = 1; k <= n; ++k)
        if (A[k] > 0.0)
            best = std::max(best, static_cast<double>(k) * std::abs(a[k]) / A[k]);
    return best;
}

cvec read_weight_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open weight file '" + path + "'");
    cvec out;
    std::string line;
    index_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto fields = split(line, ',');
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (fields.size() == 1)
            out.emplace_back(parse_double(trim(fields[0]), ctx), 0.0);
        else if (fields.size() == 2)
            out.emplace_back(parse_double(trim(fields[0]), ctx), parse_double(trim(fields[1]), ctx));
        else
            throw ValidationError(ctx + ": expected `real[,imag]`");
        if (!std::isfinite(out.back().real()) || !std::isfinite(out.back().imag()))
            throw ValidationError(ctx + ": non-finite value");
    }
    return out;
}

rvec read_real_file(const std::string& path)
{
    rvec out;
    for (const auto& z : read_weight_file(path)) {
        require(z.imag() == 0.0, "'" + path + "': expected real values only");
        out.push_back(z.real());
    }
    return out;
}

} // namespace nlab
