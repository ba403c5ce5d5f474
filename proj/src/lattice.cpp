#include "amput/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace amput {

namespace {

// Far out-of-the-money continuation values decay into subnormals, which are
// very slow on x86. Flush them to zero for the duration of a sweep.
class FlushSubnormals {
public:
#if defined(__SSE2__)
    FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushSubnormals() { _mm_setcsr(saved_); }

private:
    unsigned int saved_;
#endif
};

struct StepRule {
    double h;
    double sqrtH;
    double discount;  // e^{-rh}
    double pUp;
    double pDown;
};

StepRule make_rule(const MarketModel& m, const LatticeSpec& spec)
{
    m.validate();
    if (spec.n < 1) throw std::invalid_argument("lattice: n must be >= 1");
    StepRule rule{};
    rule.h = spec.h(m);
    rule.sqrtH = std::sqrt(rule.h);
    rule.discount = std::exp(-m.r * rule.h);
    if (spec.scheme == Scheme::PaperWalk) {
        rule.pUp = 0.5;
        rule.pDown = 0.5;
    } else {
        const double up = std::exp(m.sigma * rule.sqrtH);
        const double dn = std::exp(-m.sigma * rule.sqrtH);
        const double p = (std::exp((m.r - m.d) * rule.h) - dn) / (up - dn);
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("lattice: risk-neutral probability " + std::to_string(p)
                                        + " outside (0,1); h too large for the drift");
        rule.pUp = p;
        rule.pDown = 1.0 - p;
    }
    return rule;
}

// Stock prices via a table of e^{sigma m sqrt(h)}, m = -n..n, and a per-step
// drift factor. One rounding away from the direct exponential.
class StockGrid {
public:
    StockGrid(const MarketModel& m, const LatticeSpec& spec, const StepRule& rule)
        : n_(spec.n), s0_(m.s0), mu_(spec.scheme == Scheme::PaperWalk ? m.mu() : 0.0), h_(rule.h),
          jumps_(2 * static_cast<std::size_t>(spec.n) + 1)
    {
        for (int i = -n_; i <= n_; ++i)
            jumps_[static_cast<std::size_t>(i + n_)] = std::exp(m.sigma * i * rule.sqrtH);
    }

    double layer_factor(int j) const { return s0_ * std::exp(mu_ * j * h_); }
    double stock(double factor, int j, int k) const
    {
        return factor * jumps_[static_cast<std::size_t>(2 * k - j + n_)];
    }

private:
    int n_;
    double s0_;
    double mu_;
    double h_;
    std::vector<double> jumps_;
};

// Terminal layer evaluated with the direct exponential so that it equals
// g(mu0 T + x) (PaperWalk) or (K - S_T)^+ (RiskNeutral) exactly.
std::vector<double> terminal_layer(const MarketModel& m, const LatticeSpec& spec, const StepRule& rule)
{
    const int n = spec.n;
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double x = (2 * k - n) * rule.sqrtH;
        v[static_cast<std::size_t>(k)] = spec.scheme == Scheme::PaperWalk
            ? payoff_g(m, m.mu0() * m.t + x)
            : std::max(m.k - m.s0 * std::exp(m.sigma * x), 0.0);
    }
    return v;
}

}  // namespace

double node_walk(const LatticeSpec&, double h, int j, int k)
{
    return (2 * k - j) * std::sqrt(h);
}

double node_stock(const MarketModel& m, const LatticeSpec& spec, int j, int k)
{
    const double h = spec.h(m);
    const double drift = spec.scheme == Scheme::PaperWalk ? m.mu() * j * h : 0.0;
    return m.s0 * std::exp(drift + m.sigma * node_walk(spec, h, j, k));
}

LatticeResult price_american(const MarketModel& m, const LatticeSpec& spec)
{
    const StepRule rule = make_rule(m, spec);
    const StockGrid grid(m, spec, rule);
    const FlushSubnormals ftz;
    const int n = spec.n;
    const double tieTol = 1e-12 * m.k;

    LatticeResult res;
    res.boundaryIndex.assign(static_cast<std::size_t>(n) + 1, std::nullopt);
    res.boundaryStock.assign(static_cast<std::size_t>(n) + 1, std::numeric_limits<double>::quiet_NaN());
    if (spec.keepExercise) res.exercise.resize(static_cast<std::size_t>(n) + 1);
    if (spec.keepValues) res.values.resize(static_cast<std::size_t>(n) + 1);

    std::vector<double> v = terminal_layer(m, spec, rule);
    {
        int last = -1;
        for (int k = 0; k <= n; ++k)
            if (v[static_cast<std::size_t>(k)] > 0.0) last = k;
        if (last >= 0) res.boundaryIndex[static_cast<std::size_t>(n)] = last;
        if (spec.keepExercise) {
            auto& flags = res.exercise[static_cast<std::size_t>(n)];
            flags.resize(static_cast<std::size_t>(n) + 1);
            for (int k = 0; k <= n; ++k) flags[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k)] > 0.0;
        }
        if (spec.keepValues) res.values[static_cast<std::size_t>(n)] = v;
    }

    const double a = rule.discount * rule.pDown;
    const double b = rule.discount * rule.pUp;
    for (int j = n - 1; j >= 0; --j) {
        const double factor = grid.layer_factor(j);
        std::vector<bool>* flags = nullptr;
        if (spec.keepExercise) {
            flags = &res.exercise[static_cast<std::size_t>(j)];
            flags->assign(static_cast<std::size_t>(j) + 1, false);
        }
        int last = -1;
        int k = 0;
        // exercise can only be optimal where the payoff is positive, a prefix of the layer
        for (; k <= j && m.k > 0.0; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const double exercise = m.k - grid.stock(factor, j, k);
            if (exercise <= 0.0) break;
            const double cont = a * v[uk] + b * v[uk + 1];
            if (exercise >= cont - tieTol) {
                last = k;
                if (flags) (*flags)[uk] = true;
            }
            v[uk] = std::max(exercise, cont);
        }
        double* layer = v.data();
        for (int kk = k; kk <= j; ++kk) layer[kk] = a * layer[kk] + b * layer[kk + 1];
        v.resize(static_cast<std::size_t>(j) + 1);
        if (last >= 0) res.boundaryIndex[static_cast<std::size_t>(j)] = last;
        if (spec.keepValues) res.values[static_cast<std::size_t>(j)] = v;
    }
    res.price = v[0];

    for (int j = 0; j <= n; ++j) {
        const auto& idx = res.boundaryIndex[static_cast<std::size_t>(j)];
        if (idx) res.boundaryStock[static_cast<std::size_t>(j)] = node_stock(m, spec, j, *idx);
    }
    return res;
}

double price_european_on_lattice(const MarketModel& m, const LatticeSpec& spec)
{
    const StepRule rule = make_rule(m, spec);
    const FlushSubnormals ftz;
    std::vector<double> v = terminal_layer(m, spec, rule);
    const double a = rule.discount * rule.pDown;
    const double b = rule.discount * rule.pUp;
    for (int j = spec.n - 1; j >= 0; --j)
        for (std::size_t k = 0; k <= static_cast<std::size_t>(j); ++k) v[k] = a * v[k] + b * v[k + 1];
    return v[0];
}

std::vector<BoundaryPoint> extract_boundary(const MarketModel& m, const LatticeSpec& spec,
                                            const LatticeResult& result)
{
    const int n = spec.n;
    if (result.exercise.size() != static_cast<std::size_t>(n) + 1)
        throw std::invalid_argument("extract_boundary: result holds no exercise flags (set keepExercise)");
    const double h = spec.h(m);
    std::vector<BoundaryPoint> curve;
    curve.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        BoundaryPoint p;
        p.step = j;
        p.tYears = j * h;
        const auto& flags = result.exercise[static_cast<std::size_t>(j)];
        for (int k = j; k >= 0; --k) {
            if (flags[static_cast<std::size_t>(k)]) {
                p.xWalk = node_walk(spec, h, j, k);
                p.stock = node_stock(m, spec, j, k);
                break;
            }
        }
        curve.push_back(p);
    }
    return curve;
}

double discrete_generator(const GridFunction& v, const MarketModel& m, const LatticeSpec& spec,
                          int j, int k)
{
    if (j < 0 || j >= spec.n) throw std::out_of_range("discrete_generator: step outside [0, n)");
    if (k < 0 || k > j) throw std::out_of_range("discrete_generator: node outside [0, step]");
    const StepRule rule = make_rule(m, spec);
    return rule.pUp * v(j + 1, k + 1) + rule.pDown * v(j + 1, k) - v(j, k);
}

double walk_boundary(const MarketModel& m, const LogBoundary& btilde, double t)
{
    const double b = btilde.at(m.t - t);
    if (std::isinf(b)) return b;
    return (b - m.mu() * t - std::log(m.s0)) / m.sigma;
}

StoppingValue stopping_rule_value(const MarketModel& m, const LatticeSpec& spec, const LogBoundary& btilde)
{
    if (spec.n < 3) throw std::invalid_argument("stopping_rule_value: n must be >= 3");
    if (spec.scheme != Scheme::PaperWalk)
        throw std::invalid_argument("stopping_rule_value: only the PaperWalk scheme is supported");
    m.validate();
    const int n = spec.n;
    const double h = spec.h(m);
    const double sqrtH = std::sqrt(h);
    const double slack = sqrtH * spec.xInf + std::abs(m.mu0()) * h;

    StoppingValue out;
    std::vector<double> mass(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> next(mass.size(), 0.0);
    mass[0] = 1.0;
    for (int j = 0; j < n; ++j) {
        if (j <= n - 2) {
            const double t = j * h;
            const double barrier = walk_boundary(m, btilde, t + h) + slack;
            const double discount = std::exp(-m.r * t);
            const double weight = 1.0 / std::sqrt(m.t - t - h);
            for (int k = 0; k <= j; ++k) {
                auto& p = mass[static_cast<std::size_t>(k)];
                if (p == 0.0) continue;
                const double x = (2 * k - j) * sqrtH;
                if (x <= barrier) {
                    out.value += p * discount * payoff_g(m, m.mu0() * t + x);
                    out.tailExpectation += p * weight;
                    p = 0.0;
                }
            }
        }
        std::fill(next.begin(), next.begin() + j + 2, 0.0);
        for (int k = 0; k <= j; ++k) {
            const double half = 0.5 * mass[static_cast<std::size_t>(k)];
            next[static_cast<std::size_t>(k)] += half;
            next[static_cast<std::size_t>(k) + 1] += half;
        }
        std::swap(mass, next);
    }
    const double discount = std::exp(-m.r * m.t);
    for (int k = 0; k <= n; ++k) {
        const double p = mass[static_cast<std::size_t>(k)];
        if (p == 0.0) continue;
        out.value += p * discount * payoff_g(m, m.mu0() * m.t + (2 * k - n) * sqrtH);
    }
    return out;
}

}  // namespace amput
