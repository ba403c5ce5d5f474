#include "amput/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "amput/lattice.hpp"
#include "amput/parallel.hpp"

namespace amput {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Line {
    double intercept;
    double slope;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

void validate_schedule(const std::vector<int>& schedule, int minN, int maxN)
{
    if (schedule.empty()) throw std::invalid_argument("schedule is empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i] < minN || schedule[i] > maxN)
            throw std::invalid_argument("schedule entry " + std::to_string(schedule[i]) + " outside ["
                                        + std::to_string(minN) + ", " + std::to_string(maxN) + "]");
        if (i > 0 && schedule[i] <= schedule[i - 1])
            throw std::invalid_argument("schedule must be strictly increasing");
    }
}

double upper_scaled(const ConvergenceRow& row, double alpha)
{
    return std::max(row.error, 0.0) * row.n / std::pow(row.lnn, alpha);
}

double lower_scaled(const ConvergenceRow& row, double alphaBar)
{
    return std::max(-row.error, 0.0) * row.n / std::pow(row.lnn, alphaBar);
}

}  // namespace

Regime regime_of(const MarketModel& m)
{
    return m.d > m.r ? Regime::DividendAboveRate : Regime::DividendAtMostRate;
}

const char* regime_name(Regime regime)
{
    return regime == Regime::DividendAboveRate ? "d>r" : "d<=r";
}

RegimeExponents exponents_of(Regime regime)
{
    if (regime == Regime::DividendAboveRate) return {1.0, 1.0, 1.0};
    return {1.25, 1.5, 1.5};
}

std::vector<int> default_schedule()
{
    std::vector<int> s;
    for (int k = 0; k <= 7; ++k) s.push_back(128 << k);
    return s;
}

double band_ratio(const std::vector<double>& values)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool anyZero = false;
    for (double v : values) {
        if (v > 0.0) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        } else {
            anyZero = true;
        }
    }
    if (hi == 0.0) return 1.0;
    if (anyZero) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

EnvelopeFit fit_envelope(std::vector<ConvergenceRow>& rows, Regime regime, double excludeBelow)
{
    const RegimeExponents ex = exponents_of(regime);
    EnvelopeFit fit;
    fit.regime = regime;
    fit.alpha = ex.alpha;
    fit.alphaBar = ex.alphaBar;
    fit.slopeLogLog = kNaN;
    fit.degenerate = std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.error == 0.0; });
    if (fit.degenerate) {
        for (auto& r : rows) r.inSlopeFit = false;
        return fit;
    }

    std::vector<double> x, y;
    for (auto& r : rows) {
        r.inSlopeFit = std::abs(r.error) > excludeBelow;
        if (r.inSlopeFit) {
            x.push_back(r.lnn);
            y.push_back(std::log(std::abs(r.error)));
        }
        fit.upperC = std::max(fit.upperC, upper_scaled(r, ex.alpha));
        fit.lowerC = std::max(fit.lowerC, lower_scaled(r, ex.alphaBar));
    }
    if (x.size() >= 2) fit.slopeLogLog = least_squares(x, y).slope;
    return fit;
}

EnvelopeCheck check_envelope_extension(const std::vector<ConvergenceRow>& rows, Regime regime,
                                       std::size_t split, double factor)
{
    const RegimeExponents ex = exponents_of(regime);
    double upperC = 0.0, lowerC = 0.0;
    for (std::size_t i = 0; i < std::min(split, rows.size()); ++i) {
        upperC = std::max(upperC, upper_scaled(rows[i], ex.alpha));
        lowerC = std::max(lowerC, lower_scaled(rows[i], ex.alphaBar));
    }
    auto ratio = [](double value, double constant) {
        if (value == 0.0) return 0.0;
        return constant > 0.0 ? value / constant : std::numeric_limits<double>::infinity();
    };
    EnvelopeCheck check;
    for (std::size_t i = split; i < rows.size(); ++i) {
        check.worstUpperRatio = std::max(check.worstUpperRatio, ratio(upper_scaled(rows[i], ex.alpha), upperC));
        check.worstLowerRatio = std::max(check.worstLowerRatio, ratio(lower_scaled(rows[i], ex.alphaBar), lowerC));
    }
    check.ok = check.worstUpperRatio <= factor && check.worstLowerRatio <= factor;
    return check;
}

ConvergenceReport run_convergence(const MarketModel& m, const std::vector<int>& schedule, double tol,
                                  const ConvergenceOptions& opts)
{
    m.validate();
    validate_schedule(schedule, 64, 1 << 15);

    ConvergenceReport report;
    report.model = m;
    report.reference = opts.precomputed ? *opts.precomputed : reference_price(m, tol, opts.reference);
    if (!report.reference.certificate.certified) {
        const auto& c = report.reference.certificate;
        throw std::runtime_error("reference certification failed: lattice " + std::to_string(c.latticePrice)
                                 + " vs pde " + std::to_string(c.pdePrice) + ", gap "
                                 + std::to_string(c.gap) + " > tol " + std::to_string(c.tol));
    }

    report.rows.resize(schedule.size());
    parallel_for(schedule.size(), opts.threads, [&](std::size_t i) {
        LatticeSpec spec;
        spec.n = schedule[i];
        ConvergenceRow& row = report.rows[i];
        row.n = spec.n;
        row.price = price_american(m, spec).price;
        row.error = row.price - report.reference.price;
        row.lnn = std::log(static_cast<double>(spec.n));
    });
    report.fit = fit_envelope(report.rows, regime_of(m), 10.0 * tol);
    return report;
}

StoppingStudy run_stopping_study(const MarketModel& m, const std::vector<int>& schedule,
                                 const LogBoundary& boundary, int threads)
{
    m.validate();
    if (boundary.empty()) throw std::invalid_argument("run_stopping_study: oracle boundary is missing");
    validate_schedule(schedule, 3, 1 << 20);

    StoppingStudy study;
    study.model = m;
    study.regime = regime_of(m);
    study.beta = exponents_of(study.regime).beta;
    study.rows.resize(schedule.size());
    parallel_for(schedule.size(), threads, [&](std::size_t i) {
        LatticeSpec spec;
        spec.n = schedule[i];
        const StoppingValue sv = stopping_rule_value(m, spec, boundary);
        const double lattice = price_american(m, spec).price;
        StoppingRow& row = study.rows[i];
        row.n = spec.n;
        row.h = spec.h(m);
        row.valueTau = sv.value;
        row.gapToLattice = lattice - sv.value;
        row.tailExpectation = sv.tailExpectation;
        row.lnhBeta = std::pow(std::abs(std::log(row.h)), study.beta);
    });

    std::vector<double> gaps, tails;
    for (const auto& row : study.rows) {
        gaps.push_back(std::max(row.gapToLattice, 0.0) * row.n / std::pow(std::log(row.n), study.beta));
        tails.push_back(row.tailExpectation / row.lnhBeta);
    }
    study.gapBandRatio = band_ratio(gaps);
    study.tailBandRatio = band_ratio(tails);
    return study;
}

BoundaryFit run_boundary_asymptotics(const MarketModel& m, const PdeSolution& sol, double windowHi)
{
    BoundaryFit fit;
    fit.regime = regime_of(m);
    fit.dx = sol.dx;
    fit.windowLo = sol.dt;
    fit.windowHi = windowHi > 0.0 ? windowHi : 0.1 * m.t;

    double prev = kNaN;
    for (int l = 1; l <= sol.nt(); ++l) {
        const double b = sol.btilde[static_cast<std::size_t>(l)];
        if (!std::isnan(b) && !std::isnan(prev)) fit.maxIncrease = std::max(fit.maxIncrease, b - prev);
        prev = b;
        const double tau = sol.tau(l);
        if (std::isnan(b) || tau > fit.windowHi * (1.0 + 1e-12)) continue;
        fit.tau.push_back(tau);
        fit.btilde.push_back(b);
    }
    fit.layers = static_cast<int>(fit.tau.size());
    if (fit.layers < 10)
        throw std::invalid_argument("run_boundary_asymptotics: fewer than 10 resolvable layers in the window");

    const std::size_t head = std::min<std::size_t>(20, fit.tau.size());
    std::vector<double> root(head), bh(head);
    for (std::size_t i = 0; i < head; ++i) {
        root[i] = std::sqrt(fit.tau[i]);
        bh[i] = fit.btilde[i];
    }
    fit.btilde0 = least_squares(root, bh).intercept;

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < fit.tau.size(); ++i) {
        const double t = fit.tau[i];
        const double drop = fit.btilde0 - fit.btilde[i];
        if (drop <= 0.0) continue;
        lx.push_back(std::log(t));
        ly.push_back(std::log(drop));
        const double scale = fit.regime == Regime::DividendAtMostRate ? std::sqrt(t * std::abs(std::log(t)))
                                                                      : std::sqrt(t);
        fit.constant = std::max(fit.constant, drop / scale);
    }
    if (lx.size() < 10)
        throw std::invalid_argument("run_boundary_asymptotics: fewer than 10 layers below the extrapolated limit");
    fit.exponent = least_squares(lx, ly).slope;
    return fit;
}

}  // namespace amput
