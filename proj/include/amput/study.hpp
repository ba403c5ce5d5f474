#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amput/boundary.hpp"
#include "amput/model.hpp"
#include "amput/pde_oracle.hpp"

namespace amput {

enum class Regime {
    DividendAtMostRate,  // d <= r
    DividendAboveRate,   // d > r
};

Regime regime_of(const MarketModel& m);
const char* regime_name(Regime regime);

// Log-factor exponents of the error bounds for a regime.
struct RegimeExponents {
    double alpha;     // upper bound, (ln n)^alpha / n
    double alphaBar;  // lower bound, (ln n)^alphaBar / n
    double beta;      // tail bound of the stopping rule, |ln h|^beta
};

RegimeExponents exponents_of(Regime regime);

std::vector<int> default_schedule();  // 128 * 2^k, k = 0..7

struct ConvergenceRow {
    int n = 0;
    double price = 0.0;
    double error = 0.0;  // price - reference
    double lnn = 0.0;
    bool inSlopeFit = false;
};

struct EnvelopeFit {
    Regime regime = Regime::DividendAtMostRate;
    double alpha = 0.0;
    double alphaBar = 0.0;
    double slopeLogLog = 0.0;  // NaN when fewer than two rows qualify
    double upperC = 0.0;       // max (error)^+ n / (ln n)^alpha
    double lowerC = 0.0;       // max (-error)^+ n / (ln n)^alphaBar
    bool degenerate = false;   // every error is zero
};

struct ConvergenceReport {
    MarketModel model;
    std::vector<ConvergenceRow> rows;
    ReferencePrice reference;
    EnvelopeFit fit;
};

// OLS slope over rows with |error| > excludeBelow, plus the one-sided
// envelope constants over all rows. Marks rows used in the slope.
EnvelopeFit fit_envelope(std::vector<ConvergenceRow>& rows, Regime regime, double excludeBelow);

struct EnvelopeCheck {
    bool ok = true;
    double worstUpperRatio = 0.0;  // suffix max / prefix constant
    double worstLowerRatio = 0.0;
};

// Constants fitted on rows[0, split) against the rows from split on.
EnvelopeCheck check_envelope_extension(const std::vector<ConvergenceRow>& rows, Regime regime,
                                       std::size_t split, double factor = 1.5);

struct ConvergenceOptions {
    ReferenceConfig reference;
    // reuse an already computed reference instead of solving again
    std::optional<ReferencePrice> precomputed;
    int threads = 1;
};

// Lattice prices (PaperWalk) over the schedule against a certified reference.
// Throws std::runtime_error when the reference cannot be certified at tol.
ConvergenceReport run_convergence(const MarketModel& m, const std::vector<int>& schedule, double tol,
                                  const ConvergenceOptions& opts = {});

struct StoppingRow {
    int n = 0;
    double h = 0.0;
    double valueTau = 0.0;
    double gapToLattice = 0.0;  // P^(n) - valueTau
    double tailExpectation = 0.0;
    double lnhBeta = 0.0;       // |ln h|^beta
};

struct StoppingStudy {
    MarketModel model;
    Regime regime = Regime::DividendAtMostRate;
    double beta = 0.0;
    std::vector<StoppingRow> rows;
    double gapBandRatio = 0.0;   // max/min of gap n / (ln n)^beta
    double tailBandRatio = 0.0;  // max/min of tail / |ln h|^beta
};

// Throws std::invalid_argument when the boundary is empty.
StoppingStudy run_stopping_study(const MarketModel& m, const std::vector<int>& schedule,
                                 const LogBoundary& boundary, int threads = 1);

struct BoundaryFit {
    Regime regime = Regime::DividendAtMostRate;
    double btilde0 = 0.0;  // extrapolated maturity limit
    double exponent = 0.0;
    double constant = 0.0;  // max (b0 - b(t)) / sqrt(t |ln t|) or / sqrt(t)
    double windowLo = 0.0;
    double windowHi = 0.0;
    int layers = 0;
    double maxIncrease = 0.0;  // largest rise of btilde with time to maturity
    double dx = 0.0;
    std::vector<double> tau;
    std::vector<double> btilde;
};

// Fits ln(b0 - btilde(t)) against ln t on t in [dt, windowHi] (default 0.1 T).
// b0 is the intercept of a least-squares line of btilde against sqrt(t) over
// the first 20 layers. Throws std::invalid_argument with fewer than 10 layers.
BoundaryFit run_boundary_asymptotics(const MarketModel& m, const PdeSolution& sol, double windowHi = -1.0);

// Max/min ratio of positive values; 1 for an empty or all-zero sequence and
// +inf when zeros are mixed with positive values.
double band_ratio(const std::vector<double>& values);

}  // namespace amput
