#pragma once

#include <vector>

#include "amput/boundary.hpp"
#include "amput/model.hpp"

namespace amput {

enum class LcpSolver {
    BrennanSchwartz,  // direct sweep; exact when the exercise region is a left half-line
    Psor,             // projected SOR
};

struct PdeGrid {
    int m = 2000;        // space intervals
    int nt = 2000;       // time layers after the initial one
    double width = 8.0;  // half-width of the log-price domain around ln K, in sigma sqrt(T)
    LcpSolver solver = LcpSolver::BrennanSchwartz;
    double psorOmega = 1.5;
    double psorTol = 1e-10;  // relative to K
    int psorMaxIter = 200000;
    int rannacherSteps = 4;  // implicit Euler half steps replacing the first CN steps
    bool keepSurface = false;

    void validate() const;
};

// Solution of the obstacle problem for U(tau, x), tau = time to maturity,
// x = log price, on a uniform grid.
struct PdeSolution {
    MarketModel params;
    PdeGrid grid;
    double xMin = 0.0;
    double dx = 0.0;
    double dt = 0.0;
    std::vector<double> surface;     // (nt+1) x (m+1), row per layer; empty unless keepSurface
    std::vector<double> finalLayer;  // layer nt
    std::vector<double> btilde;      // per layer; NaN where no exercise region (always at layer 0)
    // (U[e+2] - U[e+1]) / dx at the first two continuation nodes past the boundary; NaN if none
    std::vector<double> continuationSlope;
    double maxComplementarityResidual = 0.0;  // over interior nodes and all steps
    long iterations = 0;                      // PSOR sweeps, 0 for the direct solver

    int m() const { return grid.m; }
    int nt() const { return grid.nt; }
    double x(int i) const { return xMin + i * dx; }
    double tau(int layer) const { return layer * dt; }
    double at_node(int layer, int i) const;
    LogBoundary boundary() const;
    // Value at time to maturity T and log price ln S0 (a grid node by construction).
    double price() const;
};

// Crank-Nicolson with Rannacher start; per-step linear complementarity
// problem solved by the configured LCP solver. Throws std::runtime_error if
// PSOR does not converge within psorMaxIter sweeps.
PdeSolution solve_vi(const MarketModel& m, const PdeGrid& grid);

// Bilinear interpolation of the stored surface. Requires keepSurface; throws
// std::out_of_range outside the grid.
double value_at(const PdeSolution& sol, double timeToMaturity, double x);

struct SmoothFit {
    double maxAbs = 0.0;  // max |dU/dx(b+) - phi'(b)|
    double maxRel = 0.0;  // same, divided by e^{b}
    int layers = 0;
};

SmoothFit smooth_fit_check(const PdeSolution& sol, double tauLo, double tauHi);
SmoothFit smooth_fit_check(const PdeSolution& sol);  // tau in [0.05 T, T]

struct Certificate {
    double latticePrice = 0.0;  // extrapolated lattice oracle
    double pdePrice = 0.0;      // extrapolated PDE oracle
    double gap = 0.0;
    double tol = 0.0;
    bool certified = false;
};

struct ReferencePrice {
    double price = 0.0;
    Certificate certificate;
};

struct ReferenceConfig {
    int latticeN = 1 << 15;
    int pdeM = 16000;
    int pdeNt = 4000;
};

// Certified American put price at (T, S0). The PDE extrapolate is returned;
// the certificate holds both oracles and their gap. Requires tol >= 1e-6 K.
ReferencePrice reference_price(const MarketModel& m, double tol, const ReferenceConfig& cfg = {});

}  // namespace amput
