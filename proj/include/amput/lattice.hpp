#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "amput/boundary.hpp"
#include "amput/model.hpp"

namespace amput {

enum class Scheme {
    PaperWalk,    // driftless +-1 walk, drift carried by the payoff g(mu0 t + x)
    RiskNeutral,  // multiplicative tree with risk-neutral up probability
};

struct LatticeSpec {
    int n = 1;
    Scheme scheme = Scheme::PaperWalk;
    // sup norm of the step distribution; 1 for the +-1 walk
    double xInf = 1.0;
    // retain per-node exercise flags (needed by extract_boundary)
    bool keepExercise = false;
    // retain every value layer (diagnostics, discrete generator checks)
    bool keepValues = false;

    double h(const MarketModel& m) const { return m.t / n; }
};

// Node k at step j sits at walk coordinate (2k - j) sqrt(h), k = 0..j.
struct LatticeResult {
    double price = 0.0;
    // largest exercising node per step 0..n, empty when no node exercises
    std::vector<std::optional<int>> boundaryIndex;
    // stock price at boundaryIndex, NaN when empty
    std::vector<double> boundaryStock;
    std::vector<std::vector<bool>> exercise;  // [step][node], if requested
    std::vector<std::vector<double>> values;  // [step][node], if requested
};

struct BoundaryPoint {
    int step = 0;
    double tYears = 0.0;
    std::optional<double> xWalk;
    std::optional<double> stock;
};

LatticeResult price_american(const MarketModel& m, const LatticeSpec& spec);
double price_european_on_lattice(const MarketModel& m, const LatticeSpec& spec);

// Walk coordinate and stock price of node k at step j.
double node_walk(const LatticeSpec& spec, double h, int j, int k);
double node_stock(const MarketModel& m, const LatticeSpec& spec, int j, int k);

// Boundary per step j < n from retained exercise flags; throws
// std::invalid_argument when the result holds no flags.
std::vector<BoundaryPoint> extract_boundary(const MarketModel& m, const LatticeSpec& spec,
                                            const LatticeResult& result);

using GridFunction = std::function<double(int step, int node)>;

// One-step expected increment E[v(j+1, x + sqrt(h) X)] - v(j, x) at node k of
// step j. Throws std::out_of_range for j outside [0, n) or k outside [0, j].
double discrete_generator(const GridFunction& v, const MarketModel& m, const LatticeSpec& spec,
                          int j, int k);

struct StoppingValue {
    double value = 0.0;
    // E[(T - tau - h)^{-1/2} 1{tau <= T - 2h}]
    double tailExpectation = 0.0;
};

// Walk-coordinate boundary hat b(t) = (btilde(T - t) - mu t - ln S0) / sigma.
double walk_boundary(const MarketModel& m, const LogBoundary& btilde, double t);

// Exact value of the stopping time that stops at the first grid time t <= T - 2h
// where the walk is within sqrt(h) xInf + |mu0| h of (-inf, hat b(t + h)],
// and at T otherwise. Requires n >= 3 and the PaperWalk scheme.
StoppingValue stopping_rule_value(const MarketModel& m, const LatticeSpec& spec,
                                  const LogBoundary& btilde);

}  // namespace amput
