#pragma once

#include "amput/boundary.hpp"
#include "amput/model.hpp"

namespace amput {

struct PremiumInput {
    MarketModel model;
    LogBoundary boundary;  // btilde(s), s = time to maturity
    int panels = 64;       // composite Gauss-Legendre panels, 32 nodes each
};

// (A - r) phi(x): d e^x - r K below ln K (left limit at ln K), 0 above.
double generator_on_payoff(const MarketModel& m, double x);

// gamma(t) = r K - d e^{btilde(t)}. Not clamped: a negative value means the
// boundary lies above r K / d.
double gamma_of_t(const MarketModel& m, const LogBoundary& boundary, double t);

// Early exercise premium at time to maturity t and log price x:
//   int_0^t e^{-r(t-s)} E[(r K - d e^Y) 1{Y <= btilde(s)}] ds,  Y ~ N(x + mu (t-s), sigma^2 (t-s)).
// Throws std::invalid_argument when panels < 8 or t is outside (0, T].
double premium_quadrature(const PremiumInput& input, double t, double x);

}  // namespace amput
