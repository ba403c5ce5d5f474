#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace amput {

// Black-Scholes market with continuous dividend yield and a put contract.
// Units: rates per year, sigma per sqrt(year), t in years.
struct MarketModel {
    double r = 0.05;
    double d = 0.0;
    double sigma = 0.2;
    double s0 = 100.0;
    double k = 100.0;
    double t = 1.0;

    // drift of the log price: r - d - sigma^2/2
    double mu() const { return r - d - 0.5 * sigma * sigma; }
    // drift in walk units: mu / sigma
    double mu0() const { return mu() / sigma; }

    // Throws std::invalid_argument when r<=0, sigma<=0, t<=0, s0<=0, k<0 or d<0.
    void validate() const;
};

nlohmann::json to_json(const MarketModel& m);
MarketModel model_from_json(const nlohmann::json& j);
MarketModel load_model(const std::string& path);

// g(x) = (K - S0 e^{sigma x})^+ in walk coordinates.
double payoff_g(const MarketModel& m, double x);

// phi(y) = (K - e^y)^+ in log-price coordinates.
double payoff_phi(const MarketModel& m, double logPrice);

// Standard normal cdf.
double normal_cdf(double z);

// Closed-form European put with `remaining` years to expiry. The two-argument
// form prices at S0.
double european_put(const MarketModel& m, double remaining);
double european_put(const MarketModel& m, double remaining, double spot);

}  // namespace amput
