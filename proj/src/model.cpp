#include "amput/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace amput {

void MarketModel::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid market model: ") + what);
    };
    require(std::isfinite(r) && r > 0.0, "r must be > 0");
    require(std::isfinite(d) && d >= 0.0, "d must be >= 0");
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
    require(std::isfinite(s0) && s0 > 0.0, "s0 must be > 0");
    require(std::isfinite(k) && k >= 0.0, "k must be >= 0");
    require(std::isfinite(t) && t > 0.0, "t must be > 0");
}

nlohmann::json to_json(const MarketModel& m)
{
    return nlohmann::json{{"r", m.r}, {"d", m.d}, {"sigma", m.sigma},
                          {"s0", m.s0}, {"k", m.k}, {"t", m.t}};
}

MarketModel model_from_json(const nlohmann::json& j)
{
    MarketModel m;
    m.r = j.at("r").get<double>();
    m.d = j.at("d").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.s0 = j.at("s0").get<double>();
    m.k = j.at("k").get<double>();
    m.t = j.at("t").get<double>();
    m.validate();
    return m;
}

MarketModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

double payoff_g(const MarketModel& m, double x)
{
    return std::max(m.k - m.s0 * std::exp(m.sigma * x), 0.0);
}

double payoff_phi(const MarketModel& m, double logPrice)
{
    return std::max(m.k - std::exp(logPrice), 0.0);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

double european_put(const MarketModel& m, double remaining)
{
    return european_put(m, remaining, m.s0);
}

double european_put(const MarketModel& m, double remaining, double spot)
{
    if (!(remaining > 0.0)) throw std::invalid_argument("european_put: remaining must be > 0");
    if (m.k == 0.0) return 0.0;
    const double vol = m.sigma * std::sqrt(remaining);
    const double d1 = (std::log(spot / m.k) + (m.r - m.d + 0.5 * m.sigma * m.sigma) * remaining) / vol;
    const double d2 = d1 - vol;
    const double value = m.k * std::exp(-m.r * remaining) * normal_cdf(-d2)
                       - spot * std::exp(-m.d * remaining) * normal_cdf(-d1);
    return std::max(value, 0.0);
}

}  // namespace amput
