#include "amput/premium.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace amput {

double generator_on_payoff(const MarketModel& m, double x)
{
    if (m.k == 0.0) return 0.0;
    if (x > std::log(m.k)) return 0.0;
    return m.d * std::exp(x) - m.r * m.k;
}

double gamma_of_t(const MarketModel& m, const LogBoundary& boundary, double t)
{
    if (!(t > 0.0 && t <= m.t)) throw std::invalid_argument("gamma_of_t: t must be in (0, T]");
    return -generator_on_payoff(m, boundary.at(t));
}

namespace {

// Discounted Gaussian average of the exercise-region source over one slice:
// e^{-r lag} E[(r K - d e^Y) 1{Y <= b}], Y ~ N(x + mu lag, sigma^2 lag).
double slice_integrand(const MarketModel& m, double x, double b, double lag)
{
    if (std::isinf(b) && b < 0.0) return 0.0;
    if (lag <= 0.0) return x <= b ? -generator_on_payoff(m, x) : 0.0;
    const double vol = m.sigma * std::sqrt(lag);
    const double z = (b - x - m.mu() * lag) / vol;
    // E[e^Y 1{Y<=b}] = e^{x + (r-d) lag} N(z - vol)
    const double cash = m.r * m.k * std::exp(-m.r * lag) * normal_cdf(z);
    const double asset = m.d * std::exp(x - m.d * lag) * normal_cdf(z - vol);
    return cash - asset;
}

}  // namespace

double premium_quadrature(const PremiumInput& input, double t, double x)
{
    const MarketModel& m = input.model;
    m.validate();
    if (input.panels < 8) throw std::invalid_argument("premium_quadrature: resolution must be >= 8 panels");
    if (!(t > 0.0 && t <= m.t * (1.0 + 1e-12)))
        throw std::invalid_argument("premium_quadrature: t must be in (0, T]");
    if (m.k == 0.0) return 0.0;

    // s = t u^2 absorbs the square-root behaviour of the boundary at s = 0.
    using Rule = boost::math::quadrature::gauss<double, 32>;
    const double width = 1.0 / input.panels;
    double total = 0.0;
    for (int p = 0; p < input.panels; ++p) {
        const double lo = p * width;
        const double hi = lo + width;
        total += Rule::integrate(
            [&](double u) {
                const double s = t * u * u;
                return 2.0 * t * u * slice_integrand(m, x, input.boundary.at(s), t - s);
            },
            lo, hi);
    }
    return total;
}

}  // namespace amput
