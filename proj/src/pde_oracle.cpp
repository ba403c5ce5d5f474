#include "amput/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "amput/lattice.hpp"

namespace amput {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Coefficients {
    double lower;  // multiplies U[i-1]
    double mid;
    double upper;  // multiplies U[i+1]
};

// Discrete generator A - r on the uniform grid, central differences.
Coefficients generator(const MarketModel& m, double dx)
{
    const double diff = 0.5 * m.sigma * m.sigma / (dx * dx);
    const double conv = 0.5 * m.mu() / dx;
    return {diff - conv, -2.0 * diff - m.r, diff + conv};
}

class Stepper {
public:
    Stepper(const MarketModel& m, const PdeGrid& grid, std::vector<double> x)
        : m_(m), grid_(grid), x_(std::move(x)), op_(generator(m, x_[1] - x_[0]))
    {
        const auto n = x_.size();
        obstacle_.resize(n);
        for (std::size_t i = 0; i < n; ++i) obstacle_[i] = payoff_phi(m, x_[i]);
        rhs_.resize(n);
        c_.resize(n);
        q_.resize(n);
    }

    const std::vector<double>& obstacle() const { return obstacle_; }

    // Advance u from tauOld to tauOld + k with weight theta on the new layer.
    // Returns the max complementarity residual over interior nodes.
    double step(std::vector<double>& u, double tauNew, double k, double theta, long& iterations)
    {
        const int last = static_cast<int>(u.size()) - 1;
        const double explicitW = (1.0 - theta) * k;
        for (int i = 1; i < last; ++i)
            rhs_[i] = u[i] + explicitW * (op_.lower * u[i - 1] + op_.mid * u[i] + op_.upper * u[i + 1]);

        const double sub = -theta * k * op_.lower;
        const double diag = 1.0 - theta * k * op_.mid;
        const double sup = -theta * k * op_.upper;

        u[0] = obstacle_[0];
        u[last] = m_.k > 0.0 ? european_put(m_, tauNew, std::exp(x_[last])) : 0.0;

        if (grid_.solver == LcpSolver::BrennanSchwartz)
            brennan_schwartz(u, sub, diag, sup);
        else
            iterations += psor(u, sub, diag, sup);

        double worst = 0.0;
        for (int i = 1; i < last; ++i) {
            const double lcp = (sub * u[i - 1] + diag * u[i] + sup * u[i + 1] - rhs_[i]) / k;
            const double res = std::min(lcp, u[i] - obstacle_[i]);
            worst = std::max(worst, std::abs(res));
        }
        return worst;
    }

private:
    // Eliminate from the right, then sweep up from the deep exercise end
    // projecting onto the obstacle.
    void brennan_schwartz(std::vector<double>& u, double sub, double diag, double sup)
    {
        const int last = static_cast<int>(u.size()) - 1;
        c_[last - 1] = diag;
        q_[last - 1] = rhs_[last - 1] - sup * u[last];
        for (int i = last - 2; i >= 1; --i) {
            const double ratio = sup / c_[i + 1];
            c_[i] = diag - ratio * sub;
            q_[i] = rhs_[i] - ratio * q_[i + 1];
        }
        for (int i = 1; i < last; ++i)
            u[i] = std::max(obstacle_[i], (q_[i] - sub * u[i - 1]) / c_[i]);
    }

    long psor(std::vector<double>& u, double sub, double diag, double sup)
    {
        const int last = static_cast<int>(u.size()) - 1;
        const double tol = grid_.psorTol * std::max(m_.k, 1.0);
        const double omega = grid_.psorOmega;
        for (long it = 1; it <= grid_.psorMaxIter; ++it) {
            for (int i = 1; i < last; ++i) {
                const double gs = (rhs_[i] - sub * u[i - 1] - sup * u[i + 1]) / diag;
                u[i] = std::max(obstacle_[i], u[i] + omega * (gs - u[i]));
            }
            double residual = 0.0;
            for (int i = 1; i < last; ++i) {
                const double lcp = sub * u[i - 1] + diag * u[i] + sup * u[i + 1] - rhs_[i];
                residual = std::max(residual, std::abs(std::min(lcp, u[i] - obstacle_[i])));
            }
            if (residual <= tol) return it;
        }
        throw std::runtime_error("solve_vi: PSOR did not converge in " + std::to_string(grid_.psorMaxIter)
                                 + " sweeps; check the grid configuration");
    }

    const MarketModel& m_;
    const PdeGrid& grid_;
    std::vector<double> x_;
    Coefficients op_;
    std::vector<double> obstacle_;
    std::vector<double> rhs_;
    std::vector<double> c_;
    std::vector<double> q_;
};

struct BoundaryLocation {
    double btilde = kNaN;
    double slope = kNaN;
};

// Last obstacle node below ln K, refined with the quadratic contact of U - phi:
// sqrt(U - phi) is linear in x near the boundary, so the line through the first
// two continuation nodes is extended to its root (kept within one dx of the
// contact node).
BoundaryLocation locate_boundary(const MarketModel& m, const std::vector<double>& u,
                                 const std::vector<double>& obstacle, double xMin, double dx)
{
    BoundaryLocation loc;
    if (m.k == 0.0) return loc;
    const double tol = 1e-10 * m.k;
    const double lnK = std::log(m.k);
    const int n = static_cast<int>(u.size());
    int edge = -1;
    for (int i = 0; i < n && xMin + i * dx < lnK; ++i)
        if (u[i] - obstacle[i] <= tol) edge = i;
    if (edge < 0 || edge + 2 >= n) return loc;

    const double xe = xMin + edge * dx;
    const double s1 = std::sqrt(std::max(u[edge + 1] - obstacle[edge + 1], 0.0));
    const double s2 = std::sqrt(std::max(u[edge + 2] - obstacle[edge + 2], 0.0));
    double b = xe;
    if (s2 > s1) b = std::clamp(xe + dx - s1 * dx / (s2 - s1), xe - dx, xe + dx);
    loc.btilde = b;
    loc.slope = (u[edge + 2] - u[edge + 1]) / dx;
    return loc;
}

}  // namespace

void PdeGrid::validate() const
{
    if (m < 200) throw std::invalid_argument("solve_vi: M must be >= 200");
    if (nt < 200) throw std::invalid_argument("solve_vi: N_t must be >= 200");
    if (width < 5.0) throw std::invalid_argument("solve_vi: width must be >= 5");
    if (rannacherSteps < 0 || rannacherSteps % 2 != 0)
        throw std::invalid_argument("solve_vi: rannacherSteps must be a non-negative even number");
    if (!(psorOmega > 0.0 && psorOmega < 2.0)) throw std::invalid_argument("solve_vi: omega must be in (0,2)");
}

double PdeSolution::at_node(int layer, int i) const
{
    if (surface.empty()) throw std::logic_error("PdeSolution: surface not retained");
    return surface[static_cast<std::size_t>(layer) * static_cast<std::size_t>(m() + 1) + static_cast<std::size_t>(i)];
}

LogBoundary PdeSolution::boundary() const
{
    LogBoundary b;
    b.timeToMaturity.resize(btilde.size());
    for (std::size_t l = 0; l < btilde.size(); ++l) b.timeToMaturity[l] = tau(static_cast<int>(l));
    b.btilde = btilde;
    return b;
}

double PdeSolution::price() const
{
    const double pos = (std::log(params.s0) - xMin) / dx;
    return finalLayer[static_cast<std::size_t>(std::lround(pos))];
}

PdeSolution solve_vi(const MarketModel& m, const PdeGrid& grid)
{
    m.validate();
    grid.validate();

    PdeSolution sol;
    sol.params = m;
    sol.grid = grid;
    const int M = grid.m;
    const int N = grid.nt;

    // Domain around ln K (ln S0 when K = 0), widened to contain ln S0, then
    // shifted so that ln S0 falls on a node.
    const double lnS0 = std::log(m.s0);
    const double centre = m.k > 0.0 ? std::log(m.k) : lnS0;
    const double half = grid.width * m.sigma * std::sqrt(m.t);
    double lo = std::min(centre - half, lnS0 - 0.25 * half);
    double hi = std::max(centre + half, lnS0 + 0.25 * half);
    sol.dx = (hi - lo) / M;
    const double offset = (lnS0 - lo) / sol.dx;
    lo += (offset - std::round(offset)) * sol.dx;
    sol.xMin = lo;
    sol.dt = m.t / N;

    std::vector<double> x(static_cast<std::size_t>(M) + 1);
    for (int i = 0; i <= M; ++i) x[static_cast<std::size_t>(i)] = sol.x(i);

    Stepper stepper(m, grid, x);
    std::vector<double> u = stepper.obstacle();

    sol.btilde.assign(static_cast<std::size_t>(N) + 1, kNaN);
    sol.continuationSlope.assign(static_cast<std::size_t>(N) + 1, kNaN);
    if (grid.keepSurface) {
        sol.surface.reserve(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(M + 1));
        sol.surface.insert(sol.surface.end(), u.begin(), u.end());
    }

    const int halfSteps = grid.rannacherSteps;
    const int implicitLayers = std::min(halfSteps / 2, N);
    for (int layer = 1; layer <= N; ++layer) {
        const double tauNew = sol.tau(layer);
        double res = 0.0;
        if (layer <= implicitLayers) {
            const double k = 0.5 * sol.dt;
            res = std::max(res, stepper.step(u, tauNew - k, k, 1.0, sol.iterations));
            res = std::max(res, stepper.step(u, tauNew, k, 1.0, sol.iterations));
        } else {
            res = stepper.step(u, tauNew, sol.dt, 0.5, sol.iterations);
        }
        sol.maxComplementarityResidual = std::max(sol.maxComplementarityResidual, res);

        const auto loc = locate_boundary(m, u, stepper.obstacle(), sol.xMin, sol.dx);
        sol.btilde[static_cast<std::size_t>(layer)] = loc.btilde;
        sol.continuationSlope[static_cast<std::size_t>(layer)] = loc.slope;
        if (grid.keepSurface) sol.surface.insert(sol.surface.end(), u.begin(), u.end());
    }
    sol.finalLayer = std::move(u);
    return sol;
}

double value_at(const PdeSolution& sol, double timeToMaturity, double x)
{
    if (sol.surface.empty()) throw std::logic_error("value_at: surface not retained (set keepSurface)");
    const double xMax = sol.x(sol.m());
    const double T = sol.params.t;
    if (!(timeToMaturity >= 0.0 && timeToMaturity <= T) || !(x >= sol.xMin && x <= xMax))
        throw std::out_of_range("value_at: point outside the solution grid");
    if (timeToMaturity == 0.0) return payoff_phi(sol.params, x);

    // snap coordinates that sit on a node up to rounding
    const auto snap = [](double f) { return std::abs(f - std::round(f)) < 1e-9 ? std::round(f) : f; };
    const double ft = std::min(snap(timeToMaturity / sol.dt), static_cast<double>(sol.nt()));
    const double fx = std::min(snap((x - sol.xMin) / sol.dx), static_cast<double>(sol.m()));
    const int l = std::min(static_cast<int>(ft), sol.nt() - 1);
    const int i = std::min(static_cast<int>(fx), sol.m() - 1);
    const double wt = ft - l;
    const double wx = fx - i;
    const double v00 = sol.at_node(l, i);
    const double v01 = sol.at_node(l, i + 1);
    const double v10 = sol.at_node(l + 1, i);
    const double v11 = sol.at_node(l + 1, i + 1);
    return (1 - wt) * ((1 - wx) * v00 + wx * v01) + wt * ((1 - wx) * v10 + wx * v11);
}

SmoothFit smooth_fit_check(const PdeSolution& sol, double tauLo, double tauHi)
{
    SmoothFit fit;
    for (int l = 1; l <= sol.nt(); ++l) {
        const double tau = sol.tau(l);
        if (tau < tauLo - 1e-12 || tau > tauHi + 1e-12) continue;
        const double b = sol.btilde[static_cast<std::size_t>(l)];
        const double slope = sol.continuationSlope[static_cast<std::size_t>(l)];
        if (std::isnan(b) || std::isnan(slope)) continue;
        const double eb = std::exp(b);
        const double dev = std::abs(slope + eb);
        fit.maxAbs = std::max(fit.maxAbs, dev);
        fit.maxRel = std::max(fit.maxRel, dev / eb);
        ++fit.layers;
    }
    return fit;
}

SmoothFit smooth_fit_check(const PdeSolution& sol)
{
    return smooth_fit_check(sol, 0.05 * sol.params.t, sol.params.t);
}

ReferencePrice reference_price(const MarketModel& m, double tol, const ReferenceConfig& cfg)
{
    m.validate();
    if (tol < 1e-6 * m.k) throw std::invalid_argument("reference_price: tol must be >= 1e-6 K");

    auto averaged = [&](int n) {
        LatticeSpec spec;
        spec.n = n;
        const double a = price_american(m, spec).price;
        spec.n = n + 1;
        return 0.5 * (a + price_american(m, spec).price);
    };
    const double coarse = averaged(cfg.latticeN);
    const double fine = averaged(2 * cfg.latticeN);
    const double latticeExtrap = 2.0 * fine - coarse;

    PdeGrid grid;
    grid.m = cfg.pdeM;
    grid.nt = cfg.pdeNt;
    const double p1 = solve_vi(m, grid).price();
    grid.nt = 2 * cfg.pdeNt;
    const double p2 = solve_vi(m, grid).price();
    const double pdeExtrap = (4.0 * p2 - p1) / 3.0;

    ReferencePrice ref;
    ref.price = pdeExtrap;
    ref.certificate.latticePrice = latticeExtrap;
    ref.certificate.pdePrice = pdeExtrap;
    ref.certificate.gap = std::abs(latticeExtrap - pdeExtrap);
    ref.certificate.tol = tol;
    ref.certificate.certified = ref.certificate.gap <= tol;
    return ref;
}

}  // namespace amput
