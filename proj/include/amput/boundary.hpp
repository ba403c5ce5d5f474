#pragma once

#include <string>
#include <vector>

namespace amput {

// Exercise boundary in log price as a function of time to maturity.
// NaN entries mark layers without an exercise region.
struct LogBoundary {
    std::vector<double> timeToMaturity;  // strictly increasing
    std::vector<double> btilde;

    bool empty() const { return timeToMaturity.empty(); }

    // Linear interpolation in time to maturity. Outside the sampled range and
    // across NaN entries the nearest defined value is used. Returns -inf when
    // no layer has a boundary.
    double at(double tau) const;

    // Boundary that never triggers exercise, on [0, horizon].
    static LogBoundary never(double horizon);
};

// CSV columns: time_to_maturity, btilde_log, b_stock. Undefined layers are
// written as "none".
void write_boundary_csv(const LogBoundary& b, const std::string& path);
LogBoundary read_boundary_csv(const std::string& path);

}  // namespace amput
