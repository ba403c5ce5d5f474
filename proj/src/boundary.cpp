#include "amput/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "amput/format.hpp"

namespace amput {

double LogBoundary::at(double tau) const
{
    const auto n = timeToMaturity.size();
    std::size_t first = n, last = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(btilde[i])) {
            if (first == n) first = i;
            last = i;
        }
    }
    if (first == n) return -std::numeric_limits<double>::infinity();
    if (tau <= timeToMaturity[first]) return btilde[first];
    if (tau >= timeToMaturity[last]) return btilde[last];

    auto it = std::upper_bound(timeToMaturity.begin(), timeToMaturity.end(), tau);
    std::size_t hi = static_cast<std::size_t>(it - timeToMaturity.begin());
    std::size_t lo = hi - 1;
    while (std::isnan(btilde[lo])) --lo;
    while (std::isnan(btilde[hi])) ++hi;
    const double w = (tau - timeToMaturity[lo]) / (timeToMaturity[hi] - timeToMaturity[lo]);
    return btilde[lo] + w * (btilde[hi] - btilde[lo]);
}

LogBoundary LogBoundary::never(double horizon)
{
    const double none = std::numeric_limits<double>::quiet_NaN();
    return LogBoundary{{0.0, horizon}, {none, none}};
}

void write_boundary_csv(const LogBoundary& b, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "time_to_maturity,btilde_log,b_stock\n";
    for (std::size_t i = 0; i < b.timeToMaturity.size(); ++i) {
        out << fmt17(b.timeToMaturity[i]) << ',';
        if (std::isnan(b.btilde[i]))
            out << "none,none\n";
        else
            out << fmt17(b.btilde[i]) << ',' << fmt17(std::exp(b.btilde[i])) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

LogBoundary read_boundary_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open boundary file: " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("time_to_maturity,btilde_log", 0) != 0)
        throw std::runtime_error("unexpected boundary CSV header in " + path);
    LogBoundary b;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tau, bt;
        std::getline(ss, tau, ',');
        std::getline(ss, bt, ',');
        b.timeToMaturity.push_back(std::stod(tau));
        b.btilde.push_back(bt == "none" ? std::numeric_limits<double>::quiet_NaN() : std::stod(bt));
    }
    for (std::size_t i = 1; i < b.timeToMaturity.size(); ++i)
        if (!(b.timeToMaturity[i] > b.timeToMaturity[i - 1]))
            throw std::runtime_error("boundary times must be strictly increasing in " + path);
    return b;
}

}  // namespace amput
