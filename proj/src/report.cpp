#include "amput/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "amput/format.hpp"

namespace amput {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

void finish(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_json(const nlohmann::json& j, const std::string& path)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

struct Series {
    std::string name;
    std::string colour;
    std::vector<std::pair<double, double>> points;  // positive (x, y), plotted log-log
};

void write_loglog_svg(const std::string& path, const std::string& title, const std::string& yLabel,
                      const std::vector<Series>& series)
{
    constexpr double width = 640, height = 420, margin = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, std::log10(x));
            x1 = std::max(x1, std::log10(x));
            y0 = std::min(y0, std::log10(y));
            y1 = std::max(y1, std::log10(y));
        }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    auto px = [&](double x) { return margin + (std::log10(x) - x0) / (x1 - x0) * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - (std::log10(y) - y0) / (y1 - y0) * (height - 2 * margin); };

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<title>" << title << "</title>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
        << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">n (log scale)</text>\n";
    out << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
        << ")\" text-anchor=\"middle\">" << yLabel << "</text>\n";
    double legendY = margin + 15;
    for (const auto& s : series) {
        out << "<polyline data-series=\"" << s.name << "\" fill=\"none\" stroke=\"" << s.colour << "\" points=\"";
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (i) out << ' ';
            out << fmt17(px(s.points[i].first)) << ',' << fmt17(py(s.points[i].second));
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin - 5 << "\" y=\"" << legendY << "\" text-anchor=\"end\" fill=\""
            << s.colour << "\">" << s.name << "</text>\n";
        legendY += 15;
    }
    out << "</svg>\n";
    finish(out, path);
}

nlohmann::json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

ReportFormat parse_format(const std::string& name)
{
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    if (name == "svg") return ReportFormat::Svg;
    throw std::invalid_argument("unknown report format: " + name);
}

nlohmann::json to_json(const ConvergenceReport& report)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"n", r.n}, {"price", r.price}, {"error", r.error}, {"lnn", r.lnn},
                        {"inSlopeFit", r.inSlopeFit}});
    const auto& c = report.reference.certificate;
    return {
        {"model", to_json(report.model)},
        {"rows", rows},
        {"reference",
         {{"price", report.reference.price},
          {"certificate",
           {{"latticePrice", c.latticePrice}, {"pdePrice", c.pdePrice}, {"gap", c.gap}, {"tol", c.tol},
            {"certified", c.certified}}}}},
        {"fits",
         {{"regime", regime_name(report.fit.regime)},
          {"alpha", report.fit.alpha},
          {"alphaBar", report.fit.alphaBar},
          {"slopeLogLog", number_or_null(report.fit.slopeLogLog)},
          {"upperC", report.fit.upperC},
          {"lowerC", report.fit.lowerC},
          {"degenerate", report.fit.degenerate}}},
    };
}

nlohmann::json to_json(const StoppingStudy& study)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : study.rows)
        rows.push_back({{"n", r.n}, {"h", r.h}, {"valueTau", r.valueTau}, {"gapToLattice", r.gapToLattice},
                        {"tailExpectation", r.tailExpectation}, {"lnhBeta", r.lnhBeta}});
    return {{"model", to_json(study.model)},
            {"regime", regime_name(study.regime)},
            {"beta", study.beta},
            {"rows", rows},
            {"gapBandRatio", number_or_null(study.gapBandRatio)},
            {"tailBandRatio", number_or_null(study.tailBandRatio)}};
}

nlohmann::json to_json(const BoundaryFit& fit)
{
    return {{"regime", regime_name(fit.regime)},
            {"btilde0", fit.btilde0},
            {"exponent", fit.exponent},
            {"constant", fit.constant},
            {"windowLo", fit.windowLo},
            {"windowHi", fit.windowHi},
            {"layers", fit.layers},
            {"maxIncrease", fit.maxIncrease},
            {"dx", fit.dx}};
}

void emit_report(const ConvergenceReport& report, ReportFormat format, const std::string& path)
{
    switch (format) {
    case ReportFormat::Csv: {
        auto out = open_out(path);
        out << "n,price,error,lnn\n";
        for (const auto& r : report.rows)
            out << r.n << ',' << fmt17(r.price) << ',' << fmt17(r.error) << ',' << fmt17(r.lnn) << '\n';
        finish(out, path);
        return;
    }
    case ReportFormat::Json:
        write_json(to_json(report), path);
        return;
    case ReportFormat::Svg: {
        std::vector<Series> series;
        if (!report.rows.empty()) {
            Series data{"|error|", "black", {}};
            Series upper{"upper envelope", "firebrick", {}};
            Series lower{"lower envelope", "steelblue", {}};
            const auto& f = report.fit;
            for (const auto& r : report.rows) {
                if (r.error != 0.0) data.points.emplace_back(r.n, std::abs(r.error));
                if (f.upperC > 0.0) upper.points.emplace_back(r.n, f.upperC * std::pow(r.lnn, f.alpha) / r.n);
                if (f.lowerC > 0.0) lower.points.emplace_back(r.n, f.lowerC * std::pow(r.lnn, f.alphaBar) / r.n);
            }
            series = {data, upper, lower};
        }
        write_loglog_svg(path, "lattice error vs n", "|P(n) - P|", series);
        return;
    }
    }
}

void emit_report(const StoppingStudy& study, ReportFormat format, const std::string& path)
{
    switch (format) {
    case ReportFormat::Csv: {
        auto out = open_out(path);
        out << "n,h,valueTau,gapToLattice,tailExpectation,lnhBeta\n";
        for (const auto& r : study.rows)
            out << r.n << ',' << fmt17(r.h) << ',' << fmt17(r.valueTau) << ',' << fmt17(r.gapToLattice) << ','
                << fmt17(r.tailExpectation) << ',' << fmt17(r.lnhBeta) << '\n';
        finish(out, path);
        return;
    }
    case ReportFormat::Json:
        write_json(to_json(study), path);
        return;
    case ReportFormat::Svg: {
        std::vector<Series> series;
        if (!study.rows.empty()) {
            Series gap{"gap n / (ln n)^beta", "firebrick", {}};
            Series tail{"tail / |ln h|^beta", "steelblue", {}};
            for (const auto& r : study.rows) {
                const double g = r.gapToLattice * r.n / std::pow(std::log(r.n), study.beta);
                if (g > 0.0) gap.points.emplace_back(r.n, g);
                const double t = r.tailExpectation / r.lnhBeta;
                if (t > 0.0) tail.points.emplace_back(r.n, t);
            }
            series = {gap, tail};
        }
        write_loglog_svg(path, "stopping rule vs n", "scaled quantity", series);
        return;
    }
    }
}

void emit_report(const BoundaryFit& fit, ReportFormat format, const std::string& path)
{
    switch (format) {
    case ReportFormat::Csv: {
        auto out = open_out(path);
        out << "time_to_maturity,btilde,drop\n";
        for (std::size_t i = 0; i < fit.tau.size(); ++i)
            out << fmt17(fit.tau[i]) << ',' << fmt17(fit.btilde[i]) << ',' << fmt17(fit.btilde0 - fit.btilde[i])
                << '\n';
        finish(out, path);
        return;
    }
    case ReportFormat::Json:
        write_json(to_json(fit), path);
        return;
    case ReportFormat::Svg: {
        std::vector<Series> series;
        if (!fit.tau.empty()) {
            Series drop{"btilde(0) - btilde(t)", "black", {}};
            Series law{"fitted power law", "firebrick", {}};
            for (std::size_t i = 0; i < fit.tau.size(); ++i) {
                const double d = fit.btilde0 - fit.btilde[i];
                if (d > 0.0) drop.points.emplace_back(fit.tau[i], d);
            }
            if (!drop.points.empty()) {
                // power law through the geometric centre of the data
                double lx = 0.0, ly = 0.0;
                for (auto [x, y] : drop.points) {
                    lx += std::log(x);
                    ly += std::log(y);
                }
                lx /= static_cast<double>(drop.points.size());
                ly /= static_cast<double>(drop.points.size());
                for (double x : {drop.points.front().first, drop.points.back().first})
                    law.points.emplace_back(x, std::exp(ly + fit.exponent * (std::log(x) - lx)));
            }
            series = {drop, law};
        }
        write_loglog_svg(path, "boundary near maturity", "btilde(0) - btilde(t)", series);
        return;
    }
    }
}

std::vector<ConvergenceRow> read_convergence_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "n,price,error,lnn") throw std::runtime_error("unexpected convergence CSV header in " + path);
    std::vector<ConvergenceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        ConvergenceRow r;
        std::getline(ss, cell, ',');
        r.n = std::stoi(cell);
        std::getline(ss, cell, ',');
        r.price = std::stod(cell);
        std::getline(ss, cell, ',');
        r.error = std::stod(cell);
        std::getline(ss, cell, ',');
        r.lnn = std::stod(cell);
        rows.push_back(r);
    }
    return rows;
}

void write_lattice_boundary_csv(const std::vector<BoundaryPoint>& curve, const std::string& path)
{
    auto out = open_out(path);
    out << "step,t_years,x_walk,stock_price\n";
    for (const auto& p : curve) {
        out << p.step << ',' << fmt17(p.tYears) << ',';
        if (p.xWalk)
            out << fmt17(*p.xWalk) << ',' << fmt17(*p.stock) << '\n';
        else
            out << "none,none\n";
    }
    finish(out, path);
}

}  // namespace amput
