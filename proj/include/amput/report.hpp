#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "amput/lattice.hpp"
#include "amput/study.hpp"

namespace amput {

enum class ReportFormat { Csv, Json, Svg };

ReportFormat parse_format(const std::string& name);

nlohmann::json to_json(const ConvergenceReport& report);
nlohmann::json to_json(const StoppingStudy& study);
nlohmann::json to_json(const BoundaryFit& fit);

// Writes the report; std::runtime_error carries the I/O failure.
// CSV columns: n,price,error,lnn. SVG: log-log |error| vs n with the two
// fitted envelopes, one polyline per series.
void emit_report(const ConvergenceReport& report, ReportFormat format, const std::string& path);
// CSV columns: n,h,valueTau,gapToLattice,tailExpectation,lnhBeta.
void emit_report(const StoppingStudy& study, ReportFormat format, const std::string& path);
// CSV columns: time_to_maturity,btilde,drop.
void emit_report(const BoundaryFit& fit, ReportFormat format, const std::string& path);

std::vector<ConvergenceRow> read_convergence_csv(const std::string& path);

// step,t_years,x_walk,stock_price; "none" where no node exercises.
void write_lattice_boundary_csv(const std::vector<BoundaryPoint>& curve, const std::string& path);

}  // namespace amput
