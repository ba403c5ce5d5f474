// amput: binomial American put pricing, PDE reference oracle, early exercise
// premium and convergence studies.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amput/format.hpp"
#include "amput/lattice.hpp"
#include "amput/model.hpp"
#include "amput/parallel.hpp"
#include "amput/pde_oracle.hpp"
#include "amput/premium.hpp"
#include "amput/report.hpp"
#include "amput/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_schedule(const std::string& text)
{
    if (text.empty()) return amput::default_schedule();
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

struct Failures {
    std::vector<std::string> items;
    void check(bool ok, const std::string& what)
    {
        if (!ok) items.push_back(what);
    }
};

int finish(json summary, const Failures& f)
{
    summary["ok"] = f.items.empty();
    summary["failures"] = f.items;
    std::cout << summary.dump(2) << '\n';
    return f.items.empty() ? 0 : 2;
}

void emit_all(const auto& report, const fs::path& dir, const std::string& stem)
{
    amput::emit_report(report, amput::ReportFormat::Csv, (dir / (stem + ".csv")).string());
    amput::emit_report(report, amput::ReportFormat::Json, (dir / (stem + ".json")).string());
    amput::emit_report(report, amput::ReportFormat::Svg, (dir / (stem + ".svg")).string());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Binomial approximation of the American put"};
    app.require_subcommand(1);

    std::string modelPath;

    // price
    auto* price = app.add_subcommand("price", "lattice price P(n)");
    int n = 0;
    std::string scheme = "paper";
    std::string latticeBoundaryOut;
    price->add_option("--model", modelPath, "model JSON")->required()->check(CLI::ExistingFile);
    price->add_option("--n", n, "number of periods")->required();
    price->add_option("--scheme", scheme, "paper|rn")->check(CLI::IsMember({"paper", "rn"}));
    price->add_option("--boundary-out", latticeBoundaryOut, "exercise boundary CSV");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "finite-difference variational inequality solver");
    amput::PdeGrid grid;
    std::string surfaceOut, oracleBoundaryOut;
    oracle->add_option("--model", modelPath, "model JSON")->required()->check(CLI::ExistingFile);
    oracle->add_option("--m", grid.m, "space intervals");
    oracle->add_option("--nt", grid.nt, "time steps");
    oracle->add_option("--surface-out", surfaceOut, "value surface CSV");
    oracle->add_option("--boundary-out", oracleBoundaryOut, "boundary CSV");

    // premium
    auto* premium = app.add_subcommand("premium", "early exercise premium from an oracle boundary");
    std::string boundaryIn;
    int resolution = 64;
    double premiumTol = -1.0;
    premium->add_option("--model", modelPath, "model JSON")->required()->check(CLI::ExistingFile);
    premium->add_option("--boundary", boundaryIn, "boundary CSV from `oracle`")->required()->check(CLI::ExistingFile);
    premium->add_option("--resolution", resolution, "Gauss-Legendre panels");
    premium->add_option("--tol", premiumTol, "reference certification tolerance (default 2e-6 K)");

    // study
    auto* study = app.add_subcommand("study", "convergence and boundary studies");
    study->require_subcommand(1);
    std::string outDir, scheduleText;
    int studyM = 4000, studyNt = 4000;
    double studyTol = -1.0;
    auto addCommon = [&](CLI::App* sub) {
        sub->add_option("--model", modelPath, "model JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", outDir, "output directory")->required();
        sub->add_option("--schedule", scheduleText, "comma-separated n values");
    };
    auto* converge = study->add_subcommand("converge", "P(n) - P against a certified reference");
    addCommon(converge);
    converge->add_option("--tol", studyTol, "reference tolerance (default 1e-6 K)");
    auto* stopping = study->add_subcommand("stopping", "lower-bound stopping rule");
    addCommon(stopping);
    stopping->add_option("--m", studyM, "oracle space intervals");
    stopping->add_option("--nt", studyNt, "oracle time steps");
    auto* boundary = study->add_subcommand("boundary", "exercise boundary near maturity");
    addCommon(boundary);
    boundary->add_option("--m", studyM, "oracle space intervals");
    boundary->add_option("--nt", studyNt, "oracle time steps");

    CLI11_PARSE(app, argc, argv);

    try {
        const amput::MarketModel model = amput::load_model(modelPath);
        const int threads = amput::thread_count();

        if (*price) {
            amput::LatticeSpec spec;
            spec.n = n;
            spec.scheme = scheme == "rn" ? amput::Scheme::RiskNeutral : amput::Scheme::PaperWalk;
            spec.keepExercise = !latticeBoundaryOut.empty();
            const auto res = amput::price_american(model, spec);
            if (!latticeBoundaryOut.empty())
                amput::write_lattice_boundary_csv(amput::extract_boundary(model, spec, res), latticeBoundaryOut);
            json out{{"n", n}, {"scheme", scheme}, {"price", res.price},
                     {"european", amput::price_european_on_lattice(model, spec)}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }

        if (*oracle) {
            grid.keepSurface = !surfaceOut.empty();
            const auto sol = amput::solve_vi(model, grid);
            if (!oracleBoundaryOut.empty()) amput::write_boundary_csv(sol.boundary(), oracleBoundaryOut);
            if (!surfaceOut.empty()) {
                std::ofstream out(surfaceOut);
                if (!out) throw std::runtime_error("cannot open for writing: " + surfaceOut);
                out << "time_to_maturity,x_log,value\n";
                for (int l = 0; l <= sol.nt(); ++l)
                    for (int i = 0; i <= sol.m(); ++i)
                        out << amput::fmt17(sol.tau(l)) << ',' << amput::fmt17(sol.x(i)) << ','
                            << amput::fmt17(sol.at_node(l, i)) << '\n';
                if (!out) throw std::runtime_error("write failed: " + surfaceOut);
            }
            const auto fit = amput::smooth_fit_check(sol);
            json out{{"price", sol.price()},
                     {"m", sol.m()},
                     {"nt", sol.nt()},
                     {"dx", sol.dx},
                     {"dt", sol.dt},
                     {"maxComplementarityResidual", sol.maxComplementarityResidual},
                     {"smoothFitMaxAbs", fit.maxAbs},
                     {"smoothFitMaxRel", fit.maxRel}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }

        if (*premium) {
            amput::PremiumInput in{model, amput::read_boundary_csv(boundaryIn), resolution};
            const double prem = amput::premium_quadrature(in, model.t, std::log(model.s0));
            const double eu = amput::european_put(model, model.t);
            const double tol = premiumTol > 0.0 ? premiumTol : 2e-6 * model.k;
            const auto ref = amput::reference_price(model, std::max(tol, 1e-6 * model.k));
            json out{{"premium", prem},
                     {"european", eu},
                     {"american", eu + prem},
                     {"reference", ref.price},
                     {"certified", ref.certificate.certified},
                     {"gap", eu + prem - ref.price}};
            std::cout << out.dump(2) << '\n';
            return ref.certificate.certified ? 0 : 2;
        }

        fs::create_directories(outDir);
        const auto schedule = parse_schedule(scheduleText);
        Failures failures;

        if (*converge) {
            const double tol = studyTol > 0.0 ? studyTol : 1e-6 * model.k;
            amput::ConvergenceOptions opts;
            opts.threads = threads;
            amput::ConvergenceReport report;
            try {
                report = amput::run_convergence(model, schedule, std::max(tol, 1e-6 * model.k), opts);
            } catch (const std::runtime_error& e) {
                failures.check(false, std::string("reference: ") + e.what());
                return finish(json{{"command", "study converge"}}, failures);
            }
            emit_all(report, outDir, "convergence");
            for (std::size_t i = 1; i < report.rows.size(); ++i)
                failures.check(report.rows[i].n > report.rows[i - 1].n, "rows not strictly increasing");
            if (!report.fit.degenerate) {
                const auto ext = amput::check_envelope_extension(report.rows, report.fit.regime, report.rows.size() / 2);
                failures.check(ext.ok, "envelope constants from the first half exceeded by more than x1.5");
            }
            return finish(json{{"command", "study converge"}, {"report", amput::to_json(report)}}, failures);
        }

        const amput::PdeSolution sol = [&] {
            amput::PdeGrid g;
            g.m = studyM;
            g.nt = studyNt;
            return amput::solve_vi(model, g);
        }();
        amput::write_boundary_csv(sol.boundary(), (fs::path(outDir) / "oracle_boundary.csv").string());

        if (*stopping) {
            const auto s = amput::run_stopping_study(model, schedule, sol.boundary(), threads);
            emit_all(s, outDir, "stopping");
            for (const auto& row : s.rows)
                failures.check(row.gapToLattice >= -1e-12 * model.k,
                               "stopping value exceeds lattice price at n=" + std::to_string(row.n));
            failures.check(s.gapBandRatio <= 10.0, "gap n/(ln n)^beta band ratio > 10");
            failures.check(s.tailBandRatio <= 10.0, "tail/|ln h|^beta band ratio > 10");
            return finish(json{{"command", "study stopping"}, {"study", amput::to_json(s)}}, failures);
        }

        const auto fit = amput::run_boundary_asymptotics(model, sol);
        emit_all(fit, outDir, "boundary_fit");
        failures.check(fit.maxIncrease <= fit.dx, "oracle boundary increases by more than dx");
        return finish(json{{"command", "study boundary"}, {"fit", amput::to_json(fit)}}, failures);
    } catch (const std::exception& e) {
        std::cerr << "amput: " << e.what() << '\n';
        return 1;
    }
}
