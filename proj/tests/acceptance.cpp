// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "amput/lattice.hpp"
#include "amput/model.hpp"
#include "amput/parallel.hpp"
#include "amput/pde_oracle.hpp"
#include "amput/premium.hpp"
#include "amput/study.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using amput::MarketModel;

namespace {

// 1
constexpr double kCertTolK = 2e-6;
constexpr double kCertSeconds = 60.0;
// 2
constexpr double kConvTolK = 1e-6;
constexpr double kErrorDropFactor = 50.0;
constexpr double kSlopeLo = -1.35, kSlopeHi = -0.75;
constexpr double kEnvelopeFactor = 1.5;
constexpr double kConvSeconds = 120.0;
// 3
constexpr int kBruteMaxN = 12;
constexpr int kBruteModels = 5;
constexpr double kBruteTol = 1e-12;
constexpr double kBruteSeconds = 10.0;
// 4
constexpr int kMartingaleN = 512;
constexpr double kMartingaleTolK = 1e-12;
constexpr int kResidualGrid = 2000;
constexpr double kResidualTolK = 1e-8;
// 5
constexpr int kSmoothM = 4000;
constexpr int kSmoothNt = 2000;
constexpr double kSmoothRel = 5e-2;
constexpr double kSmoothShrinkLo = 1.5, kSmoothShrinkHi = 3.0;
// 6
constexpr double kPremiumTolK = 1e-3;
// 7
constexpr double kStopTolK = 1e-12;
constexpr double kBandRatio = 10.0;
constexpr int kStopEnumN = 12;
constexpr double kStopEnumTol = 1e-12;
// 8
constexpr double kExpLoLow = 0.40, kExpHiLow = 0.62;
constexpr double kExpLoHigh = 0.42, kExpHiHigh = 0.60;
constexpr int kBoundaryLatticeN = 2048;
// oracle grid shared by 6, 7 and 8
constexpr int kOracleM = 4000;
constexpr int kOracleNt = 4000;

MarketModel canonical(double d)
{
    return MarketModel{0.05, d, 0.2, 100.0, 100.0, 1.0};
}

const std::vector<double> kDividends{0.03, 0.08};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v)
{
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

// Results shared between criteria.
struct Cache {
    std::map<double, amput::ReferencePrice> reference;
    std::map<double, std::unique_ptr<amput::PdeSolution>> oracle;

    const amput::PdeSolution& solution(double d)
    {
        auto& slot = oracle[d];
        if (!slot) {
            amput::PdeGrid g;
            g.m = kOracleM;
            g.nt = kOracleNt;
            slot = std::make_unique<amput::PdeSolution>(amput::solve_vi(canonical(d), g));
        }
        return *slot;
    }
};

Outcome criterion1(Cache& cache)
{
    Outcome o;
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        const auto start = std::chrono::steady_clock::now();
        const auto ref = amput::reference_price(m, kCertTolK * m.k);
        const double secs = seconds_since(start);
        cache.reference[d] = ref;
        o.require(ref.certificate.certified, "d=" + num(d) + " gap " + num(ref.certificate.gap) + " <= "
                                                 + num(kCertTolK * m.k) + " (P=" + num(ref.price) + ")");
        o.require(secs <= kCertSeconds, num(secs) + "s");
    }
    return o;
}

Outcome criterion2(Cache& cache)
{
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        amput::ConvergenceOptions opts;
        opts.threads = amput::thread_count();
        if (cache.reference.count(d)) opts.precomputed = cache.reference[d];
        amput::ConvergenceReport report;
        try {
            report = amput::run_convergence(m, amput::default_schedule(), kConvTolK * m.k, opts);
        } catch (const std::exception& e) {
            o.require(false, "d=" + num(d) + ": " + e.what());
            continue;
        }
        const auto& rows = report.rows;
        const double drop = std::abs(rows.front().error) / std::abs(rows.back().error);
        const double slope = report.fit.slopeLogLog;
        const auto ext = amput::check_envelope_extension(rows, report.fit.regime, 4, kEnvelopeFactor);
        o.require(drop >= kErrorDropFactor, "d=" + num(d) + " drop x" + num(drop));
        o.require(slope >= kSlopeLo && slope <= kSlopeHi, "slope " + num(slope));
        o.require(ext.ok, "envelope x" + num(std::max(ext.worstUpperRatio, ext.worstLowerRatio)));
    }
    const double secs = seconds_since(start);
    o.require(secs <= kConvSeconds, num(secs) + "s");
    return o;
}

Outcome criterion3()
{
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> rate(0.0, 0.1), vol(0.1, 0.5), spot(70.0, 130.0), mat(0.25, 2.0);
    double worst = 0.0;
    for (int i = 0; i < kBruteModels; ++i) {
        const MarketModel m{rate(rng), rate(rng), vol(rng), spot(rng), 100.0, mat(rng)};
        for (int n = 1; n <= kBruteMaxN; ++n) {
            amput::LatticeSpec spec;
            spec.n = n;
            const double diff = std::abs(amput::price_american(m, spec).price - oracle::american_by_path_enumeration(m, n));
            worst = std::max(worst, diff);
        }
    }
    const double secs = seconds_since(start);
    o.require(worst <= kBruteTol, "max |lattice - enumeration| " + num(worst));
    o.require(secs <= kBruteSeconds, num(secs) + "s");
    return o;
}

Outcome criterion4()
{
    Outcome o;
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        amput::LatticeSpec spec;
        spec.n = kMartingaleN;
        spec.keepValues = true;
        spec.keepExercise = true;
        const auto res = amput::price_american(m, spec);
        const double h = spec.h(m);
        const amput::GridFunction u = [&](int j, int k) { return std::exp(-m.r * j * h) * res.values[j][k]; };
        double worstRise = 0.0, worstContinuation = 0.0;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k <= j; ++k) {
                const double du = amput::discrete_generator(u, m, spec, j, k);
                worstRise = std::max(worstRise, du);
                if (!res.exercise[j][k]) worstContinuation = std::max(worstContinuation, std::abs(du));
            }
        o.require(worstRise <= kMartingaleTolK * m.k, "d=" + num(d) + " max Du " + num(worstRise));
        o.require(worstContinuation <= kMartingaleTolK * m.k, "continuation |Du| " + num(worstContinuation));

        amput::PdeGrid g;
        g.m = kResidualGrid;
        g.nt = kResidualGrid;
        const double residual = amput::solve_vi(m, g).maxComplementarityResidual;
        o.require(residual <= kResidualTolK * m.k, "PDE residual " + num(residual));
    }
    return o;
}

Outcome criterion5()
{
    Outcome o;
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        amput::PdeGrid g;
        g.m = kSmoothM;
        g.nt = kSmoothNt;
        const auto coarse = amput::smooth_fit_check(amput::solve_vi(m, g));
        g.m = 2 * kSmoothM;
        const auto fine = amput::smooth_fit_check(amput::solve_vi(m, g));
        const double shrink = coarse.maxAbs / fine.maxAbs;
        o.require(coarse.maxRel <= kSmoothRel, "d=" + num(d) + " rel dev " + num(coarse.maxRel));
        o.require(shrink >= kSmoothShrinkLo && shrink <= kSmoothShrinkHi, "shrink x" + num(shrink));
    }
    return o;
}

Outcome criterion6(Cache& cache)
{
    Outcome o;
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        if (!cache.reference.count(d)) cache.reference[d] = amput::reference_price(m, kCertTolK * m.k);
        const auto& ref = cache.reference[d];
        const amput::PremiumInput in{m, cache.solution(d).boundary(), 64};
        const double american = amput::european_put(m, m.t) + amput::premium_quadrature(in, m.t, std::log(m.s0));
        const double gap = std::abs(american - ref.price);
        o.require(ref.certificate.certified && gap <= kPremiumTolK * m.k, "d=" + num(d) + " gap " + num(gap));
    }
    return o;
}

Outcome criterion7(Cache& cache)
{
    Outcome o;
    std::vector<int> schedule;
    for (int n = 1 << 7; n <= 1 << 13; n <<= 1) schedule.push_back(n);
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        const auto boundary = cache.solution(d).boundary();
        const auto study = amput::run_stopping_study(m, schedule, boundary, amput::thread_count());
        double worst = -INFINITY;
        for (const auto& row : study.rows) worst = std::max(worst, -row.gapToLattice);
        o.require(worst <= kStopTolK * m.k, "d=" + num(d) + " max excess " + num(worst));
        o.require(study.gapBandRatio <= kBandRatio, "gap band x" + num(study.gapBandRatio));
        o.require(study.tailBandRatio <= kBandRatio, "tail band x" + num(study.tailBandRatio));

        amput::LatticeSpec spec;
        spec.n = kStopEnumN;
        const double diff = std::abs(amput::stopping_rule_value(m, spec, boundary).value
                                     - oracle::stopping_rule_by_path_enumeration(m, kStopEnumN, boundary));
        o.require(diff <= kStopEnumTol, "enumeration diff " + num(diff));
    }
    return o;
}

Outcome criterion8(Cache& cache)
{
    Outcome o;
    for (double d : kDividends) {
        const MarketModel m = canonical(d);
        const auto& sol = cache.solution(d);
        const auto fit = amput::run_boundary_asymptotics(m, sol);
        const bool low = fit.regime == amput::Regime::DividendAtMostRate;
        const double lo = low ? kExpLoLow : kExpLoHigh;
        const double hi = low ? kExpHiLow : kExpHiHigh;
        o.require(fit.maxIncrease <= fit.dx, "d=" + num(d) + " max rise " + num(fit.maxIncrease));
        o.require(fit.exponent >= lo && fit.exponent <= hi, "exponent " + num(fit.exponent));

        amput::LatticeSpec spec;
        spec.n = kBoundaryLatticeN;
        spec.keepExercise = true;
        const auto curve = amput::extract_boundary(m, spec, amput::price_american(m, spec));
        const double spacing = 2.0 * m.sigma * std::sqrt(spec.h(m));
        const auto oracleBoundary = sol.boundary();
        double worst = 0.0;
        bool covered = true;
        for (const auto& p : curve) {
            if (p.tYears < 0.1 * m.t - 1e-12 || p.tYears > 0.9 * m.t + 1e-12) continue;
            if (!p.stock) {
                covered = false;
                continue;
            }
            worst = std::max(worst, std::abs(std::log(*p.stock) - oracleBoundary.at(m.t - p.tYears)));
        }
        o.require(covered && worst <= spacing,
                  "lattice vs oracle " + num(worst / spacing) + " spacings");
    }
    return o;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliRun {
    int status = -1;
    std::string out;
    std::map<std::string, std::string> files;
};

CliRun run_cli(const std::string& args, int threads, const fs::path& dir)
{
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string expanded = args;
    for (std::size_t pos; (pos = expanded.find("@")) != std::string::npos;) expanded.replace(pos, 1, dir.string());
    const std::string cmd = "AMPUT_THREADS=" + std::to_string(threads) + " " + AMPUT_CLI + " " + expanded;
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    for (std::size_t got; (got = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) r.files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
    return r;
}

Outcome criterion9()
{
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "amput_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string model = (root / "model.json").string();
    std::ofstream(model) << amput::to_json(canonical(0.03)).dump(2) << '\n';
    const std::string boundary = (root / "boundary.csv").string();
    {
        amput::PdeGrid g;
        g.m = 2000;
        g.nt = 2000;
        amput::write_boundary_csv(amput::solve_vi(canonical(0.03), g).boundary(), boundary);
    }

    const std::vector<std::pair<std::string, std::string>> commands{
        {"price", "price --model " + model + " --n 2048 --boundary-out @/lattice_boundary.csv"},
        {"oracle", "oracle --model " + model + " --m 400 --nt 200 --surface-out @/surface.csv --boundary-out @/b.csv"},
        {"premium", "premium --model " + model + " --boundary " + boundary},
        {"converge", "study converge --model " + model + " --out @"},
        {"stopping", "study stopping --model " + model + " --out @ --schedule 128,256,512,1024,2048 --m 2000 --nt 2000"},
        {"boundary", "study boundary --model " + model + " --out @ --m 2000 --nt 2000"},
    };
    for (const auto& [name, args] : commands) {
        const CliRun a = run_cli(args, 1, root / (name + "_a"));
        const CliRun b = run_cli(args, 1, root / (name + "_b"));
        const CliRun c = run_cli(args, 4, root / (name + "_c"));
        const bool same = a.out == b.out && a.out == c.out && a.files == b.files && a.files == c.files
                       && a.status == b.status && a.status == c.status;
        o.require(same && a.status == 0 && !a.out.empty(),
                  name + " (exit " + std::to_string(a.status) + ", " + std::to_string(a.files.size()) + " files)");
    }
    fs::remove_all(root);
    return o;
}

}  // namespace

int main()
{
    Cache cache;
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, [&] { return criterion1(cache); }},
        {2, [&] { return criterion2(cache); }},
        {3, [] { return criterion3(); }},
        {4, [] { return criterion4(); }},
        {5, [] { return criterion5(); }},
        {6, [&] { return criterion6(cache); }},
        {7, [&] { return criterion7(cache); }},
        {8, [&] { return criterion8(cache); }},
        {9, [] { return criterion9(); }},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  [" << num(seconds_since(start))
                  << "s] " << o.detail << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
