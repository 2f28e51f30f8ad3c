// maxstable: file-based pipeline for spatial extremes.
//
//   synth      scenario files and truth.json from a JSON config
//   margins    GEV fits per station (margins fit)
//   transform  forecasts -> unit Frechet panel (binary)
//   ec         empirical pairwise / triplewise extremal coefficients
//   basis      spectral basis (A: all maps, B: exceedances)
//   fit        Models A-E against empirical pairwise coefficients
//   simulate   fields from a fitted model
//   bootstrap  parametric bootstrap envelopes
//   report     plot-ready tables
//
// Exit codes: 0 success, 2 usage, 3 validation, 4 numerical.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxstable/maxstable.hpp"

namespace {

namespace fs = std::filesystem;
namespace ms = maxstable;
using ms::io::json;

class UsageError : public ms::Error {
public:
    using ms::Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Guards an output directory against concurrent runs.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) {
        fs::create_directories(dir.empty() ? fs::path(".") : dir);
        path_ = (dir.empty() ? fs::path(".") : dir) / ".maxstable.lock";
        std::FILE* f = std::fopen(path_.string().c_str(), "wx");
        if (!f) throw ms::ValidationError("output location is locked by another run: " + path_.string());
        std::fclose(f);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
};

/// Collects what the run manifest records.
struct Run {
    explicit Run(std::string cmd) : command(std::move(cmd)) {}

    std::string command;
    json inputs = json::array();
    json parameters = json::object();
    std::optional<std::uint64_t> seed;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void input(const fs::path& p) {
        if (fs::is_directory(p)) {
            for (const char* name : {"basis-meta.json", "basis.csv"})
                if (fs::exists(p / name)) input(p / name);
            return;
        }
        inputs.push_back({{"path", p.string()}, {"digest", ms::io::file_digest(p)}});
    }

    void write_manifest(const fs::path& manifest) const {
        json j;
        j["command"] = command;
        j["inputs"] = inputs;
        j["parameters"] = parameters;
        j["seed"] = seed ? json(*seed) : json(nullptr);
        j["tool_version"] = MAXSTABLE_VERSION;
        j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ms::io::write_json(manifest, j);
    }
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("MAXSTABLE_SEED");
    if (!v || !*v) return std::nullopt;
    std::uint64_t s = 0;
    const std::string_view text(v);
    auto res = std::from_chars(text.data(), text.data() + text.size(), s);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw UsageError("MAXSTABLE_SEED is not a non-negative integer: '" + std::string(v) + "'");
    return s;
}

/// --seed wins over MAXSTABLE_SEED; 0 when neither is given.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (auto e = env_seed()) return *e;
    return 0;
}

/// Stations listed in a maxima file, in order of first appearance, when no
/// station file is supplied (coordinates are then unknown and set to 0).
ms::StationSet stations_from_maxima(const fs::path& path) {
    ms::csv::Reader r(path, {"block", "station_id", "value"});
    std::vector<ms::Station> out;
    std::set<std::int64_t> seen;
    while (r.next()) {
        const auto id = r.integer(1);
        if (seen.insert(id).second) out.push_back({id, {0.0, 0.0}});
    }
    return ms::StationSet(std::move(out));
}

std::vector<ms::GeoPoint> cell_points(const ms::GridSpec& grid, const std::vector<std::size_t>& cells) {
    std::vector<ms::GeoPoint> pts;
    for (auto c : cells) pts.push_back(grid[c].pos);
    return pts;
}

// --- subcommands -------------------------------------------------------------

struct SynthArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
    Run run{"synth"};
    run.input(a.config);
    const auto j = ms::io::read_json(a.config);
    auto cfg = ms::io::scenario_from_json(j, a.config);
    if (a.seed) cfg.seed = *a.seed;
    else if (!j.contains("seed")) {
        if (auto e = env_seed()) cfg.seed = *e;
    }
    run.seed = cfg.seed;
    run.parameters = ms::io::scenario_to_json(cfg);
    OutputLock lock(a.out);
    const auto sc = ms::generate_scenario(cfg);
    ms::io::write_scenario(a.out, sc, cfg);
    run.write_manifest(fs::path(a.out) / "manifest.json");
}

struct MarginsArgs {
    std::string maxima, stations, out;
    std::size_t block_length = 0;
};

void run_margins_fit(const MarginsArgs& a) {
    Run run{"margins fit"};
    run.input(a.maxima);
    const auto stations = a.stations.empty() ? stations_from_maxima(a.maxima) : ms::read_stations(a.stations);
    if (!a.stations.empty()) run.input(a.stations);
    const auto maxima = ms::read_maxima(a.maxima, stations, a.block_length);
    std::vector<ms::io::GevFitRow> rows;
    for (std::size_t s = 0; s < maxima.stations(); ++s) {
        const auto col = maxima.values().column(s);
        try {
            const auto p = ms::pwm_fit(col);
            rows.push_back({stations[s].id, p, ms::ks_test(col, p)});
        } catch (const ms::Error& e) {
            std::cerr << "station " << stations[s].id << ": " << e.what() << '\n';
            throw;
        }
    }
    OutputLock lock(fs::path(a.out).parent_path());
    ms::io::write_gev_fits(a.out, rows);
    run.write_manifest(manifest_for_file(a.out));
}

struct TransformArgs {
    std::string forecasts, grid, out;
};

void run_transform(const TransformArgs& a) {
    Run run{"transform"};
    run.input(a.grid);
    run.input(a.forecasts);
    const auto grid = ms::read_grid(a.grid);
    const auto archive = ms::read_forecasts(a.forecasts, grid);
    const auto panel = ms::rank_to_frechet(archive);
    const auto dropped = archive.days() * archive.members() - panel.size();
    if (dropped > 0) std::cerr << "transform: dropped " << dropped << " maps with missing cells\n";
    run.parameters["maps"] = panel.size();
    run.parameters["cells"] = panel.cells();
    OutputLock lock(fs::path(a.out).parent_path());
    ms::io::write_panel(a.out, panel);
    run.write_manifest(manifest_for_file(a.out));
}

struct EcArgs {
    std::string maxima, stations, out;
    std::size_t order = 2;
};

void run_ec(const EcArgs& a) {
    Run run{"ec"};
    run.input(a.maxima);
    run.input(a.stations);
    run.parameters["order"] = a.order;
    const auto stations = ms::read_stations(a.stations);
    const auto maxima = ms::read_maxima(a.maxima, stations);
    const auto ec = ms::ec_cloud(maxima, stations, a.order);
    OutputLock lock(fs::path(a.out).parent_path());
    ms::io::write_ec(a.out, ec, stations);
    run.write_manifest(manifest_for_file(a.out));
}

struct BasisArgs {
    std::string panel, model, grid, out;
    double quantile = 0.9;
};

void run_basis(const BasisArgs& a) {
    Run run{"basis"};
    run.input(a.panel);
    run.parameters["model"] = a.model;
    const auto panel = ms::io::read_panel(a.panel);
    std::optional<ms::GridSpec> grid;
    if (!a.grid.empty()) {
        run.input(a.grid);
        grid = ms::read_grid(a.grid);
    }
    ms::SpectralBasis b;
    if (a.model == "A") {
        b = ms::build_basis_A(panel);
    } else {
        run.parameters["quantile"] = a.quantile;
        b = ms::build_basis_B(panel, a.quantile);
    }
    OutputLock lock(a.out);
    ms::io::write_basis(a.out, b, grid ? &*grid : nullptr);
    run.write_manifest(fs::path(a.out) / "manifest.json");
}

struct FitArgs {
    std::string model, basis, ec, stations, grid, out;
};

void run_fit(const FitArgs& a) {
    Run run{"fit"};
    run.parameters["model"] = a.model;
    run.input(a.ec);
    run.input(a.stations);
    run.input(a.grid);
    const auto stations = ms::read_stations(a.stations);
    const auto grid = ms::read_grid(a.grid);
    const auto ec = ms::io::read_ec(a.ec, stations);
    const auto cells = ms::map_stations_to_cells(stations, grid);

    std::optional<ms::SpectralBasis> basis;
    std::string basis_path;
    if (a.model != "E") {
        if (a.basis.empty()) throw UsageError("fit --model " + a.model + " needs --basis");
        run.input(a.basis);
        basis = ms::io::read_basis(a.basis, grid);
        const auto out_dir = fs::absolute(a.out).parent_path();
        basis_path = fs::relative(fs::absolute(a.basis), out_dir).generic_string();
    }
    ms::FitResult r;
    if (a.model == "A" || a.model == "B") r = ms::evaluate_maxlinear(*basis, ec, cells);
    else if (a.model == "C") r = ms::fit_model_C(*basis, ec, cells);
    else if (a.model == "D") r = ms::fit_model_D(*basis, ec, cells);
    else r = ms::fit_model_E(ec, cell_points(grid, cells));
    for (const auto& w : r.warnings) std::cerr << "fit: warning: " << w << '\n';

    OutputLock lock(fs::absolute(a.out).parent_path());
    ms::io::write_json(a.out, ms::io::fit_json(r, basis_path));
    run.write_manifest(manifest_for_file(a.out));
}

struct SimulateArgs {
    std::string model, grid, out;
    std::size_t n = 100;
    std::optional<std::uint64_t> seed;
};

void run_simulate(const SimulateArgs& a) {
    Run run{"simulate"};
    run.input(a.model);
    run.input(a.grid);
    run.seed = resolve_seed(a.seed);
    run.parameters["n"] = a.n;
    const auto grid = ms::read_grid(a.grid);
    const auto model = ms::io::read_model(a.model, grid);
    const auto fields = ms::simulate(model, grid, a.n, *run.seed);
    OutputLock lock(fs::absolute(a.out).parent_path());
    ms::io::write_fields(a.out, fields, grid);
    run.write_manifest(manifest_for_file(a.out));
}

struct BootstrapArgs {
    std::string model, stations, grid, out;
    std::size_t replicates = ms::kDefaultReplicates, blocks = ms::kDefaultBootstrapBlocks;
    std::optional<std::uint64_t> seed;
};

void run_bootstrap(const BootstrapArgs& a) {
    Run run{"bootstrap"};
    run.input(a.model);
    run.input(a.stations);
    run.input(a.grid);
    run.seed = resolve_seed(a.seed);
    run.parameters["replicates"] = a.replicates;
    run.parameters["blocks"] = a.blocks;
    const auto grid = ms::read_grid(a.grid);
    const auto stations = ms::read_stations(a.stations);
    const auto model = ms::io::read_model(a.model, grid);
    const auto cells = ms::map_stations_to_cells(stations, grid);
    const auto env = ms::parametric_bootstrap(model, grid, cells, a.replicates, a.blocks, *run.seed);
    OutputLock lock(fs::absolute(a.out).parent_path());
    ms::io::write_envelope(a.out, env, stations);
    run.write_manifest(manifest_for_file(a.out));
}

struct ReportArgs {
    std::vector<std::string> fits, envelopes;
    std::string ec, ec3, stations, grid, out;
    std::size_t mc_fields = 20000;
    std::optional<std::uint64_t> seed;
};

void run_report(const ReportArgs& a) {
    Run run{"report"};
    for (const auto& f : a.fits) run.input(f);
    for (const auto& e : a.envelopes) run.input(e);
    run.input(a.ec);
    if (!a.ec3.empty()) run.input(a.ec3);
    run.input(a.stations);
    run.input(a.grid);
    if (!a.envelopes.empty() && a.envelopes.size() != a.fits.size())
        throw UsageError("report: give one --envelope per --fit, or none");

    const auto grid = ms::read_grid(a.grid);
    const auto stations = ms::read_stations(a.stations);
    const auto cells = ms::map_stations_to_cells(stations, grid);
    const auto points = grid.points();
    const auto pairs = ms::io::read_ec(a.ec, stations);

    std::vector<ms::MaxStableModel> models;
    std::vector<std::string> labels;
    for (const auto& f : a.fits) {
        models.push_back(ms::io::read_model(f, grid));
        std::string label = ms::model_type_name(models.back());
        if (std::find(labels.begin(), labels.end(), label) != labels.end())
            label += "_" + std::to_string(labels.size());
        labels.push_back(label);
    }
    auto model_theta = [&](std::size_t m, const std::vector<std::size_t>& members) {
        std::vector<std::size_t> sites;
        for (auto s : members) sites.push_back(cells[s]);
        return ms::ec_closed_form(models[m], sites, points);
    };

    OutputLock lock(a.out);
    {
        auto out = ms::csv::open_output(fs::path(a.out) / "fig3.csv");
        out << "i,j,distance_km,theta_empirical";
        for (const auto& l : labels) out << ",theta_" << l;
        out << '\n';
        for (const auto& e : pairs) {
            out << stations[e.members[0]].id << ',' << stations[e.members[1]].id << ','
                << ms::csv::format(e.distance_km.value_or(0.0)) << ',' << ms::csv::format(e.theta);
            for (std::size_t m = 0; m < models.size(); ++m) out << ',' << ms::csv::format(model_theta(m, e.members));
            out << '\n';
        }
    }
    {
        auto out = ms::csv::open_output(fs::path(a.out) / "fig4.csv");
        out << "model,i,j,theta_model,theta_empirical,q_low,q_high\n";
        for (std::size_t m = 0; m < models.size(); ++m) {
            std::map<std::pair<std::int64_t, std::int64_t>, ms::io::EnvelopeRow> env;
            if (!a.envelopes.empty())
                for (const auto& row : ms::io::read_envelope(a.envelopes[m])) env[{row.i, row.j}] = row;
            for (const auto& e : pairs) {
                const auto i = stations[e.members[0]].id, j = stations[e.members[1]].id;
                out << labels[m] << ',' << i << ',' << j << ',' << ms::csv::format(model_theta(m, e.members)) << ','
                    << ms::csv::format(e.theta) << ',';
                if (auto it = env.find({i, j}); it != env.end())
                    out << ms::csv::format(it->second.q_low) << ',' << ms::csv::format(it->second.q_high);
                else
                    out << ',';
                out << '\n';
            }
        }
    }
    if (!a.ec3.empty()) {
        run.seed = resolve_seed(a.seed);
        run.parameters["mc_fields"] = a.mc_fields;
        const auto triples = ms::io::read_ec(a.ec3, stations);
        // Brown-Resnick triples by simulation at the station cells.
        std::vector<std::optional<ms::Matrix>> sims(models.size());
        for (std::size_t m = 0; m < models.size(); ++m)
            if (std::holds_alternative<ms::BrownResnickModel>(models[m]))
                sims[m] = ms::simulate(models[m], grid, a.mc_fields, ms::substream(*run.seed, {m}), cells);
        auto out = ms::csv::open_output(fs::path(a.out) / "fig6.csv");
        out << "i,j,k,theta_empirical";
        for (const auto& l : labels) out << ",theta_" << l;
        out << '\n';
        for (const auto& e : triples) {
            if (e.members.size() != 3) throw ms::ValidationError(a.ec3 + ": expected triplewise coefficients");
            for (auto s : e.members) out << stations[s].id << ',';
            out << ms::csv::format(e.theta);
            for (std::size_t m = 0; m < models.size(); ++m) {
                const double t = sims[m] ? ms::ec_from_threshold(*sims[m], e.members, 0.5) : model_theta(m, e.members);
                out << ',' << ms::csv::format(t);
            }
            out << '\n';
        }
    }
    run.write_manifest(fs::path(a.out) / "manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-stable models of spatial extremes from ensemble forecasts and station maxima"};
    app.set_version_flag("--version", MAXSTABLE_VERSION);
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: all cores)")->check(CLI::Range(1u, 4096u));

    auto seed_option = [](CLI::App* sub, std::optional<std::uint64_t>& seed) {
        sub->add_option("--seed", seed, "Random seed (default: MAXSTABLE_SEED, else 0)");
    };

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic scenario");
    c_synth->add_option("--config", synth.config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    seed_option(c_synth, synth.seed);

    MarginsArgs margins;
    auto* c_margins = app.add_subcommand("margins", "Marginal GEV analysis");
    c_margins->require_subcommand(1);
    auto* c_margins_fit = c_margins->add_subcommand("fit", "PWM fit and KS test per station");
    c_margins_fit->add_option("--maxima", margins.maxima, "Block maxima CSV")->required()->check(CLI::ExistingFile);
    c_margins_fit->add_option("--stations", margins.stations, "Station CSV")->check(CLI::ExistingFile);
    c_margins_fit->add_option("--block-length", margins.block_length, "Block length in days (recorded only)");
    c_margins_fit->add_option("--out", margins.out, "Output CSV")->required();

    TransformArgs transform;
    auto* c_transform = app.add_subcommand("transform", "Rank-transform forecasts to a unit Frechet panel");
    c_transform->add_option("--forecasts", transform.forecasts, "Forecast CSV")->required()->check(CLI::ExistingFile);
    c_transform->add_option("--grid", transform.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
    c_transform->add_option("--out", transform.out, "Output panel file")->required();

    EcArgs ec;
    auto* c_ec = app.add_subcommand("ec", "Empirical extremal coefficients");
    c_ec->add_option("--maxima", ec.maxima, "Block maxima CSV")->required()->check(CLI::ExistingFile);
    c_ec->add_option("--stations", ec.stations, "Station CSV")->required()->check(CLI::ExistingFile);
    c_ec->add_option("--order", ec.order, "2 (pairs) or 3 (triples)")->check(CLI::IsMember({2, 3}));
    c_ec->add_option("--out", ec.out, "Output CSV")->required();

    BasisArgs basis;
    auto* c_basis = app.add_subcommand("basis", "Build a spectral basis");
    c_basis->add_option("--panel", basis.panel, "Panel file")->required()->check(CLI::ExistingFile);
    c_basis->add_option("--model", basis.model, "A or B")->required()->check(CLI::IsMember({"A", "B"}));
    c_basis->add_option("--quantile", basis.quantile, "Exceedance quantile (B)")->check(CLI::Range(0.0, 1.0));
    c_basis->add_option("--grid", basis.grid, "Grid CSV, to label cells by id")->check(CLI::ExistingFile);
    c_basis->add_option("--out", basis.out, "Output directory")->required();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a model to pairwise coefficients");
    c_fit->add_option("--model", fit.model, "A, B, C, D or E")->required()->check(CLI::IsMember({"A", "B", "C", "D", "E"}));
    c_fit->add_option("--basis", fit.basis, "Basis directory (A-D)")->check(CLI::ExistingDirectory);
    c_fit->add_option("--ec", fit.ec, "Pairwise coefficient CSV")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--stations", fit.stations, "Station CSV")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--grid", fit.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--out", fit.out, "Output fit.json")->required();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate fields from a model");
    c_sim->add_option("--model", sim.model, "fit.json or model.json")->required()->check(CLI::ExistingFile);
    c_sim->add_option("--grid", sim.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
    c_sim->add_option("--n", sim.n, "Number of fields")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    c_sim->add_option("--out", sim.out, "Output CSV")->required();
    seed_option(c_sim, sim.seed);

    BootstrapArgs boot;
    auto* c_boot = app.add_subcommand("bootstrap", "Parametric bootstrap envelopes");
    c_boot->add_option("--model", boot.model, "fit.json or model.json")->required()->check(CLI::ExistingFile);
    c_boot->add_option("--stations", boot.stations, "Station CSV")->required()->check(CLI::ExistingFile);
    c_boot->add_option("--grid", boot.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
    c_boot->add_option("--replicates", boot.replicates, "Replicates")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    c_boot->add_option("--blocks", boot.blocks, "Blocks per replicate")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    c_boot->add_option("--out", boot.out, "Output CSV")->required();
    seed_option(c_boot, boot.seed);

    ReportArgs report;
    auto* c_report = app.add_subcommand("report", "Plot-ready tables");
    c_report->add_option("--fit", report.fits, "fit.json (repeatable)")->required()->check(CLI::ExistingFile);
    c_report->add_option("--envelope", report.envelopes, "envelope.csv per --fit")->check(CLI::ExistingFile);
    c_report->add_option("--ec", report.ec, "Pairwise coefficient CSV")->required()->check(CLI::ExistingFile);
    c_report->add_option("--ec3", report.ec3, "Triplewise coefficient CSV")->check(CLI::ExistingFile);
    c_report->add_option("--stations", report.stations, "Station CSV")->required()->check(CLI::ExistingFile);
    c_report->add_option("--grid", report.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
    c_report->add_option("--mc-fields", report.mc_fields, "Fields for simulated triplewise coefficients")
        ->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    c_report->add_option("--out", report.out, "Output directory")->required();
    seed_option(c_report, report.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ms::set_thread_count(threads);
        if (c_synth->parsed()) run_synth(synth);
        else if (c_margins_fit->parsed()) run_margins_fit(margins);
        else if (c_transform->parsed()) run_transform(transform);
        else if (c_ec->parsed()) run_ec(ec);
        else if (c_basis->parsed()) run_basis(basis);
        else if (c_fit->parsed()) run_fit(fit);
        else if (c_sim->parsed()) run_simulate(sim);
        else if (c_boot->parsed()) run_bootstrap(boot);
        else if (c_report->parsed()) run_report(report);
    } catch (const ms::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
