#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxstable/basis.hpp"
#include "maxstable/csv.hpp"
#include "maxstable/data.hpp"
#include "maxstable/dependence.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/fit.hpp"
#include "maxstable/marginals.hpp"
#include "maxstable/models.hpp"
#include "maxstable/synth.hpp"

namespace maxstable::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// --- Frechet panel, binary ---------------------------------------------------
//
// Little endian: "MXSP", u32 version, u64 n_maps, u64 n_cells, then
// n_maps * n_cells IEEE doubles, map-major.

inline constexpr char kPanelMagic[4] = {'M', 'X', 'S', 'P'};
inline constexpr std::uint32_t kPanelVersion = 1;

static_assert(std::endian::native == std::endian::little, "panel I/O assumes a little-endian host");

inline void write_panel(const fs::path& path, const FrechetPanel& panel) {
    auto out = csv::open_output(path);
    const std::uint32_t version = kPanelVersion;
    const std::uint64_t rows = panel.size(), cols = panel.cells();
    out.write(kPanelMagic, 4);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    const auto data = panel.maps.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw ParseError(path.string() + ": write failed");
}

inline FrechetPanel read_panel(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::memcmp(magic, kPanelMagic, 4) != 0) throw ParseError(path.string() + ": not a panel file");
    if (version != kPanelVersion) throw ParseError(path.string() + ": unsupported panel version");
    const auto expected = 24 + rows * cols * sizeof(double);
    if (fs::file_size(path) != expected) throw ParseError(path.string() + ": truncated or oversized panel");
    FrechetPanel panel{Matrix(rows, cols)};
    auto data = panel.maps.data();
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw ParseError(path.string() + ": read failed");
    for (double v : data)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(path.string() + ": negative or non-finite value");
    return panel;
}

// --- JSON helpers ------------------------------------------------------------

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) {
    auto out = csv::open_output(path);
    out << j.dump(2) << '\n';
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": key '" + key + "' has the wrong type");
    }
}

// --- basis ---------------------------------------------------------------------

/// basis.csv (function_index,cell_id,value) plus basis-meta.json in `dir`. Without
/// a grid the cell column holds panel column positions, as recorded in the
/// metadata.
inline void write_basis(const fs::path& dir, const SpectralBasis& b, const GridSpec* grid = nullptr) {
    if (grid && grid->size() != b.cells()) throw ValidationError("write_basis: grid does not match basis");
    {
        auto out = csv::open_output(dir / "basis.csv");
        out << "function_index,cell_id,value\n";
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t c = 0; c < b.cells(); ++c)
                out << i << ',' << (grid ? (*grid)[c].id : static_cast<std::int64_t>(c)) << ','
                    << csv::format(b(i, c)) << '\n';
    }
    json meta;
    meta["source"] = to_string(b.source);
    meta["cell_ids"] = grid ? "grid" : "position";
    meta["n_functions"] = b.size();
    meta["n_cells"] = b.cells();
    meta["threshold"] = b.threshold ? json(*b.threshold) : json(nullptr);
    write_json(dir / "basis-meta.json", meta);
}

inline SpectralBasis read_basis(const fs::path& dir, const GridSpec& grid) {
    const auto meta = read_json(dir / "basis-meta.json");
    const std::string where = (dir / "basis-meta.json").string();
    const auto n = get<std::size_t>(meta, "n_functions", where);
    const auto cells = get<std::size_t>(meta, "n_cells", where);
    if (cells != grid.size()) throw ValidationError(where + ": basis has " + std::to_string(cells) +
                                                    " cells, grid has " + std::to_string(grid.size()));
    const auto source = get<std::string>(meta, "source", where);
    SpectralBasis b{Matrix(n, cells, std::numeric_limits<double>::quiet_NaN()),
                    source == "exceedances" ? BasisSource::Exceedances : BasisSource::AllMaps, std::nullopt};
    if (meta.contains("threshold") && !meta["threshold"].is_null()) b.threshold = meta["threshold"].get<double>();
    const bool by_position = meta.value("cell_ids", std::string("grid")) == "position";

    csv::Reader r(dir / "basis.csv", {"function_index", "cell_id", "value"});
    std::size_t count = 0;
    while (r.next()) {
        const auto i = r.integer(0);
        if (i < 0 || static_cast<std::size_t>(i) >= n) r.fail("function index out of range");
        const auto id = r.integer(1);
        if (by_position && (id < 0 || static_cast<std::size_t>(id) >= cells)) r.fail("cell position out of range");
        const auto c = by_position ? static_cast<std::size_t>(id) : grid.position(id);
        auto& slot = b.functions(static_cast<std::size_t>(i), c);
        if (!std::isnan(slot)) r.fail("duplicate entry");
        slot = r.real(2);
        ++count;
    }
    if (count != n * cells) throw ValidationError((dir / "basis.csv").string() + ": incomplete basis");
    b.validate(1e-8);
    return b;
}

// --- models --------------------------------------------------------------------

inline json br_parameters(const BrownResnickModel& m) {
    return json{{"sigma2", m.sigma2}, {"b1", m.b1},           {"b2", m.b2},
                {"theta_rot", m.theta_rot}, {"beta", m.beta}, {"origin_lon", m.origin.lon},
                {"origin_lat", m.origin.lat}};
}

inline BrownResnickModel br_from_parameters(const json& p, const std::string& where) {
    BrownResnickModel m;
    m.sigma2 = get<double>(p, "sigma2", where);
    m.b1 = get<double>(p, "b1", where);
    m.b2 = get<double>(p, "b2", where);
    m.theta_rot = get<double>(p, "theta_rot", where);
    m.beta = get<double>(p, "beta", where);
    m.origin = {get<double>(p, "origin_lon", where), get<double>(p, "origin_lat", where)};
    m.validate();
    return m;
}

/// {type, parameters} for a model; basis models also record `basis_path`.
inline json model_descriptor(const MaxStableModel& model, const std::string& basis_path = "") {
    json j;
    j["type"] = model_type_name(model);
    json params = json::object();
    if (const auto* rs = std::get_if<ReichShabyModel>(&model)) params["alpha"] = rs->alpha;
    if (const auto* mx = std::get_if<MaxMixtureModel>(&model)) params["a"] = mx->a;
    if (const auto* br = std::get_if<BrownResnickModel>(&model)) params = br_parameters(*br);
    j["parameters"] = params;
    if (!std::holds_alternative<BrownResnickModel>(model)) j["basis_path"] = basis_path;
    return j;
}

/// Reads a model descriptor or a fit.json. A relative basis_path is resolved
/// against the descriptor's directory.
inline MaxStableModel read_model(const fs::path& path, const GridSpec& grid) {
    const auto j = read_json(path);
    const std::string where = path.string();
    const std::string type = j.contains("type") ? get<std::string>(j, "type", where)
                                                : get<std::string>(j, "model_type", where);
    const json params = j.contains("parameters") ? j["parameters"] : json::object();
    if (type == "brownresnick") return br_from_parameters(params, where);
    fs::path basis_dir = get<std::string>(j, "basis_path", where);
    if (basis_dir.is_relative()) basis_dir = path.parent_path() / basis_dir;
    MaxLinearModel inner{read_basis(basis_dir, grid)};
    if (type == "maxlinear") return inner;
    if (type == "reichshaby") {
        ReichShabyModel m{std::move(inner.basis), get<double>(params, "alpha", where)};
        m.validate();
        return m;
    }
    if (type == "mixture") {
        MaxMixtureModel m{std::move(inner), get<double>(params, "a", where)};
        m.validate();
        return m;
    }
    throw ValidationError(where + ": unknown model type '" + type + "'");
}

inline json fit_json(const FitResult& r, const std::string& basis_path) {
    auto d = model_descriptor(r.model, basis_path);
    json j;
    j["model_type"] = d["type"];
    j["parameters"] = d["parameters"];
    if (d.contains("basis_path")) j["basis_path"] = d["basis_path"];
    j["rmse"] = r.rmse;
    j["n_pairs"] = r.n_pairs();
    j["evaluations"] = r.evaluations;
    j["start_index"] = r.start_index ? json(*r.start_index) : json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

// --- coefficient tables --------------------------------------------------------

/// ec-pairs (i,j,distance_km,madogram,theta) or ec-triples (i,j,k,madogram,theta),
/// sites named by station id.
inline void write_ec(const fs::path& path, const std::vector<EcEstimate>& ec, const StationSet& stations) {
    auto out = csv::open_output(path);
    const bool pairs = !ec.empty() && ec.front().members.size() == 2;
    out << (pairs || ec.empty() ? "i,j,distance_km,madogram,theta\n" : "i,j,k,madogram,theta\n");
    for (const auto& e : ec) {
        for (auto m : e.members) out << stations[m].id << ',';
        if (e.distance_km) out << csv::format(*e.distance_km) << ',';
        out << csv::format(e.madogram) << ',' << csv::format(e.theta) << '\n';
    }
}

inline std::vector<EcEstimate> read_ec(const fs::path& path, const StationSet& stations) {
    std::ifstream probe(path);
    if (!probe) throw ParseError(path.string() + ": cannot open file");
    std::string header;
    std::getline(probe, header);
    const bool triples = header.rfind("i,j,k", 0) == 0;
    std::vector<EcEstimate> out;
    if (triples) {
        csv::Reader r(path, {"i", "j", "k", "madogram", "theta"});
        while (r.next()) {
            EcEstimate e;
            for (std::size_t c = 0; c < 3; ++c) e.members.push_back(stations.index(r.integer(c)));
            e.madogram = r.real(3);
            e.theta = r.real(4);
            out.push_back(std::move(e));
        }
    } else {
        csv::Reader r(path, {"i", "j", "distance_km", "madogram", "theta"});
        while (r.next()) {
            EcEstimate e;
            e.members = {stations.index(r.integer(0)), stations.index(r.integer(1))};
            e.distance_km = r.real(2);
            e.madogram = r.real(3);
            e.theta = r.real(4);
            out.push_back(std::move(e));
        }
    }
    return out;
}

inline void write_envelope(const fs::path& path, const BootstrapEnvelope& env, const StationSet& stations) {
    auto out = csv::open_output(path);
    out << "i,j,q_low,q_high\n";
    for (std::size_t p = 0; p < env.pairs.size(); ++p)
        out << stations[env.pairs[p].first].id << ',' << stations[env.pairs[p].second].id << ','
            << csv::format(env.q_low[p]) << ',' << csv::format(env.q_high[p]) << '\n';
}

struct EnvelopeRow {
    std::int64_t i = 0, j = 0;
    double q_low = 0.0, q_high = 0.0;
};

inline std::vector<EnvelopeRow> read_envelope(const fs::path& path) {
    csv::Reader r(path, {"i", "j", "q_low", "q_high"});
    std::vector<EnvelopeRow> out;
    while (r.next()) out.push_back({r.integer(0), r.integer(1), r.real(2), r.real(3)});
    return out;
}

inline void write_fields(const fs::path& path, const Matrix& fields, const GridSpec& grid) {
    auto out = csv::open_output(path);
    out << "field_index,cell_id,value\n";
    for (std::size_t f = 0; f < fields.rows(); ++f)
        for (std::size_t c = 0; c < fields.cols(); ++c)
            out << f << ',' << grid[c].id << ',' << csv::format(fields(f, c)) << '\n';
}

struct GevFitRow {
    std::int64_t station_id = 0;
    GevParams params;
    KsResult ks;
};

inline void write_gev_fits(const fs::path& path, const std::vector<GevFitRow>& rows) {
    auto out = csv::open_output(path);
    out << "station_id,mu,sigma,xi,ks_stat,ks_pvalue\n";
    for (const auto& r : rows)
        out << r.station_id << ',' << csv::format(r.params.mu) << ',' << csv::format(r.params.sigma) << ','
            << csv::format(r.params.xi) << ',' << csv::format(r.ks.statistic) << ',' << csv::format(r.ks.p_value)
            << '\n';
}

// --- scenario ------------------------------------------------------------------

inline ScenarioConfig scenario_from_json(const json& j, const std::string& where) {
    static const std::vector<std::string> known{"nx", "ny", "spacing", "corner_lon", "corner_lat", "n_stations",
                                                "n_days", "n_members", "block_length", "truth", "rho", "p0",
                                                "gev", "seed"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError(where + ": unknown key '" + key + "'");
    ScenarioConfig c;
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = get<std::decay_t<decltype(field)>>(j, key, where);
    };
    opt("nx", c.nx);
    opt("ny", c.ny);
    opt("spacing", c.spacing);
    opt("corner_lon", c.corner.lon);
    opt("corner_lat", c.corner.lat);
    opt("n_stations", c.n_stations);
    opt("n_days", c.n_days);
    opt("n_members", c.n_members);
    opt("block_length", c.block_length);
    opt("rho", c.rho);
    opt("p0", c.p0);
    opt("seed", c.seed);
    if (j.contains("truth")) {
        const auto& t = j["truth"];
        auto topt = [&](const char* key, double& field) {
            if (t.contains(key)) field = get<double>(t, key, where + " truth");
        };
        topt("sigma2", c.truth.sigma2);
        topt("b1", c.truth.b1);
        topt("b2", c.truth.b2);
        topt("theta_rot", c.truth.theta_rot);
        topt("beta", c.truth.beta);
    }
    if (j.contains("gev")) {
        auto one = [&](const json& g) {
            return GevParams{get<double>(g, "mu", where + " gev"), get<double>(g, "sigma", where + " gev"),
                             get<double>(g, "xi", where + " gev")};
        };
        c.gev.clear();
        if (j["gev"].is_array())
            for (const auto& g : j["gev"]) c.gev.push_back(one(g));
        else
            c.gev.push_back(one(j["gev"]));
    }
    c.validate();
    return c;
}

inline json scenario_to_json(const ScenarioConfig& c) {
    json gev = json::array();
    for (const auto& g : c.gev) gev.push_back({{"mu", g.mu}, {"sigma", g.sigma}, {"xi", g.xi}});
    return json{{"nx", c.nx},
                {"ny", c.ny},
                {"spacing", c.spacing},
                {"corner_lon", c.corner.lon},
                {"corner_lat", c.corner.lat},
                {"n_stations", c.n_stations},
                {"n_days", c.n_days},
                {"n_members", c.n_members},
                {"block_length", c.block_length},
                {"truth",
                 {{"sigma2", c.truth.sigma2},
                  {"b1", c.truth.b1},
                  {"b2", c.truth.b2},
                  {"theta_rot", c.truth.theta_rot},
                  {"beta", c.truth.beta}}},
                {"rho", c.rho},
                {"p0", c.p0},
                {"gev", gev},
                {"seed", c.seed}};
}

inline json truth_json(const Scenario& sc, const ScenarioConfig& cfg) {
    json j;
    j["model"] = model_descriptor(sc.truth.model);
    json gev = json::array();
    for (std::size_t s = 0; s < sc.truth.gev.size(); ++s) {
        const auto& g = sc.truth.gev[s];
        gev.push_back({{"station_id", sc.stations[s].id}, {"mu", g.mu}, {"sigma", g.sigma}, {"xi", g.xi}});
    }
    j["gev"] = gev;
    json cells = json::array();
    for (std::size_t s = 0; s < sc.station_cells.size(); ++s)
        cells.push_back({{"station_id", sc.stations[s].id}, {"cell_id", sc.grid[sc.station_cells[s]].id}});
    j["station_cells"] = cells;
    json pairs = json::array();
    for (const auto& p : sc.truth.pairs)
        pairs.push_back({{"i", sc.stations[p.i].id},
                         {"j", sc.stations[p.j].id},
                         {"distance_km", p.distance_km},
                         {"theta", p.theta}});
    j["pairs"] = pairs;
    j["config"] = scenario_to_json(cfg);
    return j;
}

/// Writes grid.csv, stations.csv, forecasts.csv, maxima.csv, truth.json.
inline void write_scenario(const fs::path& dir, const Scenario& sc, const ScenarioConfig& cfg) {
    write_grid(dir / "grid.csv", sc.grid);
    write_stations(dir / "stations.csv", sc.stations);
    write_forecasts(dir / "forecasts.csv", sc.forecasts, sc.grid);
    write_maxima(dir / "maxima.csv", sc.maxima, sc.stations);
    write_json(dir / "truth.json", truth_json(sc, cfg));
}

// --- digests ---------------------------------------------------------------------

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
inline std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace maxstable::io
