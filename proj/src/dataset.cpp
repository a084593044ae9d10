#include "fctree/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fctree/detail/text.hpp"
#include "fctree/errors.hpp"
#include "fctree/rng.hpp"

namespace fctree {

using detail::fmt_double;
using detail::parse_double;
using detail::split;
using detail::trim;

// ----------------------------------------------------------------- Dataset

int Dataset::append_built_feature(const ExprPtr& expr, double div_epsilon) {
    infer_unit(*expr, schema); // throws on ill-typed or unknown columns
    const ExprPtr canon = canonicalize(expr);
    for (size_t i = 0; i < built.size(); ++i) {
        if (exprs_equal(*built[i].expr, *canon)) return static_cast<int>(i);
    }
    std::vector<int> rows(n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    BuiltFeature f;
    f.expr = canon;
    f.values = evaluate(*canon, *this, rows, div_epsilon);
    built.push_back(std::move(f));
    return static_cast<int>(built.size()) - 1;
}

void Dataset::validate(bool require_both_classes) const {
    const size_t n = n_rows();
    if (n == 0) throw DataError("dataset has no rows");
    if (weights.size() != n) throw DataError("weights length mismatch");
    if (static_cast<int>(columns.size()) != schema.size()) {
        throw DataError("column count does not match schema");
    }
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].size() != n) {
            throw DataError("column '" + schema.at(static_cast<int>(c)).name +
                            "' length mismatch");
        }
    }
    bool seen[2] = {false, false};
    for (size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw DataError("label out of {0,1} at row " + std::to_string(i));
        }
        seen[labels[i]] = true;
        if (!(weights[i] >= 0.0)) {
            throw DataError("negative weight at row " + std::to_string(i));
        }
    }
    if (require_both_classes && !(seen[0] && seen[1])) {
        throw DataError("training dataset must contain both classes");
    }
    for (const auto& f : built) {
        if (f.values.size() != n) throw DataError("built feature length mismatch");
    }
}

Dataset Dataset::subset(std::span<const int> rows) const {
    Dataset out;
    out.schema = schema;
    out.columns.resize(columns.size());
    for (size_t c = 0; c < columns.size(); ++c) {
        out.columns[c].reserve(rows.size());
        for (int r : rows) out.columns[c].push_back(columns[c][static_cast<size_t>(r)]);
    }
    out.labels.reserve(rows.size());
    out.weights.reserve(rows.size());
    for (int r : rows) {
        out.labels.push_back(labels[static_cast<size_t>(r)]);
        out.weights.push_back(weights[static_cast<size_t>(r)]);
    }
    return out;
}

std::vector<int> Dataset::all_rows() const {
    std::vector<int> rows(n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

// ---------------------------------------------------------------- load_csv

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace

Dataset load_csv(const std::string& data_path, const std::string& units_path) {
    // units sidecar: column=unit lines
    std::unordered_map<std::string, UnitClass> units;
    for (const auto& raw : read_lines(units_path)) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("bad units line '" + line + "' in " + units_path);
        const std::string name = trim(line.substr(0, eq));
        const std::string token = trim(line.substr(eq + 1));
        const auto unit = unit_from_string(token);
        if (!unit) throw ParseError("bad unit token '" + token + "' in " + units_path);
        units[name] = *unit;
    }

    const auto lines = read_lines(data_path);
    if (lines.empty()) throw DataError("empty data file: " + data_path);
    const auto header = split(lines[0], ',');
    int label_col = -1;
    int weight_col = -1;
    Dataset ds;
    std::vector<int> schema_of_field(header.size(), -1);
    for (size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        if (name == "label") {
            label_col = static_cast<int>(i);
            continue;
        }
        if (name == "weight") {
            weight_col = static_cast<int>(i);
            continue;
        }
        const auto it = units.find(name);
        if (it == units.end()) {
            throw DataError("missing unit for column '" + name + "' in " + units_path);
        }
        schema_of_field[i] = ds.schema.add(name, it->second);
    }
    if (label_col < 0) throw DataError("no 'label' column in " + data_path);
    ds.columns.resize(static_cast<size_t>(ds.schema.size()));

    for (size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto fields = split(lines[li], ',');
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(li) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()) + " in " +
                            data_path);
        }
        for (size_t i = 0; i < fields.size(); ++i) {
            const int sc = schema_of_field[i];
            if (sc >= 0) {
                const auto v = parse_double(trim(fields[i]));
                if (!v) throw DataError("bad value '" + fields[i] + "' at row " + std::to_string(li));
                ds.columns[static_cast<size_t>(sc)].push_back(*v);
            } else if (static_cast<int>(i) == label_col) {
                const std::string s = trim(fields[i]);
                if (s == "0") ds.labels.push_back(0);
                else if (s == "1") ds.labels.push_back(1);
                else throw DataError("bad label '" + s + "' at row " + std::to_string(li));
            } else {
                const auto v = parse_double(trim(fields[i]));
                if (!v || *v < 0.0) {
                    throw DataError("bad weight '" + fields[i] + "' at row " + std::to_string(li));
                }
                ds.weights.push_back(*v);
            }
        }
    }
    if (weight_col < 0) ds.weights.assign(ds.labels.size(), 1.0);
    ds.validate(false);
    return ds;
}

void save_csv(const Dataset& ds, const std::string& data_path, const std::string& units_path) {
    {
        std::ofstream out(units_path);
        if (!out) throw DataError("cannot write units file: " + units_path);
        for (int c = 0; c < ds.schema.size(); ++c) {
            out << ds.schema.at(c).name << '=' << unit_to_string(ds.schema.at(c).unit) << '\n';
        }
    }
    std::ofstream out(data_path);
    if (!out) throw DataError("cannot write data file: " + data_path);
    for (int c = 0; c < ds.schema.size(); ++c) out << ds.schema.at(c).name << ',';
    out << "label,weight\n";
    const size_t n = ds.n_rows();
    for (size_t i = 0; i < n; ++i) {
        for (size_t c = 0; c < ds.columns.size(); ++c) out << fmt_double(ds.columns[c][i]) << ',';
        out << static_cast<int>(ds.labels[i]) << ',' << fmt_double(ds.weights[i]) << '\n';
    }
}

// -------------------------------------------------------------- load_higgs

Dataset load_higgs(const std::string& path, const HiggsOptions& options) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw DataError("empty file: " + path);
    const auto header = split(lines[0], ',');
    int label_field = -1;
    int weight_field = -1;
    bool saw_event_id = false;
    std::vector<std::pair<int, std::string>> pri_fields; // field index, name
    for (size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        if (name == "EventId") saw_event_id = true;
        else if (name == "Label") label_field = static_cast<int>(i);
        else if (name == "Weight") weight_field = static_cast<int>(i);
        else if (name.rfind("PRI_", 0) == 0) pri_fields.emplace_back(static_cast<int>(i), name);
    }
    if (!saw_event_id || label_field < 0 || pri_fields.size() != 17) {
        throw DataError("unexpected header: not the challenge layout (" +
                        std::to_string(pri_fields.size()) + " PRI_ columns) in " + path);
    }

    auto unit_for = [&](const std::string& name) -> UnitClass {
        if (name == "PRI_jet_num") return UnitClass::dimless();
        if (name.size() >= 4 && name.compare(name.size() - 4, 4, "_phi") == 0) {
            return UnitClass::angle();
        }
        if (name.size() >= 4 && name.compare(name.size() - 4, 4, "_eta") == 0) {
            return options.eta_as_angle ? UnitClass::angle() : UnitClass::dimless();
        }
        return UnitClass::gev(1); // pt / met / sumet
    };

    Dataset ds;
    for (const auto& [field, name] : pri_fields) ds.schema.add(name, unit_for(name));
    ds.columns.resize(pri_fields.size());

    for (size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto fields = split(lines[li], ',');
        if (fields.size() != header.size()) {
            throw DataError("row " + std::to_string(li) + " field count mismatch in " + path);
        }
        for (size_t c = 0; c < pri_fields.size(); ++c) {
            const auto v = parse_double(trim(fields[static_cast<size_t>(pri_fields[c].first)]));
            if (!v) throw DataError("bad value at row " + std::to_string(li) + " in " + path);
            ds.columns[c].push_back(*v);
        }
        const std::string lab = trim(fields[static_cast<size_t>(label_field)]);
        if (lab == "s") ds.labels.push_back(1);
        else if (lab == "b") ds.labels.push_back(0);
        else throw DataError("bad label '" + lab + "' at row " + std::to_string(li));
        if (options.use_weights && weight_field >= 0) {
            const auto w = parse_double(trim(fields[static_cast<size_t>(weight_field)]));
            if (!w || *w < 0.0) throw DataError("bad weight at row " + std::to_string(li));
            ds.weights.push_back(*w);
        } else {
            ds.weights.push_back(1.0);
        }
    }

    if (options.subsample > 0 && static_cast<size_t>(options.subsample) < ds.n_rows()) {
        std::vector<int> idx(ds.n_rows());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(options.seed);
        shuffle_indices(idx, rng);
        idx.resize(static_cast<size_t>(options.subsample));
        std::sort(idx.begin(), idx.end());
        ds = ds.subset(idx);
    }

    if (options.impute_median) {
        // median of non-sentinel values, computed on the loaded rows
        for (size_t c = 0; c < ds.columns.size(); ++c) {
            std::vector<double> clean;
            for (double v : ds.columns[c]) {
                if (v != -999.0) clean.push_back(v);
            }
            if (clean.empty() || clean.size() == ds.columns[c].size()) continue;
            std::sort(clean.begin(), clean.end());
            const size_t m = clean.size();
            const double median =
                (m % 2 == 1) ? clean[m / 2] : 0.5 * (clean[m / 2 - 1] + clean[m / 2]);
            for (double& v : ds.columns[c]) {
                if (v == -999.0) v = median;
            }
        }
    }

    ds.validate(false);
    return ds;
}

// ----------------------------------------------------------- generate_dvcs

namespace {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

Vec3 spherical(double mag, double theta, double phi) {
    const double st = std::sin(theta);
    return {mag * st * std::cos(phi), mag * st * std::sin(phi), mag * std::cos(theta)};
}

double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

constexpr double kPi = 3.14159265358979323846;
constexpr double kPi0MassGev = 0.1349768;

// Isotropic two-photon decay of a pi0 with lab momentum p; returns the two
// photon momenta after the boost along the pion flight direction.
std::pair<Vec3, Vec3> decay_pi0(Vec3 p, Rng& rng) {
    const double m = kPi0MassGev;
    const double pmag = norm(p);
    const double e_pi = std::sqrt(pmag * pmag + m * m);
    const double gamma = e_pi / m;
    const double e_star = m / 2.0;
    // isotropic direction in the rest frame
    const double cos_t = rng.uniform(-1.0, 1.0);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const Vec3 k{e_star * sin_t * std::cos(phi), e_star * sin_t * std::sin(phi), e_star * cos_t};
    if (pmag < 1e-12) {
        return {k, {-k.x, -k.y, -k.z}};
    }
    const Vec3 n{p.x / pmag, p.y / pmag, p.z / pmag};
    const Vec3 beta_v{p.x / e_pi, p.y / e_pi, p.z / e_pi};
    auto boost = [&](Vec3 kk, double ek) {
        const double k_par = kk.x * n.x + kk.y * n.y + kk.z * n.z;
        const double k_par_lab = gamma * (k_par + norm(beta_v) * ek);
        const Vec3 perp{kk.x - k_par * n.x, kk.y - k_par * n.y, kk.z - k_par * n.z};
        return Vec3{perp.x + k_par_lab * n.x, perp.y + k_par_lab * n.y, perp.z + k_par_lab * n.z};
    };
    return {boost(k, e_star), boost({-k.x, -k.y, -k.z}, e_star)};
}

} // namespace

Dataset generate_dvcs(const DvcsGenParams& params) {
    if (params.n_events <= 0 || params.signal_fraction <= 0.0 || params.signal_fraction >= 1.0 ||
        params.smear_sigma_rel < 0.0 || params.beam_energy_gev <= 0.0) {
        throw ConfigError("invalid DVCS generator parameters");
    }
    Dataset ds;
    const char* names[9] = {"px_e", "py_e", "pz_e", "px_p", "py_p",
                            "pz_p", "px_g1", "py_g1", "pz_g1"};
    for (const char* n : names) ds.schema.add(n, UnitClass::gev(1));
    ds.columns.assign(9, {});
    for (auto& c : ds.columns) c.reserve(static_cast<size_t>(params.n_events));

    Rng rng(params.seed);
    const double eb = params.beam_energy_gev;
    const long n_signal = std::lround(static_cast<double>(params.n_events) * params.signal_fraction);

    for (long i = 0; i < params.n_events; ++i) {
        const bool is_signal = i < n_signal;
        // scattered electron
        const double e_el = rng.uniform(0.3, 0.85) * eb;
        const Vec3 pe = spherical(e_el, rng.uniform(kPi / 36.0, kPi / 5.0),
                                  rng.uniform(0.0, 2.0 * kPi));
        // real photon (signal) or pi0 (background) takes most of the rest
        const double e_x = rng.uniform(0.35, 0.9) * (eb - e_el);
        const Vec3 px = spherical(e_x, rng.uniform(kPi / 36.0, kPi / 4.0),
                                  rng.uniform(0.0, 2.0 * kPi));

        Vec3 gamma1;
        if (is_signal) {
            gamma1 = px;
        } else {
            auto [g1, g2] = decay_pi0(px, rng);
            gamma1 = norm(g1) >= norm(g2) ? g1 : g2;
        }
        // proton balances the full final state exactly
        const Vec3 pp = Vec3{0.0, 0.0, eb} - pe - px;

        Vec3 out[3] = {pe, pp, gamma1};
        if (params.smear_sigma_rel > 0.0) {
            for (auto& v : out) {
                v.x *= 1.0 + params.smear_sigma_rel * rng.gaussian();
                v.y *= 1.0 + params.smear_sigma_rel * rng.gaussian();
                v.z *= 1.0 + params.smear_sigma_rel * rng.gaussian();
            }
        }
        ds.columns[0].push_back(out[0].x);
        ds.columns[1].push_back(out[0].y);
        ds.columns[2].push_back(out[0].z);
        ds.columns[3].push_back(out[1].x);
        ds.columns[4].push_back(out[1].y);
        ds.columns[5].push_back(out[1].z);
        ds.columns[6].push_back(out[2].x);
        ds.columns[7].push_back(out[2].y);
        ds.columns[8].push_back(out[2].z);
        ds.labels.push_back(is_signal ? 1 : 0);
        ds.weights.push_back(1.0);
    }
    ds.validate(false);
    return ds;
}

// ------------------------------------------------------- train_test_split

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must be in (0, 1)");
    }
    std::vector<int> idx(ds.n_rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    shuffle_indices(idx, rng);
    const size_t n_train =
        static_cast<size_t>(std::floor(static_cast<double>(ds.n_rows()) * train_fraction));
    const std::span<const int> train_rows(idx.data(), n_train);
    const std::span<const int> test_rows(idx.data() + n_train, idx.size() - n_train);
    return {ds.subset(train_rows), ds.subset(test_rows)};
}

} // namespace fctree
