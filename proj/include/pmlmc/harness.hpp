#ifndef PMLMC_HARNESS_HPP
#define PMLMC_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmlmc/allocation.hpp"
#include "pmlmc/errors.hpp"
#include "pmlmc/estimators.hpp"
#include "pmlmc/mesh.hpp"
#include "pmlmc/random_field.hpp"
#include "pmlmc/transfer.hpp"

namespace pmlmc {

// Flat key-value experiment configuration. Precedence is CLI flag over file
// over default; the CLI applies overrides after the file is parsed.
struct experiment_config {
    int dim = 1;
    double sigma2 = 1.0;
    double corr_length = 0.1;
    double mean_log = 0.0;
    int modes = 100;
    double kl_dx = 1.0 / 512.0;
    std::string kl_cache;

    double base_h = 1.0 / 16.0; // 1D ladder base
    int base_n = 8;             // 2D structured ladder base (n x n cells)
    std::string mesh_file;      // 2D external base mesh; wins over base_n
    int levels = 2;

    std::string method = "pmlmc";   // mc | slmc | mlmc | pmlmc
    std::string transfer = "interp"; // interp | h1
    std::vector<std::int64_t> samples = {50, 50}; // N_1..N_L
    std::vector<std::int64_t> sweep;              // optional totals for an error-vs-N table
    double eps = 0.0;                             // > 0: plan counts via the allocator
    std::int64_t pilots = 16;

    std::uint64_t seed = 1;
    std::string reference; // path to a persisted mean field
    std::string out = "out";
    bool export_mean = false;

    friend bool operator==(const experiment_config&, const experiment_config&) = default;

    void validate() const {
        require(dim == 1 || dim == 2, "config: dim must be 1 or 2");
        require(sigma2 > 0.0, "config: sigma2 must be positive");
        require(corr_length > 0.0, "config: lambda must be positive");
        require(modes >= 0, "config: modes must be nonnegative");
        require(kl_dx > 0.0, "config: kl_dx must be positive");
        require(levels >= 1, "config: levels must be >= 1");
        require(method == "mc" || method == "slmc" || method == "mlmc" || method == "pmlmc",
                "config: method must be one of mc, slmc, mlmc, pmlmc");
        require(transfer == "interp" || transfer == "h1",
                "config: transfer must be interp or h1");
        require(eps >= 0.0, "config: eps must be nonnegative");
        require(pilots >= 10, "config: pilots must be >= 10");
        require(!out.empty(), "config: out directory required");
        for (auto n : samples) require(n >= 0, "config: sample counts must be nonnegative");
        for (auto n : sweep) require(n >= 1, "config: sweep totals must be positive");
    }

    transfer_mode transfer_mode_enum() const {
        return transfer == "h1" ? transfer_mode::h1 : transfer_mode::interpolation;
    }
    bool is_multilevel() const { return method == "mlmc" || method == "pmlmc"; }
};

// --- config file format -------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::int64_t> parse_count_list(const std::string& s, const std::string& key) {
    std::vector<std::int64_t> out;
    std::istringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stoll(cell));
        } catch (const std::exception&) {
            throw config_error("config: bad integer '" + cell + "' in " + key);
        }
    }
    return out;
}

inline std::string format_count_list(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        require(trim(v.substr(pos)).empty(), "config: trailing characters in " + key);
        return x;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        throw config_error("config: bad number '" + v + "' for key " + key);
    }
}

inline long long parse_int(const std::string& v, const std::string& key) {
    try {
        return std::stoll(v);
    } catch (const std::exception&) {
        throw config_error("config: bad integer '" + v + "' for key " + key);
    }
}

} // namespace detail

inline void apply_config_key(experiment_config& cfg, const std::string& key,
                             const std::string& value) {
    using namespace detail;
    if (key == "dim") cfg.dim = int(parse_int(value, key));
    else if (key == "sigma2") cfg.sigma2 = parse_double(value, key);
    else if (key == "lambda") cfg.corr_length = parse_double(value, key);
    else if (key == "mean_log") cfg.mean_log = parse_double(value, key);
    else if (key == "modes") cfg.modes = int(parse_int(value, key));
    else if (key == "kl_dx") cfg.kl_dx = parse_double(value, key);
    else if (key == "kl_cache") cfg.kl_cache = value;
    else if (key == "base_h") cfg.base_h = parse_double(value, key);
    else if (key == "base_n") cfg.base_n = int(parse_int(value, key));
    else if (key == "mesh_file") cfg.mesh_file = value;
    else if (key == "levels") cfg.levels = int(parse_int(value, key));
    else if (key == "method") cfg.method = value;
    else if (key == "transfer") cfg.transfer = value;
    else if (key == "samples") cfg.samples = parse_count_list(value, key);
    else if (key == "sweep") cfg.sweep = parse_count_list(value, key);
    else if (key == "eps") cfg.eps = parse_double(value, key);
    else if (key == "pilots") cfg.pilots = parse_int(value, key);
    else if (key == "seed") cfg.seed = std::uint64_t(std::stoull(value));
    else if (key == "reference") cfg.reference = value;
    else if (key == "out") cfg.out = value;
    else if (key == "export_mean") cfg.export_mean = parse_int(value, key) != 0;
    else throw config_error("config: unknown key '" + key + "'");
}

inline experiment_config parse_config_text(const std::string& text) {
    experiment_config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos,
                "config: line " + std::to_string(lineno) + " is not 'key = value'");
        apply_config_key(cfg, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline experiment_config parse_config_file(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

inline std::string serialize_config(const experiment_config& cfg) {
    char buf[256];
    std::string s;
    const auto add = [&s](const std::string& line) { s += line + "\n"; };
    const auto addf = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g", key, v);
        add(buf);
    };
    add("dim = " + std::to_string(cfg.dim));
    addf("sigma2", cfg.sigma2);
    addf("lambda", cfg.corr_length);
    addf("mean_log", cfg.mean_log);
    add("modes = " + std::to_string(cfg.modes));
    addf("kl_dx", cfg.kl_dx);
    if (!cfg.kl_cache.empty()) add("kl_cache = " + cfg.kl_cache);
    addf("base_h", cfg.base_h);
    add("base_n = " + std::to_string(cfg.base_n));
    if (!cfg.mesh_file.empty()) add("mesh_file = " + cfg.mesh_file);
    add("levels = " + std::to_string(cfg.levels));
    add("method = " + cfg.method);
    add("transfer = " + cfg.transfer);
    add("samples = " + detail::format_count_list(cfg.samples));
    if (!cfg.sweep.empty()) add("sweep = " + detail::format_count_list(cfg.sweep));
    addf("eps", cfg.eps);
    add("pilots = " + std::to_string(cfg.pilots));
    add("seed = " + std::to_string(cfg.seed));
    if (!cfg.reference.empty()) add("reference = " + cfg.reference);
    add("out = " + cfg.out);
    add("export_mean = " + std::to_string(cfg.export_mean ? 1 : 0));
    return s;
}

// --- construction from config --------------------------------------------------

inline random_field_spec field_spec_of(const experiment_config& cfg) {
    random_field_spec spec;
    spec.sigma2 = cfg.sigma2;
    spec.corr_length = cfg.corr_length;
    spec.dimension = cfg.dim;
    spec.modes = cfg.modes;
    const double m = cfg.mean_log;
    if (m != 0.0) spec.mean_log_field = [m](const point&) { return m; };
    return spec;
}

inline kl_basis obtain_kl_basis(const experiment_config& cfg) {
    const random_field_spec spec = field_spec_of(cfg);
    spec.validate();
    if (!cfg.kl_cache.empty() && std::filesystem::exists(cfg.kl_cache)) {
        kl_basis kb = load_kl_basis(cfg.kl_cache);
        require(kb.spec.sigma2 == cfg.sigma2 && kb.spec.corr_length == cfg.corr_length &&
                    kb.spec.dimension == cfg.dim && kb.spec.modes == cfg.modes &&
                    kb.dx == cfg.kl_dx,
                "kl cache " + cfg.kl_cache +
                    " was built for different field parameters; rebuild with `pmlmc kl-build`");
        kb.spec = spec; // reattach the mean function
        return kb;
    }
    kl_basis kb = build_kl_basis(spec, cfg.kl_dx);
    if (!cfg.kl_cache.empty()) save_kl_basis(cfg.kl_cache, kb);
    return kb;
}

inline hier_mesh build_mesh_ladder(const experiment_config& cfg, int n_levels) {
    hier_mesh mesh = [&] {
        if (cfg.dim == 1) return hier_mesh::uniform_1d(cfg.base_h);
        if (!cfg.mesh_file.empty()) return hier_mesh::from_level(read_mesh_file(cfg.mesh_file));
        return hier_mesh::structured_unit_square(cfg.base_n);
    }();
    require(mesh.dim() == cfg.dim, "config: mesh dimension does not match dim");
    mesh.refine_to(n_levels);
    return mesh;
}

inline darcy_hierarchy build_hierarchy(const experiment_config& cfg) {
    const int extra = cfg.eps > 0.0 ? 1 : 0; // pilot reference level for the allocator
    return darcy_hierarchy(build_mesh_ladder(cfg, cfg.levels + extra), obtain_kl_basis(cfg));
}

// --- reference persistence ------------------------------------------------------

// A persisted MC mean field: metadata plus nodal values for one mesh level.
// The field-spec hash refuses reuse against a different field.
inline void save_reference(const std::string& path, const experiment_config& cfg,
                           std::int64_t n_ref, const fem_solution& mean) {
    std::ofstream os(path);
    require(bool(os), "cannot open reference file for writing: " + path);
    char buf[128];
    os << "# pmlmc reference v1\n";
    std::snprintf(buf, sizeof buf, "spec_hash,%016llx\n",
                  (unsigned long long)field_spec_hash(field_spec_of(cfg), cfg.kl_dx));
    os << buf;
    os << "seed," << cfg.seed << "\n";
    os << "n_ref," << n_ref << "\n";
    os << "nvert," << mean.values.size() << "\n";
    os << "values\n";
    for (int i = 0; i < int(mean.values.size()); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", mean.values[i]);
        os << buf;
    }
}

// Load a reference and locate the hierarchy level it lives on (at or above
// `min_mesh_idx`).
inline fem_solution load_reference(const std::string& path, const experiment_config& cfg,
                                   const darcy_hierarchy& h, int min_mesh_idx) {
    std::ifstream is(path);
    require(bool(is), "missing reference '" + path +
                          "'; generate it first: pmlmc reference --config <config> --out <dir>");
    std::string line;
    std::getline(is, line);
    require(line == "# pmlmc reference v1", "reference file has unknown format: " + path);
    std::uint64_t hash = 0;
    std::int64_t nvert = 0;
    while (std::getline(is, line) && line != "values") {
        const auto comma = line.find(',');
        require(comma != std::string::npos, "reference file: bad metadata line");
        const std::string key = line.substr(0, comma), val = line.substr(comma + 1);
        if (key == "spec_hash") hash = std::stoull(val, nullptr, 16);
        if (key == "nvert") nvert = std::stoll(val);
    }
    require(hash == field_spec_hash(field_spec_of(cfg), cfg.kl_dx),
            "reference " + path + " was built for a different field spec; rebuild it");
    fem_solution ref;
    ref.values.resize(nvert);
    for (std::int64_t i = 0; i < nvert; ++i) {
        require(bool(std::getline(is, line)), "reference file: truncated values");
        ref.values[i] = std::stod(line);
    }
    ref.level = -1;
    for (int i = min_mesh_idx; i < h.n_levels(); ++i)
        if (h.mesh().level(i).n_vertices() == nvert) {
            ref.level = i;
            break;
        }
    require(ref.level >= 0,
            "reference " + path + " does not match any mesh level at or above the finest");
    return ref;
}

// MC mean at the finest configured level, persisted with metadata.
inline fem_solution build_reference(const experiment_config& cfg, std::int64_t n_ref,
                                    const std::string& path) {
    cfg.validate();
    require(n_ref >= 1, "build_reference: n_ref must be >= 1");
    darcy_hierarchy h(build_mesh_ladder(cfg, cfg.levels), obtain_kl_basis(cfg));
    const auto res = mc_estimate(h, cfg.seed, cfg.levels, n_ref);
    save_reference(path, cfg, n_ref, res.mean);
    return res.mean;
}

// --- experiment runs --------------------------------------------------------------

struct run_row {
    std::string method;
    std::int64_t n_total = 0;
    std::int64_t n_fine = 0; // N_L (equals N for single-level methods)
    double h1_error = std::numeric_limits<double>::quiet_NaN();
    double ops = 0.0;
    std::int64_t solves = 0;
    double wall_s = 0.0;
    std::vector<level_stats<fem_solution>> levels;
    double variance_model = 0.0;
};

namespace detail {

inline std::vector<std::int64_t> counts_for_run(const experiment_config& cfg,
                                                std::optional<std::int64_t> sweep_total) {
    if (!cfg.is_multilevel()) {
        std::int64_t n = sweep_total ? *sweep_total
                                     : (cfg.samples.empty() ? 0 : cfg.samples.front());
        require(n >= 1, "config: samples must provide one positive count for " + cfg.method);
        return {n};
    }
    require(int(cfg.samples.size()) == cfg.levels,
            "config: samples must list one count per level (got " +
                std::to_string(cfg.samples.size()) + ", need " + std::to_string(cfg.levels) +
                ")");
    std::vector<std::int64_t> counts = cfg.samples;
    if (sweep_total) {
        std::int64_t upper = 0;
        for (int l = 1; l < cfg.levels; ++l) upper += counts[l];
        counts[0] = *sweep_total - upper;
        require(counts[0] >= 1, "config: sweep total " + std::to_string(*sweep_total) +
                                    " leaves no samples for level 1");
    }
    for (auto n : counts) require(n >= 1, "config: per-level counts must be >= 1");
    return counts;
}

inline run_row make_row(const estimator_result<fem_solution>& res, const std::string& method,
                        std::int64_t n_total) {
    run_row row;
    row.method = method;
    row.n_total = n_total;
    row.n_fine = res.levels.back().n;
    row.ops = res.cost.ops;
    row.solves = res.cost.solves;
    row.wall_s = res.wall_seconds;
    row.levels = res.levels;
    row.variance_model = res.variance_model;
    return row;
}

} // namespace detail

// One estimator run as configured (allocation applied when eps > 0).
inline estimator_result<fem_solution> run_estimator(const experiment_config& cfg,
                                                    const darcy_hierarchy& h,
                                                    const std::vector<std::int64_t>& counts,
                                                    std::vector<rng_key>* audit = nullptr) {
    if (cfg.method == "mlmc") return mlmc_estimate(h, cfg.seed, counts, audit);
    if (cfg.method == "pmlmc")
        return pmlmc_estimate(h, cfg.seed, counts, cfg.transfer_mode_enum(), audit);
    return mc_estimate(h, cfg.seed, cfg.levels, counts.front(), audit);
}

struct experiment_output {
    std::vector<run_row> rows;
    std::vector<std::int64_t> allocated_counts; // when eps > 0
};

// Full experiment: build (or load) the KL basis and mesh ladder, run the
// configured estimator over the sweep, write the result tables. Every output
// byte except wall-clock columns is a function of (config, seed).
inline experiment_output run_experiment(const experiment_config& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out);
    darcy_hierarchy h = build_hierarchy(cfg);

    std::optional<fem_solution> reference;
    if (!cfg.reference.empty())
        reference = load_reference(cfg.reference, cfg, h, cfg.levels - 1);

    experiment_output out;
    std::vector<std::vector<std::int64_t>> runs;
    if (cfg.eps > 0.0) {
        if (cfg.is_multilevel()) {
            const error_model m = estimate_error_model(h, cfg.seed, cfg.levels, cfg.levels + 1,
                                                       cfg.pilots, cfg.transfer_mode_enum());
            const allocation_plan plan = pmlmc_allocation(cfg.eps, m);
            out.allocated_counts = plan.n;
            runs.push_back(plan.n);
        } else {
            // single-level count from the pilot norm estimate
            const error_model m = estimate_error_model(h, cfg.seed, cfg.levels, cfg.levels + 1,
                                                       cfg.pilots);
            const std::int64_t n = mc_sample_count(cfg.eps, m.norm_u);
            out.allocated_counts = {n};
            runs.push_back({n});
        }
    } else if (!cfg.sweep.empty()) {
        for (auto total : cfg.sweep) runs.push_back(detail::counts_for_run(cfg, total));
    } else {
        runs.push_back(detail::counts_for_run(cfg, std::nullopt));
    }

    for (const auto& counts : runs) {
        auto res = run_estimator(cfg, h, counts);
        res.method = cfg.method;
        std::int64_t n_total = 0;
        for (auto n : counts) n_total += n;
        run_row row = detail::make_row(res, cfg.method, n_total);
        if (reference) row.h1_error = error_vs_reference(h, res, *reference);
        out.rows.push_back(std::move(row));
        if (cfg.export_mean) {
            char name[128];
            std::snprintf(name, sizeof name, "mean_field_%s_%lld.csv", cfg.method.c_str(),
                          (long long)n_total);
            write_solution_csv((std::filesystem::path(cfg.out) / name).string(),
                               h.mesh().level(res.mean.level), res.mean);
        }
    }

    // results.csv: per-level statistics, no wall-clock column
    {
        std::ofstream os(std::filesystem::path(cfg.out) / "results.csv");
        require(bool(os), "cannot write results.csv");
        char buf[256];
        os << "method,n_total,level,n_l,sample_var,ops,solves\n";
        for (const auto& row : out.rows)
            for (const auto& st : row.levels) {
                std::snprintf(buf, sizeof buf, "%s,%lld,%d,%lld,%.17g,%.17g,%lld\n",
                              row.method.c_str(), (long long)row.n_total, st.level,
                              (long long)st.n, st.sample_var, st.cost.ops,
                              (long long)st.cost.solves);
                os << buf;
            }
    }
    // errors.csv: the error-vs-N table
    {
        std::ofstream os(std::filesystem::path(cfg.out) / "errors.csv");
        require(bool(os), "cannot write errors.csv");
        char buf[256];
        if (reference) {
            os << "method,n_total,h1_error,ops\n";
            for (const auto& row : out.rows) {
                std::snprintf(buf, sizeof buf, "%s,%lld,%.17g,%.17g\n", row.method.c_str(),
                              (long long)row.n_total, row.h1_error, row.ops);
                os << buf;
            }
        } else {
            os << "# h1_error omitted: no reference supplied\n";
            os << "method,n_total,ops\n";
            for (const auto& row : out.rows) {
                std::snprintf(buf, sizeof buf, "%s,%lld,%.17g\n", row.method.c_str(),
                              (long long)row.n_total, row.ops);
                os << buf;
            }
        }
    }
    // cost.csv: operation counts plus wall time
    {
        std::ofstream os(std::filesystem::path(cfg.out) / "cost.csv");
        require(bool(os), "cannot write cost.csv");
        char buf[256];
        os << "method,n_total,ops,solves,wall_s\n";
        for (const auto& row : out.rows) {
            std::snprintf(buf, sizeof buf, "%s,%lld,%.17g,%lld,%.6g\n", row.method.c_str(),
                          (long long)row.n_total, row.ops, (long long)row.solves, row.wall_s);
            os << buf;
        }
    }
    // result.json: full structured output
    {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& row : out.rows) {
            nlohmann::json r{{"method", row.method},
                             {"n_total", row.n_total},
                             {"n_fine", row.n_fine},
                             {"ops", row.ops},
                             {"solves", row.solves},
                             {"wall_s", row.wall_s},
                             {"seed", cfg.seed},
                             {"transfer", cfg.transfer},
                             {"variance_model", row.variance_model}};
            if (!std::isnan(row.h1_error)) r["h1_error"] = row.h1_error;
            nlohmann::json lv = nlohmann::json::array();
            for (const auto& st : row.levels)
                lv.push_back({{"level", st.level},
                              {"n", st.n},
                              {"sample_var", st.sample_var},
                              {"ops", st.cost.ops},
                              {"solves", st.cost.solves},
                              {"rejects", st.cost.rejects}});
            r["levels"] = lv;
            if (!out.allocated_counts.empty()) r["allocated_counts"] = out.allocated_counts;
            j.push_back(r);
        }
        std::ofstream os(std::filesystem::path(cfg.out) / "result.json");
        require(bool(os), "cannot write result.json");
        os << j.dump(2) << "\n";
    }
    return out;
}

// --- report ------------------------------------------------------------------------

struct report_row {
    std::string method;
    std::int64_t n = 0;
    std::int64_t n2 = 0;
    double h1_error = std::numeric_limits<double>::quiet_NaN();
    double op_count = 0.0;
    double wall_s = 0.0;
};

// Long-format table sorted by (method, N); PMLMC rows that have an MLMC
// partner at the same (N, N2) carry the op-count ratio.
inline void report_tables(std::vector<report_row> rows, std::ostream& os) {
    require(!rows.empty(), "report: no result rows");
    std::sort(rows.begin(), rows.end(), [](const report_row& a, const report_row& b) {
        if (a.method != b.method) return a.method < b.method;
        if (a.n != b.n) return a.n < b.n;
        return a.n2 < b.n2;
    });
    bool have_error = false;
    for (const auto& r : rows) have_error = have_error || !std::isnan(r.h1_error);
    if (!have_error) os << "# h1_error omitted: no reference supplied\n";
    os << (have_error ? "method,n,n2,h1_error,op_count,wall_s,ratio_pmlmc_mlmc\n"
                      : "method,n,n2,op_count,wall_s,ratio_pmlmc_mlmc\n");
    char buf[256];
    for (const auto& r : rows) {
        double ratio = std::numeric_limits<double>::quiet_NaN();
        if (r.method == "pmlmc") {
            for (const auto& m : rows)
                if (m.method == "mlmc" && m.n == r.n && m.n2 == r.n2 && m.op_count > 0.0)
                    ratio = r.op_count / m.op_count;
        }
        std::string line = r.method + "," + std::to_string(r.n) + "," + std::to_string(r.n2);
        if (have_error) {
            if (std::isnan(r.h1_error)) {
                line += ",";
            } else {
                std::snprintf(buf, sizeof buf, ",%.17g", r.h1_error);
                line += buf;
            }
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.6g", r.op_count, r.wall_s);
        line += buf;
        if (std::isnan(ratio)) {
            line += ",";
        } else {
            std::snprintf(buf, sizeof buf, ",%.17g", ratio);
            line += buf;
        }
        os << line << "\n";
    }
}

inline std::vector<report_row> load_report_rows(const std::vector<std::string>& json_paths) {
    std::vector<report_row> rows;
    for (const auto& p : json_paths) {
        std::ifstream is(p);
        require(bool(is), "cannot open result file: " + p);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const std::exception& e) {
            throw config_error("bad result json " + p + ": " + e.what());
        }
        for (const auto& r : j) {
            report_row row;
            row.method = r.at("method").get<std::string>();
            row.n = r.at("n_total").get<std::int64_t>();
            row.n2 = r.at("n_fine").get<std::int64_t>();
            if (r.contains("h1_error")) row.h1_error = r.at("h1_error").get<double>();
            row.op_count = r.at("ops").get<double>();
            row.wall_s = r.at("wall_s").get<double>();
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace pmlmc

#endif
