#include "hankelid/bench.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hankelid/estimators.hpp"
#include "hankelid/rng.hpp"

namespace hankelid {

namespace {

using nlohmann::json;

constexpr int kFitTaps = 35;

// Disjoint seed streams hanging off the master seed.
enum : std::uint64_t {
    kSystemStream = 1,
    kNoiseSystemStream = 2,
    kTrialStream = 3,
};

const std::set<std::string>& known_estimators() {
    static const std::set<std::string> names = {"LS",        "CV-FIR-N",   "CV-ARX-N",
                                                "SPe-FIR-N", "SPe-FIR-RN", "SPe-ARX-N"};
    return names;
}

EstimateResult run_estimator(const std::string& name, const DataRecord& data,
                             const ExperimentConfig& cfg) {
    const auto fir = [&] { return ModelStructure::fir(cfg.fir_n); };
    const auto arx = [&] { return ModelStructure::arx(cfg.arx_na, cfg.arx_nb); };
    if (name == "LS") {
        return estimate_least_squares(data, fir());
    }
    if (name == "CV-FIR-N") {
        return cv_nuclear(data, fir());
    }
    if (name == "CV-ARX-N") {
        return cv_nuclear(data, arx());
    }
    if (name == "SPe-FIR-N") {
        return sparseva_nuclear(data, fir(), EpsilonRule::Pec);
    }
    if (name == "SPe-FIR-RN") {
        return sparseva_reweighted(data, fir(), EpsilonRule::Pec);
    }
    if (name == "SPe-ARX-N") {
        return sparseva_nuclear(data, arx(), EpsilonRule::Pec);
    }
    throw std::invalid_argument("unknown estimator: " + name);
}

std::string format_double(const char* fmt, double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (cfg.num_systems < 1) fail("num_systems must be >= 1");
    if (cfg.order_min < 1 || cfg.order_max > 10 || cfg.order_min > cfg.order_max) {
        fail("orders must satisfy 1 <= order_min <= order_max <= 10");
    }
    if (!(cfg.pole_radius_max > 0.0 && cfg.pole_radius_max < 1.0)) {
        fail("pole_radius_max must lie in (0, 1)");
    }
    if (cfg.fir_n <= 0 || cfg.fir_n % 2 == 0) fail("fir_n must be a positive odd integer");
    if (cfg.arx_na <= 0 || cfg.arx_na % 2 == 0) fail("arx_na must be a positive odd integer");
    if (cfg.arx_nb <= 0 || cfg.arx_nb % 2 == 0) fail("arx_nb must be a positive odd integer");
    const int max_lag = std::max(cfg.fir_n, std::max(cfg.arx_na, cfg.arx_nb));
    if (cfg.data_length <= max_lag) fail("data_length must exceed the largest model lag");
    if (cfg.noise_kind != "white" && cfg.noise_kind != "coloured") {
        fail("noise_kind must be \"white\" or \"coloured\"");
    }
    if (cfg.snr_levels_db.empty()) fail("snr_levels_db must be nonempty");
    if (cfg.realizations_per_level < 1) fail("realizations_per_level must be >= 1");
    if (cfg.estimators.empty()) fail("estimator list must be nonempty");
    for (const auto& name : cfg.estimators) {
        if (!known_estimators().count(name)) fail("unknown estimator \"" + name + "\"");
    }
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["num_systems"] = c.num_systems;
    j["order_min"] = c.order_min;
    j["order_max"] = c.order_max;
    j["pole_radius_max"] = c.pole_radius_max;
    j["data_length"] = c.data_length;
    j["fir_n"] = c.fir_n;
    j["arx_na"] = c.arx_na;
    j["arx_nb"] = c.arx_nb;
    j["noise_kind"] = c.noise_kind;
    j["snr_levels_db"] = c.snr_levels_db;
    j["realizations_per_level"] = c.realizations_per_level;
    j["estimators"] = c.estimators;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    j["record_timing"] = c.record_timing;
    j["version"] = kVersion;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    const ExperimentConfig defaults;
    static const std::set<std::string> keys = {
        "num_systems",   "order_min",  "order_max",  "pole_radius_max",
        "data_length",   "fir_n",      "arx_na",     "arx_nb",
        "noise_kind",    "snr_levels_db", "realizations_per_level", "estimators",
        "master_seed",   "output_dir", "record_timing", "version"};
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) {
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
        }
    }
    ExperimentConfig c;
    try {
        c.num_systems = j.value("num_systems", defaults.num_systems);
        c.order_min = j.value("order_min", defaults.order_min);
        c.order_max = j.value("order_max", defaults.order_max);
        c.pole_radius_max = j.value("pole_radius_max", defaults.pole_radius_max);
        c.data_length = j.value("data_length", defaults.data_length);
        c.fir_n = j.value("fir_n", defaults.fir_n);
        c.arx_na = j.value("arx_na", defaults.arx_na);
        c.arx_nb = j.value("arx_nb", defaults.arx_nb);
        c.noise_kind = j.value("noise_kind", defaults.noise_kind);
        c.snr_levels_db = j.value("snr_levels_db", defaults.snr_levels_db);
        c.realizations_per_level = j.value("realizations_per_level", defaults.realizations_per_level);
        c.estimators = j.value("estimators", defaults.estimators);
        c.master_seed = j.value("master_seed", defaults.master_seed);
        c.output_dir = j.value("output_dir", defaults.output_dir);
        c.record_timing = j.value("record_timing", defaults.record_timing);
    } catch (const json::type_error& e) {
        throw std::invalid_argument(std::string("config: wrong field type: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config: cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << config_to_json(config);
}

std::vector<TrialRecord> run_suite(const ExperimentConfig& cfg, int jobs) {
    validate_config(cfg);

    const int span = cfg.order_max - cfg.order_min + 1;
    std::vector<LinearSystem> systems;
    std::vector<std::optional<LinearSystem>> noise_systems;
    systems.reserve(static_cast<std::size_t>(cfg.num_systems));
    noise_systems.reserve(static_cast<std::size_t>(cfg.num_systems));
    const bool coloured = cfg.noise_kind == "coloured";
    for (int i = 0; i < cfg.num_systems; ++i) {
        const int order = cfg.order_min + i % span;
        Rng rng_g(Rng::derive(Rng::derive(cfg.master_seed, kSystemStream), static_cast<std::uint64_t>(i)));
        systems.push_back(generate_random_system(order, cfg.pole_radius_max, rng_g));
        if (coloured) {
            Rng rng_h(Rng::derive(Rng::derive(cfg.master_seed, kNoiseSystemStream),
                                  static_cast<std::uint64_t>(i)));
            LinearSystem h = generate_random_system(order, cfg.pole_radius_max, rng_h);
            h.gain /= impulse_response(h, 200).norm();  // unit-energy noise colour
            noise_systems.emplace_back(std::move(h));
        } else {
            noise_systems.emplace_back(std::nullopt);
        }
    }

    const int levels = static_cast<int>(cfg.snr_levels_db.size());
    const int reals = cfg.realizations_per_level;
    const int n_est = static_cast<int>(cfg.estimators.size());
    const int n_tasks = cfg.num_systems * levels * reals;
    std::vector<TrialRecord> records(static_cast<std::size_t>(n_tasks) * n_est);

    auto run_task = [&](int task) {
        const int realization = task % reals;
        const int level = (task / reals) % levels;
        const int sys_id = task / (reals * levels);
        const std::uint64_t seed =
            Rng::derive(Rng::derive(cfg.master_seed, kTrialStream), static_cast<std::uint64_t>(task));

        const LinearSystem& g_sys = systems[static_cast<std::size_t>(sys_id)];
        const auto& h_sys = noise_systems[static_cast<std::size_t>(sys_id)];

        bool data_ok = true;
        DataRecord data;
        Vec g_true;
        try {
            Rng rng(seed);
            const Vec u = lowpass_input(cfg.data_length, rng);
            const double sigma = calibrate_noise(g_sys, h_sys, u, cfg.snr_levels_db[level]);
            data = simulate(g_sys, h_sys, u, sigma, rng);
            data.seed = seed;
            g_true = impulse_response(g_sys, kFitTaps);
        } catch (const std::exception&) {
            data_ok = false;
        }

        for (int e = 0; e < n_est; ++e) {
            TrialRecord rec;
            rec.system_id = sys_id;
            rec.order = g_sys.order();
            rec.snr_db = cfg.snr_levels_db[level];
            rec.realization = realization;
            rec.estimator = cfg.estimators[static_cast<std::size_t>(e)];
            rec.seed = seed;
            rec.fit = std::numeric_limits<double>::quiet_NaN();
            rec.converged = false;
            if (data_ok) {
                try {
                    const EstimateResult est = run_estimator(rec.estimator, data, cfg);
                    rec.fit = fit(g_true, est.impulse(kFitTaps));
                    rec.wall_s = cfg.record_timing ? est.wall_seconds : 0.0;
                    rec.converged = true;
                    for (const auto& rep : est.reports) {
                        rec.converged = rec.converged && rep.converged;
                    }
                } catch (const std::exception&) {
                    rec.fit = std::numeric_limits<double>::quiet_NaN();
                    rec.converged = false;
                }
            }
            records[static_cast<std::size_t>(task) * n_est + e] = std::move(rec);
        }
    };

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (int task = 0; task < n_tasks; ++task) {
            run_task(task);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (int task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1)) {
                    run_task(task);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return records;
}

void write_records_csv(const std::vector<TrialRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << "system_id,order,snr_db,realization,estimator,fit,wall_s,converged,seed\n";
    for (const auto& r : records) {
        out << r.system_id << ',' << r.order << ',' << format_double("%g", r.snr_db) << ','
            << r.realization << ',' << r.estimator << ',' << format_double("%.6f", r.fit) << ','
            << format_double("%.6f", r.wall_s) << ',' << (r.converged ? 1 : 0) << ',' << r.seed
            << '\n';
    }
}

std::vector<TrialRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("records file is empty: " + path);
    }
    std::vector<TrialRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 9) {
            throw std::runtime_error("malformed record line: " + line);
        }
        TrialRecord r;
        r.system_id = std::stoi(fields[0]);
        r.order = std::stoi(fields[1]);
        r.snr_db = std::stod(fields[2]);
        r.realization = std::stoi(fields[3]);
        r.estimator = fields[4];
        r.fit = fields[5] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(fields[5]);
        r.wall_s = std::stod(fields[6]);
        r.converged = fields[7] == "1";
        r.seed = std::stoull(fields[8]);
        records.push_back(std::move(r));
    }
    return records;
}

ReportTables report(const std::vector<TrialRecord>& records) {
    if (records.empty()) {
        throw std::invalid_argument("report: no records");
    }
    ReportTables t;
    for (const auto& r : records) {
        if (std::find(t.levels.begin(), t.levels.end(), r.snr_db) == t.levels.end()) {
            t.levels.push_back(r.snr_db);
        }
        if (std::find(t.estimators.begin(), t.estimators.end(), r.estimator) == t.estimators.end()) {
            t.estimators.push_back(r.estimator);
        }
    }

    const std::size_t nl = t.levels.size();
    const std::size_t ne = t.estimators.size();
    std::vector<std::vector<std::vector<double>>> fits(nl, std::vector<std::vector<double>>(ne));
    std::vector<std::vector<double>> walls(ne);
    for (const auto& r : records) {
        const auto li = static_cast<std::size_t>(
            std::find(t.levels.begin(), t.levels.end(), r.snr_db) - t.levels.begin());
        const auto ei = static_cast<std::size_t>(
            std::find(t.estimators.begin(), t.estimators.end(), r.estimator) - t.estimators.begin());
        if (std::isfinite(r.fit)) {
            fits[li][ei].push_back(r.fit);
        }
        walls[ei].push_back(r.wall_s);
    }

    t.mean_fit.assign(nl, std::vector<double>(ne, std::numeric_limits<double>::quiet_NaN()));
    t.cells.assign(nl, std::vector<DistSummary>(ne));
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t e = 0; e < ne; ++e) {
            if (!fits[l][e].empty()) {
                t.cells[l][e] = summarize(fits[l][e]);
                t.mean_fit[l][e] = t.cells[l][e].mean;
            }
        }
    }
    t.mean_wall.assign(ne, 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        double acc = 0.0;
        for (double w : walls[e]) {
            acc += w;
        }
        t.mean_wall[e] = walls[e].empty() ? 0.0 : acc / static_cast<double>(walls[e].size());
    }
    return t;
}

void write_report_csv(const ReportTables& t, const std::string& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir + "/fit_table.csv");
        if (!out) {
            throw std::runtime_error("cannot write fit_table.csv in " + dir);
        }
        out << "snr_db";
        for (const auto& e : t.estimators) {
            out << ',' << e;
        }
        out << '\n';
        for (std::size_t l = 0; l < t.levels.size(); ++l) {
            out << format_double("%g", t.levels[l]);
            for (std::size_t e = 0; e < t.estimators.size(); ++e) {
                out << ',' << format_double("%.2f", t.mean_fit[l][e]);
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(dir + "/time_table.csv");
        if (!out) {
            throw std::runtime_error("cannot write time_table.csv in " + dir);
        }
        out << "estimator,mean_wall_s\n";
        for (std::size_t e = 0; e < t.estimators.size(); ++e) {
            out << t.estimators[e] << ',' << format_double("%.4f", t.mean_wall[e]) << '\n';
        }
    }
    {
        std::ofstream out(dir + "/boxplot.csv");
        if (!out) {
            throw std::runtime_error("cannot write boxplot.csv in " + dir);
        }
        out << "snr_db,estimator,min,q1,median,q3,max,mean,count,outliers\n";
        for (std::size_t l = 0; l < t.levels.size(); ++l) {
            for (std::size_t e = 0; e < t.estimators.size(); ++e) {
                const DistSummary& s = t.cells[l][e];
                out << format_double("%g", t.levels[l]) << ',' << t.estimators[e] << ','
                    << format_double("%.4f", s.min) << ',' << format_double("%.4f", s.q1) << ','
                    << format_double("%.4f", s.median) << ',' << format_double("%.4f", s.q3) << ','
                    << format_double("%.4f", s.max) << ',' << format_double("%.4f", s.mean) << ','
                    << s.count << ',';
                for (std::size_t k = 0; k < s.outliers.size(); ++k) {
                    out << (k ? ";" : "") << format_double("%.4f", s.outliers[k]);
                }
                out << '\n';
            }
        }
    }
}

}  // namespace hankelid
