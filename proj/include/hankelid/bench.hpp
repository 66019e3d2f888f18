#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hankelid/metrics.hpp"
#include "hankelid/model.hpp"

namespace hankelid {

inline constexpr const char* kVersion = "0.1.0";

/// Monte Carlo benchmark grid: systems x noise levels x realizations, each
/// cell estimated by every configured estimator.
struct ExperimentConfig {
    int num_systems = 150;
    int order_min = 1;
    int order_max = 10;
    double pole_radius_max = 0.9;
    int data_length = 450;  // N
    int fir_n = 35;
    int arx_na = 35;
    int arx_nb = 35;
    std::string noise_kind = "white";  // "white" or "coloured"
    std::vector<double> snr_levels_db = {20.0, 10.0, 6.0, 3.0};
    int realizations_per_level = 3;
    std::vector<std::string> estimators = {"LS",        "CV-FIR-N",   "CV-ARX-N",
                                           "SPe-FIR-N", "SPe-FIR-RN", "SPe-ARX-N"};
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    /// When false wall_s is written as zero, making the records file a pure
    /// function of the master seed.
    bool record_timing = true;
};

/// Throws std::invalid_argument with a message on any malformed field.
void validate_config(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

/// One Monte Carlo cell. A failed trial keeps its row with converged = false
/// and a NaN fit.
struct TrialRecord {
    int system_id = 0;
    int order = 0;
    double snr_db = 0.0;
    int realization = 0;
    std::string estimator;
    double fit = 0.0;
    double wall_s = 0.0;
    bool converged = false;
    std::uint64_t seed = 0;
};

/// Run the full grid. Trials are independent and may be dispatched to `jobs`
/// workers; per-trial seeds are pre-assigned so the output is identical for
/// any job count.
std::vector<TrialRecord> run_suite(const ExperimentConfig& config, int jobs = 1);

void write_records_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> read_records_csv(const std::string& path);

/// Summary tables: mean fit per (level, estimator), mean wall time per
/// estimator, and a distribution summary per cell for boxplot rendering.
struct ReportTables {
    std::vector<double> levels;            // first-appearance order
    std::vector<std::string> estimators;   // first-appearance order
    std::vector<std::vector<double>> mean_fit;      // [level][estimator]
    std::vector<double> mean_wall;                  // [estimator]
    std::vector<std::vector<DistSummary>> cells;    // [level][estimator]
};

ReportTables report(const std::vector<TrialRecord>& records);
void write_report_csv(const ReportTables& tables, const std::string& dir);

}  // namespace hankelid
