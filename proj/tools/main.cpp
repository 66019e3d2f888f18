#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "hankelid/bench.hpp"
#include "hankelid/estimators.hpp"
#include "hankelid/metrics.hpp"
#include "hankelid/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;
constexpr int kExitEmptyReport = 3;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int cmd_gen_config(const std::string& out_path) {
    hankelid::ExperimentConfig config;
    try {
        hankelid::save_config(config, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, int jobs,
            const std::string& out_dir, const std::string& estimators) {
    hankelid::ExperimentConfig config;
    try {
        config = hankelid::load_config(config_path);
        if (seed) {
            config.master_seed = *seed;
        }
        if (!out_dir.empty()) {
            config.output_dir = out_dir;
        }
        if (!estimators.empty()) {
            config.estimators = split_csv(estimators);
        }
        hankelid::validate_config(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        const auto records = hankelid::run_suite(config, jobs);
        std::filesystem::create_directories(config.output_dir);
        hankelid::write_records_csv(records, config.output_dir + "/records.csv");
        hankelid::save_config(config, config.output_dir + "/run_config.json");
        int failures = 0;
        for (const auto& r : records) {
            if (!std::isfinite(r.fit)) {
                ++failures;
            }
        }
        std::cout << records.size() << " records written to " << config.output_dir
                  << "/records.csv (" << failures << " failed trials)\n";
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}

int cmd_report(const std::string& records_path, const std::string& out_dir) {
    std::vector<hankelid::TrialRecord> records;
    try {
        records = hankelid::read_records_csv(records_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    if (records.empty()) {
        std::cerr << "error: no records in " << records_path << "\n";
        return kExitEmptyReport;
    }
    try {
        const auto tables = hankelid::report(records);
        hankelid::write_report_csv(tables, out_dir);
        std::cout << "mean model fit\n";
        std::printf("%8s", "snr_db");
        for (const auto& e : tables.estimators) {
            std::printf("%12s", e.c_str());
        }
        std::printf("\n");
        for (std::size_t l = 0; l < tables.levels.size(); ++l) {
            std::printf("%8g", tables.levels[l]);
            for (std::size_t e = 0; e < tables.estimators.size(); ++e) {
                std::printf("%12.2f", tables.mean_fit[l][e]);
            }
            std::printf("\n");
        }
        std::cout << "tables written to " << out_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}

int cmd_demo(std::uint64_t seed) {
    using namespace hankelid;
    try {
        Rng rng_sys(Rng::derive(seed, 1));
        const LinearSystem sys = generate_random_system(3, 0.9, rng_sys);

        Rng rng(Rng::derive(seed, 2));
        const Vec u = lowpass_input(450, rng);
        const double sigma = calibrate_noise(sys, std::nullopt, u, 20.0);
        DataRecord data = simulate(sys, std::nullopt, u, sigma, rng);
        data.seed = seed;

        const Vec g_true = impulse_response(sys, 35);
        const ModelStructure fir = ModelStructure::fir(35);
        const HankelSpec spec(35);

        std::printf("demo: order-3 system, N=450, 20 dB white output noise, seed %llu\n",
                    static_cast<unsigned long long>(seed));
        std::printf("      sigma_e = %.4f\n\n", sigma);
        std::printf("%-12s %8s %10s %10s %8s %6s\n", "estimator", "fit", "V_N", "nuclear",
                    "wall_s", "iters");

        auto show = [&](const char* name, const EstimateResult& est) {
            const RegressionData reg = build_regression(data, fir);
            int iters = 0;
            for (const auto& rep : est.reports) {
                iters += rep.iterations;
            }
            std::printf("%-12s %8.2f %10.4f %10.4f %8.3f %6d\n", name,
                        fit(g_true, est.impulse(35)), residual_sq(reg, est.theta),
                        nuclear_norm(hankel(est.theta, spec)), est.wall_seconds, iters);
        };

        show("LS", estimate_least_squares(data, fir));
        show("SPe-FIR-N", sparseva_nuclear(data, fir, EpsilonRule::Pec));
        show("SPe-FIR-RN", sparseva_reweighted(data, fir, EpsilonRule::Pec));
        const EstimateResult cv = cv_nuclear(data, fir);
        show("CV-FIR-N", cv);
        std::printf("\nCV selected lambda = %.6g\n", *cv.lambda_used);
        std::printf("epsilon: PEC=%.6f AIC=%.6f BIC=%.6f (n=35, N=450)\n",
                    epsilon(EpsilonRule::Pec, 35, 450), epsilon(EpsilonRule::Aic, 35, 450),
                    epsilon(EpsilonRule::Bic, 35, 450));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hankel nuclear-norm FIR/ARX identification benchmark"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-config", "write a default experiment config");
    std::string gen_out = "experiment.json";
    gen->add_option("--out", gen_out, "output path for the config file");

    auto* run = app.add_subcommand("run", "run a Monte Carlo suite from a config");
    std::string run_config;
    std::string run_out;
    std::string run_estimators;
    std::uint64_t run_seed = 0;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    run->add_option("--config", run_config, "experiment config JSON")->required();
    run->add_option("--seed", run_seed, "override the master seed");
    run->add_option("--jobs", jobs, "worker threads");
    run->add_option("--out", run_out, "override the output directory");
    run->add_option("--estimators", run_estimators, "comma-separated estimator subset");

    auto* rep = app.add_subcommand("report", "summarize a records CSV into tables");
    std::string rep_records;
    std::string rep_out = "report";
    rep->add_option("--records", rep_records, "records.csv produced by run")->required();
    rep->add_option("--out", rep_out, "directory for the summary tables");

    auto* demo = app.add_subcommand("demo", "single-system end-to-end demonstration");
    std::uint64_t demo_seed = 7;
    demo->add_option("--seed", demo_seed, "demo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    if (gen->parsed()) {
        return cmd_gen_config(gen_out);
    }
    if (run->parsed()) {
        return cmd_run(run_config,
                       run->count("--seed") > 0 ? std::optional<std::uint64_t>(run_seed) : std::nullopt,
                       jobs, run_out, run_estimators);
    }
    if (rep->parsed()) {
        return cmd_report(rep_records, rep_out);
    }
    if (demo->parsed()) {
        return cmd_demo(demo_seed);
    }
    return kExitOk;
}
