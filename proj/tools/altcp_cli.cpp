// Command-line driver for the alternating rank-1 CP decomposition toolkit.
//
// Subcommands:
//   decompose          one full pipeline run, with per-repeat outputs
//   sweep              grid over ranks (and noise levels)
//   table1             benchmark-table suite at ci/desk/full scale
//   check-assumptions  measure the incoherence/norm checklist on an instance
//   bounds             evaluate the theory-side quantities for (k, d, ...)
//
// Exit codes: 0 success, 2 usage error, 3 capacity error, 4 runtime failure.

#include "altcp/altcp.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace altcp;

int cmd_decompose(const ExperimentConfig& cfg) {
    RunSummary summary = run_experiment(cfg);
    const MetricsRow& agg = summary.aggregate;
    std::printf("d=%d k=%d L=%d repeats=%d\n", agg.d, agg.k, agg.trials,
                static_cast<int>(summary.rows.size()));
    std::printf("recovery_rate        %.6f\n", agg.recovery_rate);
    std::printf("avg_square_error     %.6e\n", agg.avg_square_error);
    std::printf("avg_weight_error     %.6e\n", agg.avg_weight_error);
    std::printf("avg_iterations       %.3f\n", agg.avg_iterations);
    for (size_t rep = 0; rep < summary.artifacts.size(); ++rep) {
        const auto& art = summary.artifacts[rep];
        std::printf("repeat %zu: shortfall=%d final_recovery=%.4f\n", rep,
                    art.cluster_shortfall, art.final_recovery_rate);
    }
    if (!cfg.out_dir.empty()) {
        emit_outputs(summary, cfg.out_dir);
        std::printf("outputs written to %s\n", cfg.out_dir.c_str());
    }
    return 0;
}

int cmd_sweep(const ExperimentConfig& base, const std::vector<int>& ranks,
              const std::vector<double>& noises) {
    std::vector<int> ks = ranks.empty() ? std::vector<int>{base.rank} : ranks;
    std::vector<double> psis = noises.empty() ? std::vector<double>{base.noise_psi} : noises;
    std::printf("k,noise_psi,recovery_rate,avg_square_error,avg_weight_error,avg_iterations\n");
    for (int k : ks) {
        for (double psi : psis) {
            ExperimentConfig cfg = base;
            cfg.rank = k;
            cfg.noise_psi = psi;
            if (!base.out_dir.empty()) {
                std::ostringstream sub;
                sub << base.out_dir << "/rank" << k << "_noise" << psi;
                cfg.out_dir = sub.str();
            }
            RunSummary summary = run_experiment(cfg);
            if (!cfg.out_dir.empty()) emit_outputs(summary, cfg.out_dir);
            const MetricsRow& a = summary.aggregate;
            std::printf("%d,%g,%.6f,%.6e,%.6e,%.3f\n", k, psi, a.recovery_rate,
                        a.avg_square_error, a.avg_weight_error, a.avg_iterations);
        }
    }
    return 0;
}

int cmd_table1(const ExperimentConfig& cfg) {
    std::vector<RunSummary> summaries = table1_suite(cfg);
    std::printf("%-6s %-14s %-16s %-16s %-14s %-14s\n", "k", "t_stopping", "avg_sq_error",
                "avg_w_error", "avg_iters", "recovery");
    for (const auto& s : summaries) {
        double t_stop = s.config.stopping().resolve_threshold(s.config.dims(), s.config.rank);
        std::printf("%-6d %-14.3e %-16.6e %-16.6e %-14.3f %-14.4f\n", s.config.rank, t_stop,
                    s.aggregate.avg_square_error, s.aggregate.avg_weight_error,
                    s.aggregate.avg_iterations, s.aggregate.recovery_rate);
    }
    return 0;
}

int cmd_check_assumptions(const ExperimentConfig& cfg, const std::string& factors_prefix) {
    FactoredTensor truth;
    if (!factors_prefix.empty()) {
        std::vector<Eigen::MatrixXd> mats;
        std::vector<int> extents;
        for (int r = 0; r < cfg.order; ++r) {
            FactorMatrixFile f = read_factor_matrix(factors_prefix + "factor_mode" +
                                                    std::to_string(r + 1) + ".txt");
            extents.push_back(static_cast<int>(f.matrix.rows()));
            mats.push_back(std::move(f.matrix));
        }
        Eigen::VectorXd w = Eigen::VectorXd::Ones(mats[0].cols());
        std::ifstream win(factors_prefix + "weights.txt");
        if (win) {
            std::string header;
            std::getline(win, header);
            for (Eigen::Index j = 0; j < w.size(); ++j) win >> w[j];
        }
        truth = FactoredTensor(Dims(extents), std::move(mats), w);
        truth.canonicalize();
    } else {
        truth = random_ground_truth(cfg.dims(), cfg.rank, cfg.seed).tensor;
    }

    TheoryConstants tc;
    Rng rng(substream_seed(cfg.seed, 99));
    AssumptionReport rep = assumption_report(truth, cfg.noise_psi, tc, rng);
    write_assumption_report(std::cout, rep);
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream txt(cfg.out_dir + "/assumptions.txt");
        write_assumption_report(txt, rep);
        nlohmann::json j;
        j["rho"] = rep.rho;
        j["gamma"] = rep.gamma;
        j["factor_norms"] = rep.factor_norms;
        j["khatri_rao_norms"] = {rep.kr_norms.ab, rep.kr_norms.bc, rep.kr_norms.ac};
        j["tensor_spectral_estimate"] = rep.tensor_spectral_estimate;
        j["cross_term"] = rep.cross_term;
        j["two_to_p"] = rep.two_to_p;
        for (const auto& e : rep.entries) {
            nlohmann::json je;
            je["id"] = e.id;
            je["description"] = e.description;
            je["measured"] = e.measured;
            je["threshold"] = e.threshold;
            je["pass"] = e.pass;
            j["assumptions"].push_back(je);
        }
        j["all_pass"] = rep.all_pass();
        std::ofstream js(cfg.out_dir + "/assumptions.json");
        js << j.dump(2) << "\n";
        std::printf("report written to %s\n", cfg.out_dir.c_str());
    }
    return 0;
}

int cmd_bounds(const ExperimentConfig& cfg, double gamma, double rho, double psi,
               double mu_tilde) {
    const int k = cfg.rank;
    const int d = cfg.dims().extent(0);
    TheoryConstants tc;
    tc.mu_tilde = mu_tilde;
    const double alpha = tc.alpha(k);
    ContractionParams cp =
        contraction_params(k, d, alpha, tc.alpha0, tc.beta_prime, gamma, 1.0, psi);
    InitTheoryParams ip =
        init_theory_params(k, d, rho, gamma, 1.0, alpha, tc.alpha0, mu_tilde, tc.g_constant);

    std::printf("k=%d d=%d alpha=%.4f alpha0=%.2f beta'=%.3f\n", k, d, alpha, tc.alpha0,
                tc.beta_prime);
    std::printf("q                 %.6f%s\n", cp.q, cp.q_warning ? "  (>= 1/2: no contraction guarantee)" : "");
    std::printf("const_term        %.6e\n", cp.const_term);
    std::printf("eps0_cap          %.6e\n", cp.eps0_cap);
    std::printf("eps_R             %.6e\n", cp.eps_r);
    std::printf("iterations N      %d\n", cp.iterations);
    std::printf("mu_E              %.6f\n", ip.mu_e);
    std::printf("mu_R              %.6f\n", ip.mu_r);
    std::printf("mu_min            %.6f\n", ip.mu_min);
    std::printf("mu                %.6f (%s)\n", ip.mu, ip.feasible ? "feasible" : "infeasible");
    if (ip.feasible && rho > 0.0) {
        try {
            TrialCountResult tr = theory_trial_count(gamma, double(k), double(d), rho, ip.mu,
                                                     tc.g_constant);
            std::printf("required L        %llu (g(L)=%.4f >= %.4f)\n",
                        static_cast<unsigned long long>(tr.required_trials),
                        tr.g.g(double(tr.required_trials)), tr.threshold);
        } catch (const InfeasibleError& e) {
            std::printf("required L        infeasible (%s)\n", e.what());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"alternating rank-1 CP tensor decomposition toolkit"};
    app.require_subcommand(1);

    altcp::ExperimentConfig cfg;
    std::vector<int> sweep_ranks;
    std::vector<double> sweep_noises;
    std::string factors_prefix;
    double gamma = 1.0, rho = 0.0, psi_bounds = 0.0, mu_tilde = 0.5;

    CLI::App* decompose = app.add_subcommand("decompose", "run the full pipeline once");
    altcp::add_config_flags(*decompose, cfg);

    CLI::App* sweep = app.add_subcommand("sweep", "grid over ranks and noise levels");
    altcp::add_config_flags(*sweep, cfg);
    sweep->add_option("--ranks", sweep_ranks, "comma list of ranks")->delimiter(',');
    sweep->add_option("--noise-list", sweep_noises, "comma list of psi targets")
        ->delimiter(',');

    CLI::App* table1 = app.add_subcommand("table1", "benchmark-table suite");
    altcp::add_config_flags(*table1, cfg);

    CLI::App* check = app.add_subcommand("check-assumptions", "assumption checklist report");
    altcp::add_config_flags(*check, cfg);
    check->add_option("--factors", factors_prefix,
                      "path prefix of factor_mode<r>.txt files (else random instance)");

    CLI::App* bounds = app.add_subcommand("bounds", "evaluate theory-side quantities");
    altcp::add_config_flags(*bounds, cfg);
    bounds->add_option("--gamma", gamma, "weight ratio w_max/w_min");
    bounds->add_option("--rho", rho, "incoherence");
    bounds->add_option("--psi", psi_bounds, "perturbation spectral norm");
    bounds->add_option("--mu-tilde", mu_tilde, "gap split parameter in (0,1)");

    try {
        app.parse(argc, argv);
        cfg.validate();
        if (decompose->parsed()) return cmd_decompose(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg, sweep_ranks, sweep_noises);
        if (table1->parsed()) return cmd_table1(cfg);
        if (check->parsed()) return cmd_check_assumptions(cfg, factors_prefix);
        if (bounds->parsed()) return cmd_bounds(cfg, gamma, rho, psi_bounds, mu_tilde);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const altcp::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const altcp::CapacityError& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
