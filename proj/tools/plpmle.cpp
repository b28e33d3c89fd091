// Parameter learner for acyclic probabilistic logic programs with complete
// data. Subcommands: learn (direct and/or EM), sample (forward sampling),
// bench (timing sweep over dataset or domain sizes).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plp/plp.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw plp::DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw plp::DataError("cannot write '" + path + "'");
    out << content;
}

plp::Program load_program(const std::string& path) {
    try {
        return plp::parse_program(read_file(path));
    } catch (const plp::ParseError& e) {
        throw std::runtime_error(path + ":" + e.what());
    }
}

std::vector<double> true_theta(const plp::Program& program,
                               const std::vector<double>& override_theta) {
    if (override_theta.empty()) return program.params;
    if (override_theta.size() != program.n_params())
        throw plp::ModelError("--true-theta has " +
                              std::to_string(override_theta.size()) +
                              " values, program has " +
                              std::to_string(program.n_params()) +
                              " learnable parameters");
    for (double t : override_theta)
        if (t < 0.0 || t > 1.0)
            throw plp::ModelError("--true-theta value " +
                                  plp::format_probability(t) +
                                  " outside [0,1]");
    return override_theta;
}

bool record_inconsistent(const plp::GroundProgram& gp,
                         const std::vector<plp::HeadGroup>& groups,
                         const std::vector<std::uint8_t>& rec) {
    for (const auto& g : groups) {
        for (const auto& gh : g.ground_heads) {
            bool can_fire = false, must_fire = false;
            for (const auto& insts : gh.instances) {
                for (std::uint32_t gci : insts) {
                    const plp::GroundClause& gc = gp.ground_clauses[gci];
                    if (!plp::body_satisfied(gc, rec)) continue;
                    if (gc.label.fixed_q() < 1.0) can_fire = true;
                    if (!gc.label.learnable_kind() && gc.label.fixed_q() <= 0.0)
                        must_fire = true;
                }
            }
            if (rec[gh.atom] ? !can_fire : must_fire) return true;
        }
    }
    return false;
}

struct LearnConfig {
    std::string program_path;
    std::string data_path;
    std::uint64_t sample_n = 0;
    std::uint64_t seed = 12345;
    std::string method = "direct";
    std::vector<std::string> constants;
    std::vector<double> theta_override;
    std::string on_inconsistent = "error";
    std::string out_path;
    std::string trace_path;
    std::string em_mstep = "all";
    double em_tol = 1e-6;
    std::uint32_t em_max_iters = 1000;
};

int run_learn(const LearnConfig& cfg) {
    plp::Program program = load_program(cfg.program_path);
    std::set<std::string> extra(cfg.constants.begin(), cfg.constants.end());
    plp::GroundProgram gp = plp::ground(program, extra);
    auto groups = plp::head_groups(gp);

    plp::InterpretationSet data;
    if (!cfg.data_path.empty())
        data = plp::parse_interpretations(read_file(cfg.data_path), gp);
    else
        data = plp::forward_sample(gp, true_theta(program, cfg.theta_override),
                                   cfg.sample_n, cfg.seed);

    std::uint64_t dropped = 0;
    if (cfg.on_inconsistent == "drop") {
        plp::InterpretationSet kept;
        kept.n_atoms = data.n_atoms;
        for (std::size_t r = 0; r < data.records.size(); ++r) {
            if (record_inconsistent(gp, groups, data.records[r]))
                dropped += data.weights[r];
            else
                kept.add_record(data.records[r], data.weights[r]);
        }
        if (dropped) {
            std::cerr << "warning: dropped " << dropped
                      << " inconsistent record" << (dropped == 1 ? "" : "s")
                      << "\n";
            data = std::move(kept);
        }
    }

    plp::SufficientStats stats = plp::sufficient_stats(data, groups, gp);
    bool run_direct = cfg.method == "direct" || cfg.method == "both";
    bool run_em = cfg.method == "em" || cfg.method == "both";

    std::string summary;
    std::vector<double> fitted = program.params;
    try {
        if (run_direct) {
            plp::FitResult res = plp::fit_direct(stats, program);
            fitted = res.theta;
            summary += plp::fit_summary(res, "direct");
            if (dropped)
                summary += "dropped_records=" + std::to_string(dropped) + "\n";
        }
        if (run_em) {
            plp::EmOptions opts;
            opts.tol = cfg.em_tol;
            opts.max_iters = cfg.em_max_iters;
            opts.mstep = cfg.em_mstep == "satisfied"
                             ? plp::MStepMode::SatisfiedOnly
                             : plp::MStepMode::AllGroundings;
            plp::EMTrace trace = plp::fit_em(gp, data, program.params, opts);
            if (!run_direct) fitted = trace.final.theta;
            if (!summary.empty()) summary += "\n";
            summary += plp::fit_summary(trace.final, "em");
            if (dropped)
                summary += "dropped_records=" + std::to_string(dropped) + "\n";
            if (!cfg.trace_path.empty())
                write_file(cfg.trace_path, plp::em_trace_csv(trace));
        }
    } catch (const plp::InconsistencyError& e) {
        std::cerr << "error: inconsistent data: " << e.what() << "\n";
        return 2;
    }
    if (program.n_params() == 0) summary += "note=nothing to learn\n";
    std::cout << summary;

    std::string fitted_text = plp::write_fitted_program(program, fitted);
    if (!cfg.out_path.empty())
        write_file(cfg.out_path, fitted_text);
    else
        std::cout << "\n" << fitted_text;
    return 0;
}

struct SampleConfig {
    std::string program_path;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> constants;
    std::vector<double> theta_override;
    std::string out_path;
};

int run_sample(const SampleConfig& cfg) {
    plp::Program program = load_program(cfg.program_path);
    std::set<std::string> extra(cfg.constants.begin(), cfg.constants.end());
    plp::GroundProgram gp = plp::ground(program, extra);
    plp::InterpretationSet data = plp::forward_sample(
        gp, true_theta(program, cfg.theta_override), cfg.n, cfg.seed);
    std::string text =
        plp::write_blocks(data, gp, plp::sample_header(cfg.seed));
    if (!cfg.out_path.empty())
        write_file(cfg.out_path, text);
    else
        std::cout << text;
    return 0;
}

struct BenchConfig {
    std::string program_path;
    std::string mode;
    std::vector<std::uint64_t> sizes;
    std::uint64_t seed = 12345;
    std::uint64_t n_records = 10;
    std::string out_path;
    bool parallel = false;
};

struct BenchRow {
    std::string method;
    std::uint64_t size;
    double wall_time = std::numeric_limits<double>::quiet_NaN();
    double loglik = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t iterations = 0;
    bool failed = false;
    std::string error;
};

std::pair<BenchRow, BenchRow> bench_size(const plp::Program& program,
                                         const BenchConfig& cfg,
                                         std::uint64_t size) {
    BenchRow direct{"direct", size}, em{"em", size};
    std::uint64_t row_seed = cfg.seed * 1000003ULL + size;
    try {
        plp::GroundProgram gp;
        std::uint64_t n_records;
        if (cfg.mode == "relational") {
            std::set<std::string> consts;
            for (std::uint64_t i = 1; i <= size; ++i)
                consts.insert("c" + std::to_string(i));
            gp = plp::ground(program, consts);
            n_records = cfg.n_records;
        } else {
            gp = plp::ground(program);
            n_records = size;
        }
        auto groups = plp::head_groups(gp);
        plp::InterpretationSet data =
            plp::forward_sample(gp, program.params, n_records, row_seed);

        try {
            auto t0 = std::chrono::steady_clock::now();
            plp::SufficientStats stats =
                plp::sufficient_stats(data, groups, gp);
            plp::FitResult res = plp::fit_direct(stats, program);
            auto t1 = std::chrono::steady_clock::now();
            direct.wall_time = std::chrono::duration<double>(t1 - t0).count();
            direct.loglik = res.loglik;
            direct.iterations = res.total_iterations();
        } catch (const std::exception& e) {
            direct.failed = true;
            direct.error = e.what();
        }

        try {
            auto t0 = std::chrono::steady_clock::now();
            plp::EMTrace trace = plp::fit_em(gp, data, program.params);
            auto t1 = std::chrono::steady_clock::now();
            em.wall_time = std::chrono::duration<double>(t1 - t0).count();
            em.loglik = trace.final.loglik;
            em.iterations = trace.iters.size() - 1;
        } catch (const std::exception& e) {
            em.failed = true;
            em.error = e.what();
        }
    } catch (const std::exception& e) {
        direct.failed = em.failed = true;
        direct.error = em.error = e.what();
    }
    return {direct, em};
}

int run_bench(const BenchConfig& cfg) {
    plp::Program program = load_program(cfg.program_path);

    std::vector<std::pair<BenchRow, BenchRow>> rows(cfg.sizes.size());
    if (cfg.parallel) {
        std::vector<std::future<std::pair<BenchRow, BenchRow>>> futures;
        for (std::uint64_t size : cfg.sizes)
            futures.push_back(std::async(std::launch::async, bench_size,
                                         std::cref(program), std::cref(cfg),
                                         size));
        for (std::size_t i = 0; i < futures.size(); ++i)
            rows[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < cfg.sizes.size(); ++i)
            rows[i] = bench_size(program, cfg, cfg.sizes[i]);
    }

    std::string csv = "method,size,wall_time_s,loglik,iterations\n";
    std::string dat_direct, dat_em;
    auto append = [&](const BenchRow& r) {
        if (r.failed)
            std::cerr << "warning: bench size " << r.size << " method "
                      << r.method << " failed: " << r.error << "\n";
        csv += r.method + "," + std::to_string(r.size) + "," +
               (r.failed ? "nan" : plp::format_fixed6(r.wall_time)) + "," +
               (r.failed ? "nan" : plp::format_probability(r.loglik)) + "," +
               std::to_string(r.iterations) + "\n";
        if (!r.failed) {
            std::string line = std::to_string(r.size) + " " +
                               plp::format_fixed6(r.wall_time) + "\n";
            (r.method == "direct" ? dat_direct : dat_em) += line;
        }
    };
    for (const auto& [direct, em] : rows) {
        append(direct);
        append(em);
    }
    write_file(cfg.out_path, csv);
    std::string base = cfg.out_path;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
        base = base.substr(0, base.size() - 4);
    write_file(base + "_direct.dat", dat_direct);
    write_file(base + "_em.dat", dat_em);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter learning for acyclic probabilistic logic programs"};
    app.require_subcommand(1);

    LearnConfig learn;
    CLI::App* learn_cmd =
        app.add_subcommand("learn", "Fit learnable parameters to data");
    learn_cmd->add_option("--program", learn.program_path, "program file")
        ->required();
    auto* data_opt =
        learn_cmd->add_option("--data", learn.data_path, "interpretation file");
    auto* sample_opt = learn_cmd->add_option(
        "--sample-n", learn.sample_n, "sample this many records instead");
    data_opt->excludes(sample_opt);
    learn_cmd->add_option("--seed", learn.seed, "sampling seed");
    learn_cmd->add_option("--method", learn.method)
        ->check(CLI::IsMember({"direct", "em", "both"}));
    learn_cmd->add_option("--constants", learn.constants, "extra constants")
        ->delimiter(',');
    learn_cmd
        ->add_option("--true-theta", learn.theta_override,
                     "sampling parameters")
        ->delimiter(',');
    learn_cmd->add_option("--on-inconsistent", learn.on_inconsistent)
        ->check(CLI::IsMember({"error", "drop"}));
    learn_cmd->add_option("--out", learn.out_path, "fitted program file");
    learn_cmd->add_option("--trace", learn.trace_path, "EM trace CSV file");
    learn_cmd->add_option("--em-mstep", learn.em_mstep)
        ->check(CLI::IsMember({"all", "satisfied"}));
    learn_cmd->add_option("--em-tol", learn.em_tol, "EM stopping tolerance");
    learn_cmd->add_option("--em-max-iters", learn.em_max_iters);

    SampleConfig sample;
    CLI::App* sample_cmd =
        app.add_subcommand("sample", "Forward-sample a dataset");
    sample_cmd->add_option("--program", sample.program_path)->required();
    sample_cmd->add_option("--n", sample.n, "number of records")->required();
    sample_cmd->add_option("--seed", sample.seed)->required();
    sample_cmd->add_option("--constants", sample.constants)->delimiter(',');
    sample_cmd->add_option("--true-theta", sample.theta_override)
        ->delimiter(',');
    sample_cmd->add_option("--out", sample.out_path);

    BenchConfig bench;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "Timing sweep over sizes");
    bench_cmd->add_option("--program", bench.program_path)->required();
    bench_cmd->add_option("--mode", bench.mode)
        ->required()
        ->check(CLI::IsMember({"propositional", "relational"}));
    bench_cmd->add_option("--sizes", bench.sizes)->required()->delimiter(',');
    bench_cmd->add_option("--seed", bench.seed);
    bench_cmd->add_option("--n", bench.n_records,
                          "records per size (relational mode)");
    bench_cmd->add_option("--out", bench.out_path, "CSV path")->required();
    bench_cmd->add_flag("--parallel", bench.parallel,
                        "run sweep rows concurrently");

    CLI11_PARSE(app, argc, argv);

    try {
        if (learn_cmd->parsed()) {
            if (learn.data_path.empty() && learn.sample_n == 0) {
                std::cerr << "error: learn needs --data or --sample-n\n";
                return 1;
            }
            return run_learn(learn);
        }
        if (sample_cmd->parsed()) return run_sample(sample);
        return run_bench(bench);
    } catch (const plp::InconsistencyError& e) {
        std::cerr << "error: inconsistent data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
