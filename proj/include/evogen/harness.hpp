#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evogen/dataset.hpp"
#include "evogen/evolve.hpp"
#include "evogen/mlp.hpp"
#include "evogen/rng.hpp"
#include "evogen/stats.hpp"

namespace evogen {

struct ExperimentConfig {
    std::string dataset_id;  // iris | wdbc
    std::string regime;      // abundance | scarcity
    double train_fraction = 0.7;  // abundance regime
    int per_class = 1;            // scarcity regime
    int n_generated = 150;
    int n_generated_datasets = 3;
    int n_real_resamples = 3;
    int n_model_runs = 5;
    GaConfig ga;
    MlpConfig eval_mlp;
    std::uint64_t master_seed = 1;
    bool include_baseline = false;
};

struct ArmSummary {
    std::string arm;  // generated | real | random_baseline
    double mean_accuracy = 0;
    double ci95_low = 0, ci95_high = 0;
    double min_accuracy = 0, max_accuracy = 0;
    int retained_run_count = 0;
};

struct ExperimentReport {
    std::vector<ArmSummary> arms;
    std::vector<std::pair<std::string, stats::TestResult>> comparisons;
    std::vector<FitnessTrace> traces;  // one per (resample, generated dataset), canonical order
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<double> raw_generated, raw_real, raw_baseline;
    std::vector<double> retained_generated, retained_real, retained_baseline;
};

struct AttributeComparison {
    std::string attribute;
    stats::SummaryStats generated;
    stats::SummaryStats real;
    stats::TestResult test;  // welch_t_test between the two samples
};

struct BenchTimeResult {
    std::vector<std::pair<int, double>> rows;  // (n_generated, median seconds of 3)
    stats::RegressionFit linear_fit;
    stats::RegressionFit quadratic_fit;
};

struct BenchMemoryResult {
    std::vector<std::pair<int, double>> rows;  // (n_generated, accounted bytes)
    stats::RegressionFit linear_fit;
};

// Recorded defaults; none of these appear in the source material and all are
// overridable through the config file and CLI flags.
inline ExperimentConfig default_experiment_config(const std::string& dataset_id, const std::string& regime) {
    ExperimentConfig cfg;
    cfg.dataset_id = dataset_id;
    cfg.regime = regime;

    MlpConfig inner;
    inner.hidden_activation = Activation::LeakyRelu;
    inner.leaky_slope = 0.01;
    inner.learning_rate = 0.1;
    inner.max_epochs = 100;

    MlpConfig eval;
    eval.hidden_activation = Activation::Relu;
    eval.learning_rate = 0.1;
    eval.max_epochs = 500;
    eval.l2_lambda = 1e-4;
    eval.dropout_rate = 0.2;
    eval.early_stopping = EarlyStopping{0.2, 20};

    if (dataset_id == "iris") {
        inner.layer_sizes = {4, 8, 3};
        eval.layer_sizes = {4, 8, 3};
        cfg.train_fraction = 0.70;
        cfg.n_generated = 150;
        cfg.ga.generations = 200;
    } else if (dataset_id == "wdbc") {
        inner.layer_sizes = {30, 16, 2};
        eval.layer_sizes = {30, 16, 2};
        cfg.train_fraction = 0.80;
        cfg.n_generated = 100;
        cfg.ga.generations = 300;
    } else {
        throw std::runtime_error("unknown dataset id: " + dataset_id);
    }
    cfg.ga.population_size = 32;
    cfg.ga.mutation_prob = 0.05;
    cfg.ga.elite_count = 2;
    cfg.ga.parent_fraction = 0.25;
    cfg.ga.n_generated = cfg.n_generated;
    cfg.ga.inner_mlp = inner;
    cfg.eval_mlp = eval;
    return cfg;
}

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.dataset_id != "iris" && cfg.dataset_id != "wdbc") {
        throw std::runtime_error("ExperimentConfig: dataset_id must be iris or wdbc");
    }
    if (cfg.regime != "abundance" && cfg.regime != "scarcity") {
        throw std::runtime_error("ExperimentConfig: regime must be abundance or scarcity");
    }
    if (cfg.regime == "abundance" && !(cfg.train_fraction > 0 && cfg.train_fraction < 1)) {
        throw std::runtime_error("ExperimentConfig: train_fraction must be in (0,1)");
    }
    if (cfg.regime == "scarcity" && cfg.per_class < 1) {
        throw std::runtime_error("ExperimentConfig: per_class must be positive");
    }
    if (cfg.n_generated_datasets < 3) {
        throw std::runtime_error("ExperimentConfig: n_generated_datasets must be at least 3");
    }
    if (cfg.n_real_resamples < 3) throw std::runtime_error("ExperimentConfig: n_real_resamples must be at least 3");
    if (cfg.n_model_runs < 5) throw std::runtime_error("ExperimentConfig: n_model_runs must be at least 5");
    validate_ga_config(cfg.ga);
    validate_config(cfg.eval_mlp);
}

namespace detail {

// Discards exactly one global minimum and one global maximum (distinct runs).
inline std::vector<double> discard_extremums(const std::vector<double>& raw) {
    if (raw.size() < 5) throw std::runtime_error("arm has fewer than 5 runs; cannot discard extremums");
    std::size_t min_idx = 0, max_idx = 0;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        if (raw[i] < raw[min_idx]) min_idx = i;
        if (raw[i] >= raw[max_idx]) max_idx = i;  // >=: keep the indices distinct on constant lists
    }
    std::vector<double> retained;
    retained.reserve(raw.size() - 2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i != min_idx && i != max_idx) retained.push_back(raw[i]);
    }
    return retained;
}

inline ArmSummary summarize_arm(const std::string& name, const std::vector<double>& retained) {
    if (retained.size() < 3) throw std::runtime_error("arm '" + name + "' has fewer than 3 retained runs");
    const stats::SummaryStats s = stats::describe(retained);
    ArmSummary a;
    a.arm = name;
    a.mean_accuracy = s.mean;
    a.ci95_low = s.ci95_low;
    a.ci95_high = s.ci95_high;
    a.min_accuracy = s.min;
    a.max_accuracy = s.max;
    a.retained_run_count = static_cast<int>(retained.size());
    return a;
}

inline double train_and_score(const MlpConfig& eval_cfg, std::uint64_t seed, const Dataset& train_data,
                              const Dataset& validate_data) {
    MlpConfig cfg = eval_cfg;
    cfg.seed = seed;
    auto [model, report] = train(init(cfg), train_data);
    (void)report;
    return accuracy(model, validate_data);
}

// Uniform-random genome with balanced round-robin labels; the un-evolved
// baseline individual.
inline Genome random_genome(int n_generated, int n_attributes, int n_classes, std::uint64_t seed) {
    Genome g;
    g.n_attributes = n_attributes;
    g.n_classes = n_classes;
    g.genes.resize(static_cast<std::size_t>(n_generated) * n_attributes);
    g.labels.resize(n_generated);
    rng::Stream stream(seed);
    for (double& gene : g.genes) gene = stream.uniform();
    for (int r = 0; r < n_generated; ++r) g.labels[r] = r % n_classes;
    return g;
}

struct ArmSelection {
    bool generated = true;
    bool real = true;
    bool baseline = false;
};

inline ExperimentReport run_arms(const ExperimentConfig& cfg, const Dataset& raw_data, const ArmSelection& arms,
                                 int n_threads) {
    validate_experiment_config(cfg);
    ExperimentReport report;
    const Dataset data = min_max_normalize(raw_data);

    GaConfig ga = cfg.ga;
    ga.n_generated = cfg.n_generated;
    const auto note_seed = [&report](const std::string& name, std::uint64_t value) {
        report.seeds.emplace_back(name, value);
    };

    for (int r = 0; r < cfg.n_real_resamples; ++r) {
        const std::uint64_t split_seed = rng::mix(cfg.master_seed, rng::kTagResample, static_cast<std::uint64_t>(r));
        note_seed("split_r" + std::to_string(r), split_seed);
        const DataSplit split = cfg.regime == "abundance" ? split_random(data, cfg.train_fraction, split_seed)
                                                          : split_scarce(data, cfg.per_class, split_seed);

        if (arms.generated) {
            for (int g = 0; g < cfg.n_generated_datasets; ++g) {
                GaConfig run_cfg = ga;
                run_cfg.seed = rng::mix(cfg.master_seed, rng::kTagEvolve, static_cast<std::uint64_t>(r),
                                        static_cast<std::uint64_t>(g));
                note_seed("evolve_r" + std::to_string(r) + "_g" + std::to_string(g), run_cfg.seed);
                auto [best, trace] = evolve(run_cfg, split.train_test, n_threads);
                report.traces.push_back(std::move(trace));
                const Dataset gen_data = best.as_dataset();
                for (int m = 0; m < cfg.n_model_runs; ++m) {
                    const std::uint64_t seed =
                        rng::mix(cfg.master_seed, rng::kTagEvalGen, static_cast<std::uint64_t>(r),
                                 static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(m));
                    note_seed("eval_gen_r" + std::to_string(r) + "_g" + std::to_string(g) + "_m" + std::to_string(m),
                              seed);
                    report.raw_generated.push_back(train_and_score(cfg.eval_mlp, seed, gen_data, split.validate));
                }
            }
        }
        if (arms.real) {
            for (int m = 0; m < cfg.n_model_runs; ++m) {
                const std::uint64_t seed = rng::mix(cfg.master_seed, rng::kTagEvalReal, static_cast<std::uint64_t>(r),
                                                    static_cast<std::uint64_t>(m));
                note_seed("eval_real_r" + std::to_string(r) + "_m" + std::to_string(m), seed);
                report.raw_real.push_back(train_and_score(cfg.eval_mlp, seed, split.train_test, split.validate));
            }
        }
        if (arms.baseline) {
            for (int g = 0; g < cfg.n_generated_datasets; ++g) {
                const std::uint64_t genome_seed =
                    rng::mix(cfg.master_seed, rng::kTagBaseline, static_cast<std::uint64_t>(r),
                             static_cast<std::uint64_t>(g));
                note_seed("baseline_r" + std::to_string(r) + "_g" + std::to_string(g), genome_seed);
                const Genome genome =
                    random_genome(cfg.n_generated, data.n_attributes, data.n_classes, genome_seed);
                const Dataset gen_data = genome.as_dataset();
                for (int m = 0; m < cfg.n_model_runs; ++m) {
                    const std::uint64_t seed =
                        rng::mix(cfg.master_seed, rng::kTagEvalBase, static_cast<std::uint64_t>(r),
                                 static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(m));
                    report.raw_baseline.push_back(train_and_score(cfg.eval_mlp, seed, gen_data, split.validate));
                }
            }
        }
    }

    if (arms.generated) {
        report.retained_generated = discard_extremums(report.raw_generated);
        report.arms.push_back(summarize_arm("generated", report.retained_generated));
    }
    if (arms.real) {
        report.retained_real = discard_extremums(report.raw_real);
        report.arms.push_back(summarize_arm("real", report.retained_real));
    }
    if (arms.baseline) {
        report.retained_baseline = discard_extremums(report.raw_baseline);
        report.arms.push_back(summarize_arm("random_baseline", report.retained_baseline));
    }
    if (arms.generated && arms.real) {
        report.comparisons.emplace_back("generated_vs_real",
                                        stats::welch_t_test(report.retained_generated, report.retained_real));
    }
    if (arms.generated && arms.baseline) {
        report.comparisons.emplace_back("generated_vs_baseline",
                                        stats::welch_t_test(report.retained_generated, report.retained_baseline));
    }
    return report;
}

}  // namespace detail

// Full comparison pipeline behind Tables 1A/1B/2A/2B: per real resample,
// evolve generated datasets, train evaluation models on both arms, score on
// the validating batch, trim one min and one max per arm, then compare.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& raw_data, int n_threads = 0) {
    detail::ArmSelection arms;
    arms.baseline = cfg.include_baseline;
    return detail::run_arms(cfg, raw_data, arms, n_threads);
}

// Same pipeline with un-evolved uniform-random genomes only.
inline ArmSummary run_random_baseline(const ExperimentConfig& cfg, const Dataset& raw_data, int n_threads = 0) {
    detail::ArmSelection arms;
    arms.generated = false;
    arms.real = false;
    arms.baseline = true;
    ExperimentReport report = detail::run_arms(cfg, raw_data, arms, n_threads);
    return report.arms.front();
}

// Per-attribute distribution comparison (the Table 3 analog). Both datasets
// must be in original units.
inline std::vector<AttributeComparison> distribution_report(const Dataset& generated, const Dataset& real) {
    if (generated.n_attributes != real.n_attributes) {
        throw std::runtime_error("distribution_report: attribute counts differ");
    }
    std::vector<AttributeComparison> rows;
    rows.reserve(generated.n_attributes);
    for (int j = 0; j < generated.n_attributes; ++j) {
        std::vector<double> gen_col(generated.n_instances()), real_col(real.n_instances());
        for (int i = 0; i < generated.n_instances(); ++i) gen_col[i] = generated.at(i, j);
        for (int i = 0; i < real.n_instances(); ++i) real_col[i] = real.at(i, j);
        AttributeComparison cmp;
        cmp.attribute = j < static_cast<int>(real.attribute_names.size()) ? real.attribute_names[j]
                                                                          : "attr_" + std::to_string(j);
        cmp.generated = stats::describe(gen_col);
        cmp.real = stats::describe(real_col);
        cmp.test = stats::welch_t_test(gen_col, real_col);
        rows.push_back(std::move(cmp));
    }
    return rows;
}

// Exponential fit of the best combined MSE against the generation index.
inline stats::RegressionFit learning_curve_report(const FitnessTrace& trace) {
    if (trace.size() < 10) throw std::runtime_error("learning_curve_report: need a trace of at least 10 generations");
    std::vector<double> xs(trace.size()), ys(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        xs[i] = static_cast<double>(trace[i].generation);
        ys[i] = trace[i].best_mse_gen + trace[i].best_mse_real;
    }
    return stats::fit_exponential(xs, ys);
}

// Wall-clock scaling of evolve over n_generated, at fixed generations and
// population size. Median of 3 runs per size; both linear and quadratic fits
// are reported without asserting which one wins.
inline BenchTimeResult bench_time(const std::vector<int>& sizes, const GaConfig& cfg, const Dataset& real_batch,
                                  int n_threads = 0) {
    BenchTimeResult result;
    for (int n : sizes) {
        GaConfig run_cfg = cfg;
        run_cfg.n_generated = n;
        std::vector<double> times;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            evolve(run_cfg, real_batch, n_threads);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        result.rows.emplace_back(n, times[1]);
    }
    if (result.rows.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& [n, sec] : result.rows) {
            xs.push_back(n);
            ys.push_back(sec);
        }
        result.linear_fit = stats::fit_linear(xs, ys);
        result.quadratic_fit = stats::fit_quadratic(xs, ys);
    }
    return result;
}

// Analytic allocation accounting: population gene/label storage, one inner
// network parameter footprint, and the trace. Exactly affine in n_generated.
inline BenchMemoryResult bench_memory(const std::vector<int>& sizes, const GaConfig& cfg, int n_attributes) {
    BenchMemoryResult result;
    double param_count = 0;
    const auto& layers = cfg.inner_mlp.layer_sizes;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        param_count += static_cast<double>(layers[l + 1]) * layers[l] + layers[l + 1];
    }
    for (int n : sizes) {
        const double genome_bytes = static_cast<double>(n) * n_attributes * sizeof(double) +
                                    static_cast<double>(n) * sizeof(int) + 3 * sizeof(double);
        const double bytes = cfg.population_size * genome_bytes + param_count * sizeof(double) +
                             static_cast<double>(cfg.generations) * 5 * sizeof(double);
        result.rows.emplace_back(n, bytes);
    }
    if (result.rows.size() >= 2) {
        std::vector<double> xs, ys;
        for (const auto& [n, bytes] : result.rows) {
            xs.push_back(n);
            ys.push_back(bytes);
        }
        result.linear_fit = stats::fit_linear(xs, ys);
    }
    return result;
}

// ---- report emission ------------------------------------------------------

namespace detail {

inline std::string fixed4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string p_display(double p) {
    if (p < 0.0001) return "<0.0001";
    return fixed4(p);
}

}  // namespace detail

inline void write_report_csv(const ExperimentReport& report, std::ostream& out) {
    out << "row_type,name,mean_accuracy,ci95_low,ci95_high,min_accuracy,max_accuracy,retained_run_count,"
           "statistic,p_value\n";
    for (const auto& arm : report.arms) {
        out << "arm," << arm.arm << "," << detail::full(arm.mean_accuracy) << "," << detail::full(arm.ci95_low) << ","
            << detail::full(arm.ci95_high) << "," << detail::full(arm.min_accuracy) << ","
            << detail::full(arm.max_accuracy) << "," << arm.retained_run_count << ",,\n";
    }
    for (const auto& [name, test] : report.comparisons) {
        out << "comparison," << name << ",,,,,,," << detail::full(test.statistic) << "," << detail::full(test.p_value)
            << "\n";
    }
}

inline void write_report_txt(const ExperimentReport& report, const std::string& title, std::ostream& out) {
    out << title << "\n\n";
    const int label_w = 38, col_w = 26;
    std::ostringstream header;
    header << std::string(label_w, ' ');
    for (const auto& arm : report.arms) {
        std::string name = arm.arm == "generated" ? "Generated data"
                           : arm.arm == "real"    ? "Real world data"
                                                  : "Random baseline";
        header << name << std::string(col_w > static_cast<int>(name.size()) ? col_w - name.size() : 1, ' ');
    }
    header << "p value";
    out << header.str() << "\n";

    const auto row = [&](const std::string& label, const std::vector<std::string>& cells, const std::string& tail) {
        out << label << std::string(label_w > static_cast<int>(label.size()) ? label_w - label.size() : 1, ' ');
        for (const auto& cell : cells) {
            out << cell << std::string(col_w > static_cast<int>(cell.size()) ? col_w - cell.size() : 1, ' ');
        }
        out << tail << "\n";
    };

    std::vector<std::string> mean_cells, min_cells, max_cells;
    for (const auto& arm : report.arms) {
        mean_cells.push_back(detail::fixed4(arm.mean_accuracy) + "; [" + detail::fixed4(arm.ci95_low) + "-" +
                             detail::fixed4(arm.ci95_high) + "]");
        min_cells.push_back(detail::fixed4(arm.min_accuracy));
        max_cells.push_back(detail::fixed4(arm.max_accuracy));
    }
    std::string p_tail;
    for (const auto& [name, test] : report.comparisons) {
        if (!p_tail.empty()) p_tail += "  ";
        p_tail += name + ": " + detail::p_display(test.p_value);
    }
    row("Neural network mean accuracy [95% CI]", mean_cells, p_tail);
    row("Minimum accuracy", min_cells, "");
    row("Maximum accuracy", max_cells, "");
}

inline void write_distribution_csv(const std::vector<AttributeComparison>& rows, std::ostream& out) {
    out << "attribute,source,n,min,q25,median,q75,max,mean,ci95_low,ci95_high,p_value\n";
    for (const auto& cmp : rows) {
        const auto emit = [&](const char* source, const stats::SummaryStats& s) {
            out << cmp.attribute << "," << source << "," << s.n << "," << detail::full(s.min) << ","
                << detail::full(s.q25) << "," << detail::full(s.median) << "," << detail::full(s.q75) << ","
                << detail::full(s.max) << "," << detail::full(s.mean) << "," << detail::full(s.ci95_low) << ","
                << detail::full(s.ci95_high) << "," << detail::full(cmp.test.p_value) << "\n";
        };
        emit("generated", cmp.generated);
        emit("real", cmp.real);
    }
}

inline void write_distribution_txt(const std::vector<AttributeComparison>& rows, std::ostream& out) {
    const int label_w = 16, col_w = 18;
    const auto pad = [&](const std::string& s, int w) {
        return s + std::string(w > static_cast<int>(s.size()) ? w - s.size() : 1, ' ');
    };
    out << pad("", label_w);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        out << pad("Generated " + rows[j].attribute, col_w) << pad("Real " + rows[j].attribute, col_w);
    }
    out << "\n";
    const auto stat_row = [&](const std::string& label, auto getter) {
        out << pad(label, label_w);
        for (const auto& cmp : rows) {
            out << pad(detail::fixed4(getter(cmp.generated)), col_w) << pad(detail::fixed4(getter(cmp.real)), col_w);
        }
        out << "\n";
    };
    stat_row("Minimum", [](const stats::SummaryStats& s) { return s.min; });
    stat_row("25% percentile", [](const stats::SummaryStats& s) { return s.q25; });
    stat_row("Median", [](const stats::SummaryStats& s) { return s.median; });
    stat_row("75% percentile", [](const stats::SummaryStats& s) { return s.q75; });
    stat_row("Maximum", [](const stats::SummaryStats& s) { return s.max; });
    stat_row("Mean", [](const stats::SummaryStats& s) { return s.mean; });
    out << pad("95% CI", label_w);
    for (const auto& cmp : rows) {
        out << pad(detail::fixed4(cmp.generated.ci95_low) + "-" + detail::fixed4(cmp.generated.ci95_high), col_w)
            << pad(detail::fixed4(cmp.real.ci95_low) + "-" + detail::fixed4(cmp.real.ci95_high), col_w);
    }
    out << "\n" << pad("p value", label_w);
    for (const auto& cmp : rows) {
        out << pad(detail::p_display(cmp.test.p_value), 2 * col_w);
    }
    out << "\n";
}

// Long format for external plotting: one row per (attribute, instance).
inline void write_scatter_csv(const Dataset& generated, const Dataset& real, std::ostream& out) {
    out << "attribute,value,source,class\n";
    const auto emit = [&](const Dataset& d, const char* source) {
        for (int j = 0; j < d.n_attributes; ++j) {
            const std::string name =
                j < static_cast<int>(d.attribute_names.size()) ? d.attribute_names[j] : "attr_" + std::to_string(j);
            for (int i = 0; i < d.n_instances(); ++i) {
                out << name << "," << detail::full(d.at(i, j)) << "," << source << "," << d.labels[i] << "\n";
            }
        }
    };
    emit(generated, "generated");
    emit(real, "real");
}

inline void write_learning_curve_csv(const FitnessTrace& trace, const stats::RegressionFit& fit, std::ostream& out) {
    out << "generation,best_mse,fitted_mse\n";
    for (const auto& rec : trace) {
        const double y = rec.best_mse_gen + rec.best_mse_real;
        const double fitted = fit.params[0] * std::exp(-fit.params[1] * rec.generation) + fit.params[2];
        out << rec.generation << "," << detail::full(y) << "," << detail::full(fitted) << "\n";
    }
}

inline void write_bench_time_csv(const BenchTimeResult& bench, std::ostream& out) {
    out << "n_generated,seconds\n";
    for (const auto& [n, sec] : bench.rows) out << n << "," << detail::full(sec) << "\n";
}

inline void write_bench_memory_csv(const BenchMemoryResult& bench, std::ostream& out) {
    out << "n_generated,bytes\n";
    for (const auto& [n, bytes] : bench.rows) out << n << "," << detail::full(bytes) << "\n";
}

inline void write_fit_csv_row(const stats::RegressionFit& fit, const std::string& target, std::ostream& out) {
    out << target << "," << fit.model_name;
    for (double p : fit.params) out << "," << detail::full(p);
    out << "," << detail::full(fit.r_square) << "\n";
}

}  // namespace evogen
