#ifndef GROUPRR_HARNESS_HPP
#define GROUPRR_HARNESS_HPP

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grouprr/graph.hpp"
#include "grouprr/mechanisms.hpp"
#include "grouprr/primitives.hpp"
#include "grouprr/random.hpp"

namespace grouprr {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// |estimate - truth| / max(truth, 1); the guard keeps zero-count graphs in
// sweeps well defined.
inline double relative_error(double estimate, double truth) {
    return std::fabs(estimate - truth) / std::max(truth, 1.0);
}

inline double l2_error(const std::vector<double>& estimates, double truth) {
    double sum = 0;
    for (double e : estimates) sum += (e - truth) * (e - truth);
    return std::sqrt(sum);
}

inline double median_of(std::vector<double> values) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    const std::size_t h = values.size() / 2;
    return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

inline double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0;
    double sum = 0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// ---------------------------------------------------------------------------
// Parameter derivation
// ---------------------------------------------------------------------------

struct DerivedParams {
    std::uint32_t s = 1;
    double mu_c = 1;
    double mu = 1;
    double mu_star_eff = 1;  // mu_c / s^2 actually realized by the rounding
};

// Triangle-experiment rule: the download-reduction target mu* = mu_c / s^2 is
// split as s = (1/mu*)^(1/3), mu_c = (mu*)^(1/3); the ARR-style baseline with
// the four-cycle trick downloads ~mu^2, so mu = sqrt(mu*).
inline DerivedParams derive_parameters(double mu_star) {
    if (!(mu_star > 0) || mu_star > 1) throw std::invalid_argument("mu_star must be in (0, 1]");
    DerivedParams out;
    out.s = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(std::lround(std::cbrt(1.0 / mu_star))));
    out.mu_c = std::min(1.0, std::cbrt(mu_star));
    out.mu = std::sqrt(mu_star);
    out.mu_star_eff = out.mu_c / (static_cast<double>(out.s) * out.s);
    return out;
}

// 4-cycle rule: the ungated baseline downloads ~mu, so matched download at
// factor 1/mu* means mu = mu*; the grouped mechanism matches it with plain
// grouping (mu_c = 1, download ~1/s^2), s = sqrt(1/mu*).
inline DerivedParams derive_parameters_four_cycle(double mu_star) {
    if (!(mu_star > 0) || mu_star > 1) throw std::invalid_argument("mu_star must be in (0, 1]");
    DerivedParams out;
    out.s = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(std::lround(std::sqrt(1.0 / mu_star))));
    out.mu_c = 1.0;
    out.mu = mu_star;
    out.mu_star_eff = 1.0 / (static_cast<double>(out.s) * out.s);
    return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class OutputFormat { csv, json };

struct ExperimentConfig {
    // graph source: file path, or synthetic power-law size
    std::string graph_path;
    NodeId synthetic_n = 0;
    IdBase id_base = IdBase::zero_based;

    Stat stat = Stat::triangles;
    std::vector<Mechanism> mechanisms = {Mechanism::grouprr_clip};

    double epsilon = 1.0;
    std::optional<BudgetSplit> split;  // defaults to from_total(epsilon)

    std::optional<double> mu_star;
    std::optional<std::uint32_t> s;
    std::optional<double> mu_c;

    unsigned trials = 10;
    std::uint64_t seed = 1;
    NodeId subsample = 0;  // 0 = use the whole graph
    double beta = kDefaultClipBeta;
    unsigned threads = 1;

    std::string out_path;
    OutputFormat format = OutputFormat::csv;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (graph_path.empty() && synthetic_n == 0) {
            throw std::invalid_argument("either a graph path or a synthetic size is required");
        }
        const bool has_pair = s.has_value() || mu_c.has_value();
        if (mu_star.has_value() == has_pair) {
            throw std::invalid_argument("give exactly one of mu_star or (s, mu_c)");
        }
        if (has_pair && (!s.has_value() || !mu_c.has_value())) {
            throw std::invalid_argument("s and mu_c must be given together");
        }
    }

    BudgetSplit effective_split() const {
        if (split) return *split;
        return BudgetSplit::from_total(epsilon);
    }

    MechanismSettings resolve(Mechanism mech) const {
        MechanismSettings st;
        st.stat = stat;
        st.mechanism = mech;
        st.split = effective_split();
        st.beta = beta;
        st.threads = threads;
        double target = 1.0;
        if (mu_star) {
            target = *mu_star;
        } else {
            target = *mu_c / (static_cast<double>(*s) * (*s));
        }
        const DerivedParams derived = stat == Stat::triangles
                                          ? derive_parameters(target)
                                          : derive_parameters_four_cycle(target);
        switch (mech) {
            case Mechanism::grouprr_clip:
            case Mechanism::grouprr_smooth:
                if (mu_star) {
                    st.s = derived.s;
                    st.mu_c = derived.mu_c;
                } else {
                    st.s = *s;
                    st.mu_c = *mu_c;
                }
                break;
            case Mechanism::arr_style:
                st.mu = derived.mu;
                break;
            case Mechanism::rr_full:
                break;
        }
        return st;
    }
};

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

struct TrialResult {
    unsigned trial = 0;
    Mechanism mechanism = Mechanism::grouprr_clip;
    double estimate = 0;
    double ground_truth = 0;
    double relative_err = 0;
    std::uint64_t upload_bits = 0;
    std::uint64_t download_bits = 0;
    double wall_ms = 0;  // reported in the JSON summary, not the CSV
    std::uint64_t seed = 0;
    std::uint32_t clip_events = 0;
    std::uint32_t fallback_events = 0;
    // resolved parameters, echoed into the output rows
    std::uint32_t s = 1;
    double mu_c = 1;
    double mu = 1;
};

struct MechanismSummary {
    std::string mechanism;
    double mean_relative_error = 0;
    double median_relative_error = 0;
    double l2 = 0;
    double mean_upload_bits = 0;
    double mean_download_bits = 0;
    double mean_wall_ms = 0;
};

struct ExperimentResult {
    Graph graph;
    double ground_truth = 0;
    std::vector<TrialResult> rows;
    std::vector<MechanismSummary> summaries;
};

inline Graph acquire_graph(const ExperimentConfig& cfg) {
    Graph g;
    if (!cfg.graph_path.empty()) {
        g = load_edge_list(cfg.graph_path, cfg.id_base).graph;
    } else {
        auto rng = substream(cfg.seed, 0, StreamRole::graph_gen);
        g = generate_power_law(cfg.synthetic_n, 2.0, rng);
    }
    if (cfg.subsample > 0 && cfg.subsample < g.n()) {
        auto rng = substream(cfg.seed, 0, StreamRole::subsample);
        g = induced_random_subgraph(g, cfg.subsample, rng);
    }
    return g;
}

inline ExperimentResult run_trials(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.graph = acquire_graph(cfg);
    result.ground_truth = cfg.stat == Stat::triangles
                              ? static_cast<double>(count_triangles(result.graph))
                              : static_cast<double>(count_four_cycles(result.graph));

    for (Mechanism mech : cfg.mechanisms) {
        const MechanismSettings st = cfg.resolve(mech);
        for (unsigned t = 0; t < cfg.trials; ++t) {
            const TrialKeys keys{cfg.seed, t};
            const auto start = std::chrono::steady_clock::now();
            const MechanismOutcome outcome = run_mechanism(result.graph, st, keys);
            const auto stop = std::chrono::steady_clock::now();

            TrialResult row;
            row.trial = t;
            row.mechanism = mech;
            row.estimate = outcome.estimate;
            row.ground_truth = result.ground_truth;
            row.relative_err = relative_error(outcome.estimate, result.ground_truth);
            row.upload_bits = outcome.upload_bits;
            row.download_bits = outcome.download_bits;
            row.wall_ms =
                std::chrono::duration<double, std::milli>(stop - start).count();
            row.seed = cfg.seed;
            row.clip_events = outcome.clip_events;
            row.fallback_events = outcome.fallback_events;
            row.s = st.s;
            row.mu_c = st.mu_c;
            row.mu = st.mu;
            result.rows.push_back(row);
        }
    }

    for (Mechanism mech : cfg.mechanisms) {
        std::vector<double> rel, est, up, down, wall;
        for (const auto& row : result.rows) {
            if (row.mechanism != mech) continue;
            rel.push_back(row.relative_err);
            est.push_back(row.estimate);
            up.push_back(static_cast<double>(row.upload_bits));
            down.push_back(static_cast<double>(row.download_bits));
            wall.push_back(row.wall_ms);
        }
        MechanismSummary s;
        s.mechanism = to_string(mech);
        s.mean_relative_error = mean_of(rel);
        s.median_relative_error = median_of(rel);
        s.l2 = l2_error(est, result.ground_truth);
        s.mean_upload_bits = mean_of(up);
        s.mean_download_bits = mean_of(down);
        s.mean_wall_ms = mean_of(wall);
        result.summaries.push_back(s);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

// Shortest round-trip decimal form, deterministic across runs.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_header(bool with_axis = false) {
    std::string head;
    if (with_axis) head += "axis,axis_value,";
    head +=
        "trial,mechanism,stat,n,edges,epsilon,eps0,eps1,eps2,s,mu_c,mu,"
        "estimate,ground_truth,relative_error,upload_bits,download_bits,"
        "clip_events,fallback_events,seed\n";
    return head;
}

inline void append_csv_rows(std::string& out, const ExperimentConfig& cfg,
                            const ExperimentResult& result,
                            const std::string& axis_prefix = "") {
    const BudgetSplit split = cfg.effective_split();
    for (const auto& row : result.rows) {
        out += axis_prefix;
        out += std::to_string(row.trial) + ',' + to_string(row.mechanism) + ',' +
               to_string(cfg.stat) + ',' + std::to_string(result.graph.n()) + ',' +
               std::to_string(result.graph.edge_count()) + ',' +
               format_double(cfg.epsilon) + ',' + format_double(split.eps0) + ',' +
               format_double(split.eps1) + ',' + format_double(split.eps2) + ',' +
               std::to_string(row.s) + ',' + format_double(row.mu_c) + ',' +
               format_double(row.mu) + ',' + format_double(row.estimate) + ',' +
               format_double(row.ground_truth) + ',' + format_double(row.relative_err) +
               ',' + std::to_string(row.upload_bits) + ',' +
               std::to_string(row.download_bits) + ',' + std::to_string(row.clip_events) +
               ',' + std::to_string(row.fallback_events) + ',' + std::to_string(row.seed) +
               '\n';
    }
}

inline std::string to_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
    std::string out = csv_header();
    append_csv_rows(out, cfg, result);
    return out;
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg,
                                   const ExperimentResult& result) {
    const BudgetSplit split = cfg.effective_split();
    nlohmann::json j;
    j["config"] = {
        {"stat", to_string(cfg.stat)},
        {"epsilon", cfg.epsilon},
        {"eps_split", {split.eps0, split.eps1, split.eps2}},
        {"trials", cfg.trials},
        {"seed", cfg.seed},
        {"beta", cfg.beta},
        {"n", result.graph.n()},
        {"edges", result.graph.edge_count()},
        {"relative_error_definition", "|estimate - truth| / max(truth, 1)"},
    };
    if (cfg.mu_star) j["config"]["mu_star"] = *cfg.mu_star;
    if (cfg.s) j["config"]["s"] = *cfg.s;
    if (cfg.mu_c) j["config"]["mu_c"] = *cfg.mu_c;
    j["ground_truth"] = result.ground_truth;
    j["mechanisms"] = nlohmann::json::array();
    for (const auto& s : result.summaries) {
        j["mechanisms"].push_back({
            {"mechanism", s.mechanism},
            {"mean_relative_error", s.mean_relative_error},
            {"median_relative_error", s.median_relative_error},
            {"l2_error", s.l2},
            {"mean_upload_bits", s.mean_upload_bits},
            {"mean_download_bits", s.mean_download_bits},
            {"mean_wall_ms", s.mean_wall_ms},
        });
    }
    return j;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis { mu_star, epsilon, n, s };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::mu_star: return "mu_star";
        case SweepAxis::epsilon: return "epsilon";
        case SweepAxis::n: return "n";
        case SweepAxis::s: return "s";
    }
    return "?";
}

struct SweepPoint {
    double axis_value = 0;
    bool failed = false;
    std::string error;
    ExperimentConfig config;
    ExperimentResult result;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::mu_star;
    std::vector<SweepPoint> points;
};

inline ExperimentConfig config_at(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig cfg = base;
    switch (axis) {
        case SweepAxis::mu_star:
            cfg.mu_star = value;
            cfg.s.reset();
            cfg.mu_c.reset();
            break;
        case SweepAxis::epsilon: {
            const BudgetSplit old = base.effective_split();
            const double scale = value / base.epsilon;
            cfg.epsilon = value;
            cfg.split = BudgetSplit{old.eps0 * scale, old.eps1 * scale, old.eps2 * scale};
            break;
        }
        case SweepAxis::n:
            cfg.subsample = static_cast<NodeId>(value);
            break;
        case SweepAxis::s:
            cfg.s = static_cast<std::uint32_t>(value);
            if (!cfg.mu_c) cfg.mu_c = 1.0;
            cfg.mu_star.reset();
            break;
    }
    return cfg;
}

// Runs run_trials per axis value; failures are recorded and the sweep
// continues.
inline SweepResult sweep(const ExperimentConfig& base, SweepAxis axis,
                         const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
    SweepResult out;
    out.axis = axis;
    for (double v : values) {
        SweepPoint point;
        point.axis_value = v;
        point.config = config_at(base, axis, v);
        try {
            point.result = run_trials(point.config);
        } catch (const std::exception& e) {
            point.failed = true;
            point.error = e.what();
        }
        out.points.push_back(std::move(point));
    }
    return out;
}

inline std::string to_csv(const SweepResult& sweep_result) {
    std::string out = csv_header(/*with_axis=*/true);
    for (const auto& point : sweep_result.points) {
        if (point.failed) continue;
        const std::string prefix =
            to_string(sweep_result.axis) + ',' + format_double(point.axis_value) + ',';
        append_csv_rows(out, point.config, point.result, prefix);
    }
    return out;
}

inline nlohmann::json summary_json(const SweepResult& sweep_result) {
    nlohmann::json j;
    j["axis"] = to_string(sweep_result.axis);
    j["points"] = nlohmann::json::array();
    for (const auto& point : sweep_result.points) {
        nlohmann::json p;
        p["axis_value"] = point.axis_value;
        if (point.failed) {
            p["failed"] = true;
            p["error"] = point.error;
        } else {
            p["summary"] = summary_json(point.config, point.result);
        }
        j["points"].push_back(std::move(p));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

// csv format: rows at `path`, summary at `path` + ".summary.json".
// json format: one document holding both.
inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    if (cfg.out_path.empty()) return;
    if (cfg.format == OutputFormat::csv) {
        write_file(cfg.out_path, to_csv(cfg, result));
        write_file(cfg.out_path + ".summary.json", summary_json(cfg, result).dump(2) + "\n");
    } else {
        nlohmann::json j = summary_json(cfg, result);
        j["rows_csv"] = to_csv(cfg, result);
        write_file(cfg.out_path, j.dump(2) + "\n");
    }
}

}  // namespace grouprr

#endif  // GROUPRR_HARNESS_HPP
