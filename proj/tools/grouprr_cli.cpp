// Command-line front end for the GroupRR simulator: runs one experiment or a
// parameter sweep and writes per-trial CSV rows plus a JSON summary.
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grouprr/harness.hpp"

namespace {

using namespace grouprr;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) out.push_back(std::stod(token));
    }
    return out;
}

Mechanism parse_mechanism(const std::string& name) {
    if (name == "grouprr-clip") return Mechanism::grouprr_clip;
    if (name == "grouprr-smooth") return Mechanism::grouprr_smooth;
    if (name == "arr") return Mechanism::arr_style;
    if (name == "rr") return Mechanism::rr_full;
    throw std::invalid_argument("unknown mechanism: " + name);
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "mu-star" || name == "mu_star") return SweepAxis::mu_star;
    if (name == "epsilon") return SweepAxis::epsilon;
    if (name == "n") return SweepAxis::n;
    if (name == "s") return SweepAxis::s;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

int run(int argc, char** argv) {
    CLI::App app{"GroupRR subgraph-counting simulator"};

    std::string graph_path, synthetic, stat = "triangles";
    std::string mechanisms = "grouprr-clip";
    double epsilon = 1.0;
    std::string eps_split;
    double mu_star = -1.0, mu_c = -1.0, beta = kDefaultClipBeta;
    int s = -1;
    unsigned trials = 10, threads = 1;
    std::uint64_t seed = 1;
    unsigned subsample = 0;
    std::string out_path, format = "csv";
    std::string sweep_axis, sweep_values;
    bool one_based = false;

    app.add_option("--graph", graph_path, "edge-list file (SNAP format)");
    app.add_option("--synthetic", synthetic, "synthetic source, e.g. powerlaw:2000");
    app.add_option("--stat", stat, "triangles | c4")
        ->check(CLI::IsMember({"triangles", "c4"}));
    app.add_option("--mechanism", mechanisms,
                   "comma list of grouprr-clip|grouprr-smooth|arr|rr");
    app.add_option("--epsilon", epsilon, "total privacy budget");
    app.add_option("--eps-split", eps_split, "eps0,eps1,eps2 (defaults to 0.1/0.45/0.45)");
    app.add_option("--mu-star", mu_star, "download reduction target in (0,1]");
    app.add_option("--s", s, "group size (with --mu-c)");
    app.add_option("--mu-c", mu_c, "central server sampling rate (with --s)");
    app.add_option("--trials", trials, "simulation runs per configuration");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--subsample", subsample, "induced subgraph size (0 = all)");
    app.add_option("--beta", beta, "clipping failure probability");
    app.add_option("--out", out_path, "output path");
    app.add_option("--format", format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--sweep-axis", sweep_axis, "mu-star | epsilon | n | s");
    app.add_option("--sweep-values", sweep_values, "comma list of axis values");
    app.add_flag("--one-based", one_based, "node ids in the file start at 1");

    CLI11_PARSE(app, argc, argv);

    ExperimentConfig cfg;
    cfg.graph_path = graph_path;
    if (!synthetic.empty()) {
        const auto colon = synthetic.find(':');
        if (synthetic.rfind("powerlaw:", 0) != 0 || colon == std::string::npos) {
            throw std::invalid_argument("--synthetic expects powerlaw:N");
        }
        cfg.synthetic_n = static_cast<NodeId>(std::stoul(synthetic.substr(colon + 1)));
    }
    cfg.id_base = one_based ? IdBase::one_based : IdBase::zero_based;
    cfg.stat = stat == "c4" ? Stat::four_cycles : Stat::triangles;
    {
        std::stringstream ss(mechanisms);
        std::string token;
        cfg.mechanisms.clear();
        while (std::getline(ss, token, ',')) {
            if (!token.empty()) cfg.mechanisms.push_back(parse_mechanism(token));
        }
        if (cfg.mechanisms.empty()) throw std::invalid_argument("no mechanism given");
    }
    cfg.epsilon = epsilon;
    if (!eps_split.empty()) {
        const auto parts = parse_doubles(eps_split);
        if (parts.size() != 3) throw std::invalid_argument("--eps-split needs three values");
        cfg.split = BudgetSplit{parts[0], parts[1], parts[2]};
    }
    if (mu_star > 0) cfg.mu_star = mu_star;
    if (s > 0) cfg.s = static_cast<std::uint32_t>(s);
    if (mu_c > 0) cfg.mu_c = mu_c;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.subsample = static_cast<NodeId>(subsample);
    cfg.beta = beta;
    cfg.threads = threads;
    cfg.out_path = out_path;
    cfg.format = format == "json" ? OutputFormat::json : OutputFormat::csv;

    if (!sweep_axis.empty()) {
        const auto axis = parse_axis(sweep_axis);
        const auto values = parse_doubles(sweep_values);
        const auto result = sweep(cfg, axis, values);
        const std::string csv = to_csv(result);
        const auto summary = summary_json(result);
        if (out_path.empty()) {
            std::cout << csv;
        } else if (cfg.format == OutputFormat::csv) {
            write_file(out_path, csv);
            write_file(out_path + ".summary.json", summary.dump(2) + "\n");
        } else {
            nlohmann::json j = summary;
            j["rows_csv"] = csv;
            write_file(out_path, j.dump(2) + "\n");
        }
        for (const auto& point : result.points) {
            if (point.failed) {
                std::cerr << nlohmann::json{{"error", point.error},
                                            {"axis_value", point.axis_value}}
                                 .dump()
                          << "\n";
            }
        }
        return 0;
    }

    const auto result = run_trials(cfg);
    if (out_path.empty()) {
        std::cout << to_csv(cfg, result);
        std::cerr << summary_json(cfg, result).dump(2) << "\n";
    } else {
        write_outputs(cfg, result);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}
