// edgesim command-line runner.
//
// Every verb reads a base config from --config, or from $EDGESIM_CONFIG when
// the flag is absent, or the built-in defaults. Any config key can be
// overridden with a dotted flag: `--lambda 0.3`, `--reward.chi_o=100`.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgesim/edgesim.hpp"

namespace {

using namespace edgesim;

struct BaseConfig {
    ConfigValues values;
    std::filesystem::path base_dir = ".";

    SimConfig build() const { return config_from_values(values, base_dir); }
};

BaseConfig load_base(const std::string& config_path, const std::vector<std::string>& extras) {
    BaseConfig base;
    std::string path = config_path;
    if (path.empty())
        if (const char* env = std::getenv("EDGESIM_CONFIG")) path = env;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file: " + path);
        base.values = parse_config_values(in, path);
        base.base_dir = std::filesystem::path(path).parent_path();
        if (base.base_dir.empty()) base.base_dir = ".";
    }
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0) throw Error("unexpected argument: " + arg);
        std::string key = arg.substr(2);
        std::string value;
        if (auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key.erase(eq);
        } else {
            if (i + 1 >= extras.size()) throw Error("missing value for --" + key);
            value = extras[++i];
        }
        if (!is_config_key(key)) throw Error("unknown key: " + key);
        base.values[key] = value;
    }
    return base;
}

template <class T>
std::vector<T> split_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if constexpr (std::is_same_v<T, std::string>) out.push_back(item);
        else out.push_back(detail::parse_number(item));
    }
    return out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw Error("cannot write " + path);
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgesim: multi-agent task offloading simulator"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "config file (default: $EDGESIM_CONFIG)");

    auto* validate = app.add_subcommand("validate", "check a config and report every violation");
    auto* print = validate->add_flag("--print", "print the resolved config");

    auto* run = app.add_subcommand("run", "run episodes with one baseline policy and print a CSV summary row");
    std::string run_policy = "local";
    int run_episodes = 1;
    std::string run_out;
    run->add_option("--policy", run_policy, "local | random | least_queue");
    run->add_option("--episodes", run_episodes, "episodes (seed ladder: seed + episode index)");
    run->add_option("--out", run_out, "CSV output file (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "sweep lambda or cluster count over baseline policies");
    std::string axis = "lambda", values_text, policies_text = "local,random,least_queue", scenario = "sweep", sweep_out;
    int sweep_episodes = 10, jobs = 1;
    sweep->add_option("--axis", axis, "lambda | clusters");
    sweep->add_option("--values", values_text, "comma-separated axis values")->required();
    sweep->add_option("--policies", policies_text, "comma-separated baseline policies");
    sweep->add_option("--episodes", sweep_episodes, "episodes per cell");
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_option("--scenario", scenario, "scenario label for the CSV");
    sweep->add_option("--out", sweep_out, "CSV output file (default stdout)");

    auto* train = app.add_subcommand("train", "train tabular Q-learners and evaluate them");
    int train_episodes = 300, eval_episodes = 100;
    QLearnerParams qp;
    std::string table_prefix, curve_out, load_prefix;
    train->add_option("--episodes", train_episodes, "training episodes");
    train->add_option("--eval-episodes", eval_episodes, "evaluation episodes");
    train->add_option("--alpha", qp.alpha, "learning rate");
    train->add_option("--gamma", qp.gamma, "discount");
    train->add_option("--epsilon-start", qp.epsilon_start);
    train->add_option("--epsilon-end", qp.epsilon_end);
    train->add_option("--epsilon-decay", qp.epsilon_decay, "per-episode multiplicative decay");
    train->add_option("--buckets", qp.buckets, "queue-occupancy buckets per block");
    train->add_option("--tables", table_prefix, "write Q-tables to <prefix>agent<id>.qtable");
    train->add_option("--load", load_prefix, "skip training; evaluate tables from <prefix>agent<id>.qtable");
    train->add_option("--curve", curve_out, "learning curve CSV");

    auto* serve = app.add_subcommand("serve", "serve the agent bridge over TCP");
    int port = 7070;
    std::string host = "127.0.0.1";
    serve->add_option("--port", port);
    serve->add_option("--host", host);

    auto* gen_topo = app.add_subcommand("gen-topology", "write the config's topology in topology-file form");
    std::string topo_out;
    gen_topo->add_option("--out", topo_out, "output file (default stdout)");

    auto* gen_trace = app.add_subcommand("gen-trace-fixture", "write a synthetic JSON-lines trace");
    int trace_jobs = 20;
    std::uint64_t trace_seed = 1;
    std::string trace_out;
    gen_trace->add_option("--jobs", trace_jobs);
    gen_trace->add_option("--seed", trace_seed);
    gen_trace->add_option("--out", trace_out, "output file (default stdout)");

    app.allow_extras();
    for (auto* sub : app.get_subcommands({})) sub->allow_extras()->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        auto* sub = app.get_subcommands().front();
        std::vector<std::string> overrides = app.remaining();
        for (const auto& a : sub->remaining()) overrides.push_back(a);
        const BaseConfig base = load_base(config_path, overrides);

        if (sub == gen_trace) {
            std::ofstream f;
            write_trace_fixture(open_out(trace_out, f), trace_jobs, trace_seed);
            return 0;
        }

        if (sub == validate) {
            SimConfig c;
            try {
                c = base.build();
            } catch (const ConfigError& e) {
                for (const auto& v : e.violations()) std::cerr << "violation: " << v << "\n";
                return 1;
            }
            if (*print) serialize_config(std::cout, c);
            std::cout << "ok: " << c.topology.size() << " nodes, " << c.topology.controllers().size() << " agents\n";
            return 0;
        }

        const SimConfig config = base.build();

        if (sub == run) {
            SweepSpec spec;
            spec.scenario = "run";
            spec.values = {config.lambda};
            spec.policies = {parse_baseline(run_policy)};
            spec.episodes = run_episodes;
            spec.base = config;
            std::ofstream f;
            write_csv(open_out(run_out, f), run_sweep(spec));
        } else if (sub == sweep) {
            SweepSpec spec;
            spec.scenario = scenario;
            if (axis == "lambda") spec.axis = SweepAxis::lambda;
            else if (axis == "clusters") spec.axis = SweepAxis::clusters;
            else throw Error("unknown axis: " + axis);
            spec.values = split_list<double>(values_text);
            for (const auto& p : split_list<std::string>(policies_text)) spec.policies.push_back(parse_baseline(p));
            spec.episodes = sweep_episodes;
            spec.jobs = jobs;
            spec.base = config;
            std::ofstream f;
            write_csv(open_out(sweep_out, f), run_sweep(spec));
        } else if (sub == train) {
            QTables tables;
            if (!load_prefix.empty()) {
                tables = load_qtables(load_prefix, config);
            } else {
                const TrainingResult r = train_q(config, train_episodes, qp);
                tables = r.tables;
                if (!curve_out.empty()) {
                    std::ofstream f(curve_out);
                    if (!f) throw Error("cannot write " + curve_out);
                    write_learning_curve(f, r);
                }
                if (!table_prefix.empty()) save_qtables(table_prefix, tables);
            }
            std::vector<SummaryRow> rows;
            auto add = [&](const std::string& name, const std::vector<EpisodeMetrics>& batch) {
                SummaryRow row;
                row.scenario = "eval";
                row.policy = name;
                row.lambda = config.lambda;
                row.clusters = cluster_count(config);
                row.seed = config.seed;
                row.summary = summarize(batch);
                rows.push_back(row);
            };
            if (eval_episodes > 0) {
                add("tabular_q", evaluate_q(config, tables, qp, eval_episodes));
                add("local", evaluate_baseline(config, BaselineKind::local, eval_episodes));
                add("random", evaluate_baseline(config, BaselineKind::random, eval_episodes));
                write_csv(std::cout, rows);
            }
        } else if (sub == serve) {
            bridge::Server server(base.values, base.base_dir);
            const int bound = server.start(port, host);
            std::cerr << "edgesim bridge listening on " << host << ":" << bound << "\n";
            server.wait();
        } else if (sub == gen_topo) {
            std::ofstream f;
            write_topology(open_out(topo_out, f), config.topology);
        }
        return 0;
    } catch (const ConfigError& e) {
        for (const auto& v : e.violations()) std::cerr << "violation: " << v << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
