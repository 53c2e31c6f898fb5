#pragma once

// Task sampling and trace loading.
//
// Trace files are JSON Lines: one job per line,
//   {"job_id": "j1", "tasks": [{"cores": 2, "duration": 4, "mem": 1e8}, ...]}
// with `duration` in steps and `mem` in bits. Blank lines and lines starting
// with '#' are skipped. Jobs are flattened to their peak requirements.

#include <algorithm>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgesim/error.hpp"
#include "edgesim/random.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

/// Flattens one job to a task shape: instructions = peak cores x peak
/// duration x reference frequency, data size = peak memory.
inline TaskShape flatten_job(const nlohmann::json& job, double ref_frequency) {
    const auto& tasks = job.at("tasks");
    if (!tasks.is_array() || tasks.empty()) throw Error("job has no tasks");
    double cores = 0.0, duration = 0.0, mem = 0.0;
    for (const auto& t : tasks) {
        cores = std::max(cores, t.at("cores").get<double>());
        duration = std::max(duration, t.at("duration").get<double>());
        mem = std::max(mem, t.at("mem").get<double>());
    }
    if (!(cores > 0 && duration > 0 && mem > 0)) throw Error("cores, duration and mem must be positive");
    TaskShape s;
    s.rho = cores * duration * ref_frequency;
    s.alpha_in = mem;
    s.alpha_out = mem;
    s.xi = 1.0;
    return s;
}

inline std::vector<TaskShape> parse_trace(std::istream& in, double ref_frequency,
                                          const std::string& name = "<trace>") {
    std::vector<TaskShape> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            const auto job = nlohmann::json::parse(line);
            if (!job.is_object() || !job.contains("job_id")) throw Error("missing job_id");
            out.push_back(flatten_job(job, ref_frequency));
        } catch (const std::exception& e) {
            throw Error(name + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
        }
    }
    if (out.empty()) throw Error(name + ": empty job list");
    return out;
}

inline std::vector<TaskShape> load_trace(const std::string& path, double ref_frequency) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    return parse_trace(in, ref_frequency, path);
}

/// Writes a synthetic trace with `jobs` jobs of 1-3 tasks each.
inline void write_trace_fixture(std::ostream& out, int jobs, std::uint64_t seed) {
    Rng rng(seed);
    for (int j = 0; j < jobs; ++j) {
        nlohmann::json job;
        job["job_id"] = "j" + std::to_string(j);
        const int n = 1 + static_cast<int>(uniform_index(rng, 3));
        auto tasks = nlohmann::json::array();
        for (int k = 0; k < n; ++k) {
            tasks.push_back({{"cores", 1 + static_cast<int>(uniform_index(rng, 4))},
                             {"duration", 1 + static_cast<int>(uniform_index(rng, 8))},
                             {"mem", 1e7 * static_cast<double>(1 + uniform_index(rng, 20))}});
        }
        job["tasks"] = tasks;
        out << job.dump() << "\n";
    }
}

/// Draws the attribute values of one task from `tmpl`. Constant ranges draw
/// nothing from the generator.
inline TaskShape sample_shape(const TaskTemplate& tmpl, Rng& rng) {
    if (tmpl.from_trace()) return tmpl.trace[uniform_index(rng, tmpl.trace.size())];
    auto draw = [&](const Range& r) { return r.is_constant() ? r.lo : uniform(rng, r.lo, r.hi); };
    TaskShape s;
    s.rho = draw(tmpl.rho);
    s.alpha_in = draw(tmpl.alpha_in);
    s.alpha_out = draw(tmpl.alpha_out);
    s.xi = draw(tmpl.xi);
    return s;
}

}  // namespace edgesim
