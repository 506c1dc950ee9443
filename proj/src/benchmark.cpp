#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "haibench/benchmark.hpp"
#include "haibench/causal.hpp"
#include "haibench/error.hpp"

namespace haibench::harness {

namespace fs = std::filesystem;

namespace {

struct CellSpec {
    std::optional<sim::AutomationLevel> level;
    const ScheduleSpec* schedule = nullptr;
    const sim::AgentSpec* agent = nullptr;
    std::string name;
};

struct CellResult {
    Json report;
    std::string error;
};

std::string padded(std::size_t i, std::size_t n) {
    auto s = std::to_string(i);
    auto width = std::to_string(n).size();
    return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

CellResult run_cell(const BenchmarkConfig& config, const CellSpec& cell, const fs::path& out_dir) {
    CellResult out;
    try {
        std::vector<SessionEntry> entries;
        const auto n = static_cast<std::size_t>(config.sessions_per_cell);
        for (std::size_t i = 0; i < n; ++i) {
            const auto seed = session_seed(config.seed, i);
            const auto sched = make_schedule(*cell.schedule, sim::derive_seed(seed, 0x5c4ed));
            const auto id = cell.name + "-" + padded(i + 1, n);
            auto run = sim::run_session(config.task, cell.level, sched, *cell.agent, config.trials_per_session, seed, id);
            const auto rel = fs::path("logs") / cell.name / (id + ".jsonl");
            write_text(out_dir / rel, serialize_log(run.session));
            write_text(out_dir / key_path_for(rel), dump(key_to_json(run.key)));
            entries.push_back({id, rel.generic_string(), compute_metrics(run.session, &run.key, config)});
        }
        Json c = {{"name", cell.name},
                  {"level", sim::level_name(cell.level)},
                  {"schedule", cell.schedule->name},
                  {"agent", cell.agent->name}};
        out.report = make_report(config, c, entries);
    } catch (const std::exception& e) {
        out.error = cell.name + ": " + e.what();
    }
    return out;
}

}  // namespace

fs::path resolve_output_dir(const BenchmarkConfig& config, const std::optional<std::string>& cli_out) {
    if (cli_out && !cli_out->empty()) return *cli_out;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return config.output_dir;
}

std::string cell_name(const std::optional<sim::AutomationLevel>& level, const ScheduleSpec& schedule,
                      const sim::AgentSpec& agent) {
    return sim::level_name(level) + "__" + schedule.name + "__" + agent.name;
}

std::uint64_t session_seed(std::uint64_t master, std::size_t index) {
    return sim::derive_seed(master, static_cast<std::uint64_t>(index) + 1);
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

fs::path key_path_for(const fs::path& log) {
    auto p = log;
    p.replace_extension(".key.json");
    return p;
}

Json run_causal_jobs(const BenchmarkConfig& config) {
    Json out = Json::array();
    for (const auto& job : config.causal) {
        Json entry = {{"name", job.name}};
        try {
            auto model = causal::model_from_json(job.model);
            entry["results"] = causal::run_queries(model, job.queries);
        } catch (const std::exception& e) {
            entry["error"] = e.what();
        }
        out.push_back(entry);
    }
    return out;
}

Json run_benchmark(const BenchmarkConfig& config, const fs::path& out_dir) {
    std::vector<CellSpec> cells;
    for (const auto& level : config.levels)
        for (const auto& sched : config.schedules)
            for (const auto& agent : config.agents) cells.push_back({level, &sched, &agent, cell_name(level, sched, agent)});

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) results[i] = run_cell(config, cells[i], out_dir);
    };
    const auto n_threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& r : results)
        if (!r.error.empty()) throw Error(r.error);

    Json summary_cells = Json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto rel = fs::path("cells") / (cells[i].name + ".json");
        write_text(out_dir / rel, dump(results[i].report));
        summary_cells.push_back({{"cell", results[i].report.at("cell")},
                                 {"report", rel.generic_string()},
                                 {"sessions", results[i].report.at("sessions").size()},
                                 {"aggregate", results[i].report.at("aggregate")}});
    }
    Json summary = {{"tool", "haibench"},
                    {"version", tool_version()},
                    {"fingerprint", config_fingerprint(config)},
                    {"config", canonical_config(config)},
                    {"metrics", config.metrics},
                    {"cells", summary_cells},
                    {"causal", run_causal_jobs(config)}};
    write_text(out_dir / "summary.json", dump(summary));
    write_text(out_dir / "summary.csv", summary_csv(summary));
    return summary;
}

Json score_logs(const std::vector<fs::path>& logs, const BenchmarkConfig& config) {
    if (logs.empty()) throw InvalidInput("no logs to score");
    std::vector<SessionEntry> entries;
    for (const auto& path : logs) {
        std::ifstream in(path);
        if (!in) throw InvalidInput("cannot open " + path.string());
        Session s;
        try {
            s = ingest_log(in);
        } catch (const Error& e) {
            throw InvalidInput(path.string() + ": " + e.what());
        }
        std::optional<GroundTruthKey> key;
        const auto kp = key_path_for(path);
        if (fs::exists(kp)) key = key_from_json(read_json(kp));
        entries.push_back({s.session_id, path.generic_string(), compute_metrics(s, key ? &*key : nullptr, config)});
    }
    return make_report(config, Json{{"name", "scored"}}, entries);
}

}  // namespace haibench::harness
