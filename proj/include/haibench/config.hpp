#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haibench/events.hpp"
#include "haibench/sim.hpp"

namespace haibench::harness {

struct ScheduleSpec {
    std::string name;
    double rate = 1.0;
    std::optional<std::int64_t> first_failure_trial;
};

// Weighting factors and reference values used by the metric engine. All
// default to 1 unless they are reference times or thresholds.
struct Coefficients {
    double alpha = 1, beta = 1;   // strain index
    double gamma = 1, delta = 1;  // clarity score
    double baseline_time_s = 3.0;
    double reference_response_s = 3.0;
    double latency_bound_ms = 1000;  // slower system responses count as systemic failures
    std::int64_t alignment_block = 10;  // judgments per heuristic test
    double alpha1 = 1, beta1 = 1, delta1 = 1, alpha2 = 1;
    double l_threshold = 0.75;
    std::optional<double> f_base;  // defaults to the number of decided trials
};

struct CausalJob {
    std::string name;
    Json model;    // inline model document
    Json queries;  // array of query objects
};

struct BenchmarkConfig {
    std::uint64_t seed = 0;
    std::int64_t sessions_per_cell = 10;
    std::int64_t trials_per_session = 40;
    std::string output_dir = "haibench-out";
    sim::TaskOptions task;
    std::vector<std::optional<sim::AutomationLevel>> levels;
    std::vector<ScheduleSpec> schedules;
    std::vector<sim::AgentSpec> agents;
    std::vector<std::string> metrics;
    Coefficients coefficients;
    std::optional<SystemInventory> inventory;
    std::map<std::string, SystemInventory> level_inventories;
    std::vector<CausalJob> causal;
    std::int64_t tolerance_ms = 2000;  // live service: client vs server clock
};

// Every metric group the engine knows, in report order.
const std::vector<std::string>& metric_catalogue();

// Parses and validates a config document. Relative causal model paths are
// resolved against base_dir and inlined.
BenchmarkConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
BenchmarkConfig load_config(const std::filesystem::path& path);

// Fully expanded config with defaults; excludes the output directory, which
// carries no meaning for results.
Json canonical_config(const BenchmarkConfig& c);
std::string config_fingerprint(const BenchmarkConfig& c);

std::string sha256_hex(const std::string& data);

sim::ReliabilitySchedule make_schedule(const ScheduleSpec& spec, std::uint64_t seed);

}  // namespace haibench::harness
