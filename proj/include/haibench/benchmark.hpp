#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "haibench/config.hpp"
#include "haibench/report.hpp"

namespace haibench::harness {

// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "HAIBENCH_OUTPUT_DIR";

// Command-line value first, then the environment, then the config.
std::filesystem::path resolve_output_dir(const BenchmarkConfig& config, const std::optional<std::string>& cli_out = {});

std::string cell_name(const std::optional<sim::AutomationLevel>& level, const ScheduleSpec& schedule,
                      const sim::AgentSpec& agent);

// Seed of the i-th session (0-based) in every cell. Shared across cells so
// designs are compared on matched scenarios and noise.
std::uint64_t session_seed(std::uint64_t master, std::size_t index);

// Runs every level x schedule x agent cell and writes
//   cells/<cell>.json, logs/<cell>/<session>.jsonl (+ .key.json),
//   summary.json, summary.csv
// under out_dir. Returns the summary document.
Json run_benchmark(const BenchmarkConfig& config, const std::filesystem::path& out_dir);

// Ingest mode: scores existing logs. Each log's key is read from the sibling
// <name>.key.json when present.
Json score_logs(const std::vector<std::filesystem::path>& logs, const BenchmarkConfig& config);

Json run_causal_jobs(const BenchmarkConfig& config);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string dump(const Json& j);  // canonical indented form, newline-terminated

std::filesystem::path key_path_for(const std::filesystem::path& log);

}  // namespace haibench::harness
