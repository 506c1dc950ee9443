#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haibench/config.hpp"
#include "haibench/error.hpp"
#include "haibench/events.hpp"

namespace haibench::harness {

// Field name -> value or per-field error, for one session.
using MetricValues = std::map<std::string, FieldValue>;

// Report fields produced by one metric group, in a fixed order.
const std::vector<std::string>& metric_fields(const std::string& metric);
std::vector<std::string> selected_fields(const std::vector<std::string>& metrics);

// Computes every selected metric for one session. Works identically on
// scripted and human logs; a missing key turns key-dependent fields into
// errors rather than failing the session.
MetricValues compute_metrics(const Session& session, const GroundTruthKey* key, const BenchmarkConfig& config);

Json field_to_json(const FieldValue& v);
FieldValue field_from_json(const Json& j);

// Mean and median over sessions, per field; fields with no value in any
// session carry the first error.
Json aggregate(const std::vector<MetricValues>& sessions, const std::vector<std::string>& fields);

struct SessionEntry {
    std::string session_id;
    std::string log;  // path relative to the output directory, may be empty
    MetricValues values;
};

Json make_report(const BenchmarkConfig& config, const Json& cell, const std::vector<SessionEntry>& sessions);

// Per-field deltas (b - a) between two reports' aggregates.
Json compare_designs(const Json& report_a, const Json& report_b);

// Flat long-format table: one row per (cell, field).
std::string summary_csv(const Json& summary);

std::string tool_version();

}  // namespace haibench::harness
