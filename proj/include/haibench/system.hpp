#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haibench/error.hpp"
#include "haibench/events.hpp"

namespace haibench::system {

// ---------------------------------------------------------------------------
// Impairment taxonomy. Elementary automation failures (WEAF), systemic
// automation failures (WSAF) and human-automation interaction breakdowns
// (WHAIB) share one shape: a criticality-weighted share of failed items.

enum class FailureFlavor { weaf, wsaf, whaib };

struct WeightedItem {
    double weight = 1.0;  // criticality / severity, > 0
    bool failed = false;
};

struct WeightedFailureInput {
    std::vector<WeightedItem> items;
    FailureFlavor flavor = FailureFlavor::weaf;
};

struct WeightedFailureScore {
    double raw = 0;               // sum(w * failed) / sum(w), in [0, 1]
    double paper_normalized = 0;  // raw / sum(w), the literal second division
};

WeightedFailureScore weighted_failure_score(const WeightedFailureInput& input);

// ---------------------------------------------------------------------------
// Front-end / back-end inventory metrics

struct InteractionBalance {
    FieldValue cib;         // |front| / |back|
    std::int64_t op = 0;    // max(0, |back| - |front|)
    std::int64_t ir = 0;    // |back| - |back after collapsing duplicates|
    FieldValue fe;          // feedback interactions / |back|
};

InteractionBalance interaction_balance(const SystemInventory& inv);

// Working-memory bounds used by WAR and NI.
inline constexpr std::int64_t kAttentionLow = 5;
inline constexpr std::int64_t kAttentionHigh = 9;

struct AttentionMetrics {
    FieldValue ase;         // chunked front-end components / |front|
    std::int64_t war = 0;   // max(0, 5 - |front|)
    std::int64_t ni = 0;    // max(0, |front| - 9)
};

AttentionMetrics attention_metrics(const SystemInventory& inv);

// 2^max(0, critical-and-overlooked back-end interactions - 9)
double critical_risk(const SystemInventory& inv);
double critical_risk(std::int64_t critical_overlooked);

// ---------------------------------------------------------------------------
// Timing

struct TimingInput {
    double tct = 0;  // task completion time, s
    double bt = 0;   // baseline time, s
    double er = 0;   // error rate
    double alpha = 1;
    double beta = 1;
};

// alpha * TCT/BT + beta * ER
double cognitive_strain(const TimingInput& input);

struct ClarityInput {
    double art = 0;  // average response time, s
    double ert = 0;  // reference response time, s
    double ar = 0;   // accuracy rate
    double gamma = 1;
    double delta = 1;
    std::vector<int> user_scores;
    int scale_min = kLikertMin;
    int scale_max = kLikertMax;
};

struct ClarityScores {
    double ccs1 = 0;  // gamma * ART/ERT + delta * AR
    FieldValue ccs2;  // mean user score
};

ClarityScores component_clarity(const ClarityInput& input);

// t_response - t_action; a negative difference means the log is misordered.
Millis operational_latency(Millis t_action, Millis t_response);

// ---------------------------------------------------------------------------
// Composite human / system performance modules

struct CompositeCoefficients {
    std::optional<double> alpha1;
    std::optional<double> beta1;
    std::optional<double> delta1;
    std::optional<double> alpha2;
    std::optional<double> l_threshold;
    std::optional<double> h_error;
    std::optional<double> c_load;
    std::optional<double> f_base;
    std::optional<double> automation_level;  // A_i in [0, 1]
    std::int64_t bfid = 0;
    std::map<std::string, std::int64_t> failure_counts;
};

enum class HumanVariant { lumberjack, load };
enum class SystemVariant { base, with_bfid };

// lumberjack: alpha1*A - delta1*L_threshold
// load:       alpha1*A + beta1*C - H_error
double human_performance(const CompositeCoefficients& c, HumanVariant variant);

// base:      alpha2*F - sum(F_type)
// with_bfid: alpha2*F + BFID - sum(F_type)
double system_performance(const CompositeCoefficients& c, SystemVariant variant);

}  // namespace haibench::system
