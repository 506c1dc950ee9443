#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "haibench/events.hpp"

namespace haibench::sim {

// mt19937_64 with hand-written transforms; the standard distributions are
// implementation-defined, and logs must be byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    double uniform();                                  // [0, 1)
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
    double normal();
    bool bernoulli(double p);
    double lognormal(double median, double sigma);

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_normal_;
};

// Stable child seed for a (parent, stream) pair.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

// ---------------------------------------------------------------------------

struct Position {
    int x = 0;
    int y = 0;
    bool operator==(const Position&) const = default;
};

double distance(Position a, Position b);

struct Enemy {
    std::string id;
    Position pos;
    double threat = 1.0;
    bool operator==(const Enemy&) const = default;
};

struct Friendly {
    std::string id;
    Position pos;
    bool operator==(const Friendly&) const = default;
};

struct Scenario {
    int grid = 20;
    Position hq;
    std::vector<Enemy> enemies;      // ids E1..En, index order is id order
    std::vector<Friendly> friendlies;  // ids F1..Fm
    std::uint64_t seed = 0;
    bool operator==(const Scenario&) const = default;
};

struct ScenarioParams {
    int grid = 20;
    int enemies = 5;
    int friendlies = 4;
    double threat_min = 1.0;
    double threat_max = 10.0;
};

struct DangerWeights {
    double threat = 1.0;
    double distance = 0.1;
};

Scenario generate_scenario(const ScenarioParams& params, std::uint64_t seed);
void validate_scenario(const Scenario& s);

Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

// danger(e) = w_t * threat(e) - w_d * dist(e, hq)
double danger(const Scenario& s, const Enemy& e, const DangerWeights& w);

struct EngagementPair {
    std::size_t enemy = 0;     // index into Scenario::enemies
    std::size_t friendly = 0;  // index into Scenario::friendlies
    bool operator==(const EngagementPair&) const = default;
};

std::string pair_label(const Scenario& s, EngagementPair p);

struct Solution {
    EngagementPair best;
    std::vector<double> danger;  // per enemy
};

// Most dangerous enemy (ties: lowest id) engaged by its nearest friendly
// (ties: lowest id), found by exhaustive search.
Solution solve_optimal(const Scenario& s, const DangerWeights& w = {});

// All pairs ordered by enemy danger (desc), then enemy-friendly distance
// (asc), then ids. The first entry equals solve_optimal.
std::vector<EngagementPair> rank_pairs(const Scenario& s, const DangerWeights& w = {});

// ---------------------------------------------------------------------------

enum class AutomationLevel { information, low_decision, medium_decision, high_decision };

std::string_view to_string(AutomationLevel level);
AutomationLevel parse_level(std::string_view text);
// Parses a level name or "none" (manual, no advice).
std::optional<AutomationLevel> parse_optional_level(std::string_view text);
std::string level_name(const std::optional<AutomationLevel>& level);

// A_i on [0, 1]: none 0, information 0.25, low 0.5, medium 0.75, high 1.
double automation_level_value(const std::optional<AutomationLevel>& level);

struct AdviceOption {
    std::string enemy;
    std::string friendly;
    double distance = 0;  // enemy to friendly
};

struct Advice {
    AutomationLevel level = AutomationLevel::information;
    std::vector<AdviceOption> options;  // ranked except at information level
    bool correct = true;                // hidden from agents' decision inputs

    // First ranked option; absent at information level.
    std::optional<std::string> recommendation() const;
};

Json advice_to_json(const Advice& a);  // omits the hidden correctness flag

struct ReliabilitySchedule {
    double rate = 1.0;
    std::optional<std::int64_t> first_failure_trial;
    std::uint64_t seed = 0;
};

void validate_schedule(const ReliabilitySchedule& sched);

// Correct before first_failure_trial, incorrect at it, Bernoulli(rate)
// otherwise. A pure function of (schedule, trial index).
bool advice_correct(const ReliabilitySchedule& sched, std::int64_t trial_index);

// Incorrect advice swaps the best and second-best pairs of the ranking.
// Information-level content lists true distances and is never falsified.
Advice advise(const Scenario& s, AutomationLevel level, const ReliabilitySchedule& sched, std::int64_t trial_index,
              const DangerWeights& w = {});

// ---------------------------------------------------------------------------

enum class AgentKind { compliant, manual, anchored, calibrated };

std::string_view to_string(AgentKind kind);
AgentKind parse_agent_kind(std::string_view text);

struct AgentSpec {
    std::string name;
    AgentKind kind = AgentKind::compliant;
    double rt_median_ms = 3000;  // unaided decision
    double rt_sigma = 0.25;
    double trust_init = 0.8;     // calibrated
    double trust_step = 0.2;     // calibrated
    double noise = 0.05;         // manual: probability of picking the runner-up pair
    double check_probability = 0.3;  // anchored: chance of scanning the displayed options
    double probe_accuracy = 0.95;
    double probe_rt_median_ms = 900;
};

void validate_agent(const AgentSpec& agent);

// Fraction of unaided decision effort left when the agent acts on advice at
// a given level. Unaided decisions cost 1.
double reliance_effort(AutomationLevel level);

struct TaskOptions {
    ScenarioParams scenario;
    DangerWeights weights;
    double efficiency_threshold_s = 4.0;
    double system_latency_median_ms = 150;
    double system_latency_sigma = 0.2;
    Millis probe_delay_ms = 300;
    Millis inter_trial_ms = 1000;
};

struct SessionRun {
    Session session;
    GroundTruthKey key;
    std::vector<double> trust;  // calibrated agent trust after each trial
    std::vector<bool> advice_correct;
    std::vector<bool> decision_correct;
};

SessionRun run_session(const TaskOptions& task, const std::optional<AutomationLevel>& level,
                       const ReliabilitySchedule& sched, const AgentSpec& agent, std::int64_t n_trials,
                       std::uint64_t seed, std::string session_id = {});

}  // namespace haibench::sim
