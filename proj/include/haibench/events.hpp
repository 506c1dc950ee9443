#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace haibench {

using Json = nlohmann::json;

// Milliseconds since session start.
using Millis = std::int64_t;
using TrialId = std::int64_t;

enum class EventKind {
    stimulus,
    advice,
    operator_action,
    system_response,
    feedback,
    alarm,
    questionnaire,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

// One record of an event log. The payload is a flat object whose keys depend
// on the kind:
//   stimulus         {"type": "scenario" | "probe", ...}
//   advice           {"level": ..., "options": [...]}
//   operator_action  {"action": "decide", "enemy": id, "friendly": id}
//                    {"action": "abandon"} | {"action": "probe_response", "correct": bool}
//   system_response  {"interaction": id, "feedback": bool}
//   feedback         {"correct": bool, ...}
//   questionnaire    {"name": string, "value": 1..7}
struct Event {
    std::string session_id;
    Millis t = 0;
    std::optional<TrialId> trial;
    EventKind kind = EventKind::stimulus;
    Json payload = Json::object();

    bool operator==(const Event&) const = default;
};

struct Subject {
    enum class Kind { human, scripted_agent };
    Kind kind = Kind::human;
    std::string agent;  // empty for humans

    static Subject human() { return {}; }
    static Subject scripted(std::string name) { return {Kind::scripted_agent, std::move(name)}; }

    std::string to_string() const;
    static Subject parse(std::string_view text);

    bool operator==(const Subject&) const = default;
};

struct LikertItem {
    std::string name;
    int value = 0;

    bool operator==(const LikertItem&) const = default;
};

inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 7;

struct Session {
    std::string session_id;
    Json config_ref;  // task, automation level, reliability, seed
    Subject subject;
    std::vector<TrialId> trials;     // declared in the header, ascending
    std::vector<TrialId> abandoned;  // subset of trials, ascending
    std::vector<Event> events;

    std::vector<LikertItem> questionnaire() const;
    // Trials that carry exactly one decide action, ascending.
    std::vector<TrialId> decided_trials() const;

    bool operator==(const Session&) const = default;
};

// Parses and validates a newline-delimited log. The optional first record
// with kind "header" declares session metadata; without it the declared trial
// set is the set of trials referenced by events.
Session ingest_log(std::istream& in);
Session ingest_log(std::string_view text);
std::string serialize_log(const Session& session);

// Checks every Session invariant; throws InvalidInput naming the violation.
void validate_session(const Session& session);

// Incremental form of the ordering and trial-reference checks, shared with
// the live session service.
void validate_append(const Session& session, const Event& next);

Json event_to_json(const Event& e);
Event event_from_json(const Json& j, std::string_view session_id);

// ---------------------------------------------------------------------------
// Judgment records

enum class GroundTruth { signal, noise };
enum class Response { yes, no };

struct JudgmentRecord {
    GroundTruth ground_truth = GroundTruth::signal;
    Response response = Response::no;
    std::optional<double> decision_time;  // seconds
    std::optional<bool> coherent;
    std::optional<bool> accurate;
    std::optional<bool> efficient;

    bool operator==(const JudgmentRecord&) const = default;
};

// Ground truth for one trial. `flagged` is the option whose selection counts
// as a "yes" response; `optimal` is the correct engagement.
struct KeyEntry {
    GroundTruth truth = GroundTruth::signal;
    std::string flagged;
    std::string optimal;
};

struct GroundTruthKey {
    std::map<TrialId, KeyEntry> trials;
    // Decisions slower than this are not counted as efficient.
    double efficiency_threshold_s = 4.0;
};

Json key_to_json(const GroundTruthKey& key);
GroundTruthKey key_from_json(const Json& j);

// Engagement option label, e.g. "E2:F1".
std::string option_label(std::string_view enemy, std::string_view friendly);

std::vector<JudgmentRecord> derive_judgments(const Session& session, const GroundTruthKey& key);

// ---------------------------------------------------------------------------
// Heuristic test outcomes

struct HeuristicOutcome {
    std::string heuristic_id;
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

// ---------------------------------------------------------------------------
// System inventory

struct FrontEndComponent {
    std::string id;
    std::optional<std::string> chunk_group;
};

struct BackEndInteraction {
    std::string id;
    bool provides_feedback = false;
    std::optional<std::string> duplicate_of;
    bool critical = false;
    bool overlooked = false;
};

struct SystemInventory {
    std::vector<FrontEndComponent> front_end;
    std::vector<BackEndInteraction> back_end;
};

// Unique ids, existing non-self duplicate targets, acyclic duplicate chains.
void validate_inventory(const SystemInventory& inv);

Json inventory_to_json(const SystemInventory& inv);
SystemInventory inventory_from_json(const Json& j);

}  // namespace haibench
