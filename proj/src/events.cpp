#include "haibench/events.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "haibench/error.hpp"

namespace haibench {

namespace {

constexpr std::string_view kHeaderKind = "header";

std::string at_line(std::size_t line) { return line == 0 ? std::string() : " at line " + std::to_string(line); }

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::int64_t require_int(const Json& j, const char* field, std::size_t line) {
    auto it = j.find(field);
    if (it == j.end()) throw InvalidInput(std::string("malformed record") + at_line(line) + ": missing '" + field + "'");
    if (!it->is_number_integer())
        throw InvalidInput(std::string("malformed record") + at_line(line) + ": '" + field + "' must be an integer");
    return it->get<std::int64_t>();
}

std::string require_string(const Json& j, const char* field, std::size_t line) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string())
        throw InvalidInput(std::string("malformed record") + at_line(line) + ": '" + field + "' must be a string");
    return it->get<std::string>();
}

std::vector<TrialId> trial_list(const Json& j, const char* field, std::size_t line) {
    std::vector<TrialId> out;
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return out;
    if (!it->is_array()) throw InvalidInput(std::string("malformed header") + at_line(line) + ": '" + field + "' must be an array");
    for (const auto& v : *it) {
        if (!v.is_number_integer()) throw InvalidInput(std::string("malformed header") + at_line(line) + ": non-integer trial id");
        out.push_back(v.get<TrialId>());
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
        throw InvalidInput(std::string("malformed header") + at_line(line) + ": duplicate trial id in '" + field + "'");
    return out;
}

void check_payload(const Event& e, const std::string& where) {
    switch (e.kind) {
        case EventKind::operator_action: {
            auto it = e.payload.find("action");
            if (it == e.payload.end() || !it->is_string())
                throw InvalidInput("operator_action without 'action'" + where);
            if (*it == "decide") {
                auto en = e.payload.find("enemy");
                auto fr = e.payload.find("friendly");
                if (en == e.payload.end() || !en->is_string() || fr == e.payload.end() || !fr->is_string())
                    throw InvalidInput("decide action needs string 'enemy' and 'friendly'" + where);
                if (!e.trial) throw InvalidInput("decide action without trial" + where);
            }
            break;
        }
        case EventKind::questionnaire: {
            auto name = e.payload.find("name");
            auto value = e.payload.find("value");
            if (name == e.payload.end() || !name->is_string() || value == e.payload.end() || !value->is_number_integer())
                throw InvalidInput("questionnaire item needs 'name' and integer 'value'" + where);
            auto v = value->get<std::int64_t>();
            if (v < kLikertMin || v > kLikertMax)
                throw InvalidInput("Likert value " + std::to_string(v) + " outside 1-7" + where);
            break;
        }
        default:
            break;
    }
}

bool is_decision(const Event& e) {
    return e.kind == EventKind::operator_action && e.payload.value("action", "") == "decide";
}

Json opt_string(const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); }

std::optional<std::string> read_opt_string(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw InvalidInput(std::string("inventory field '") + field + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::stimulus: return "stimulus";
        case EventKind::advice: return "advice";
        case EventKind::operator_action: return "operator_action";
        case EventKind::system_response: return "system_response";
        case EventKind::feedback: return "feedback";
        case EventKind::alarm: return "alarm";
        case EventKind::questionnaire: return "questionnaire";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    static const std::pair<std::string_view, EventKind> table[] = {
        {"stimulus", EventKind::stimulus},
        {"advice", EventKind::advice},
        {"operator_action", EventKind::operator_action},
        {"system_response", EventKind::system_response},
        {"feedback", EventKind::feedback},
        {"alarm", EventKind::alarm},
        {"questionnaire", EventKind::questionnaire},
    };
    for (const auto& [name, kind] : table)
        if (name == text) return kind;
    return std::nullopt;
}

std::string Subject::to_string() const {
    return kind == Kind::human ? std::string("human") : "scripted:" + agent;
}

Subject Subject::parse(std::string_view text) {
    if (text == "human") return human();
    constexpr std::string_view prefix = "scripted:";
    if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size())
        return scripted(std::string(text.substr(prefix.size())));
    throw InvalidInput("unknown subject_kind '" + std::string(text) + "'");
}

std::vector<LikertItem> Session::questionnaire() const {
    std::vector<LikertItem> items;
    for (const auto& e : events)
        if (e.kind == EventKind::questionnaire)
            items.push_back({e.payload.at("name").get<std::string>(), e.payload.at("value").get<int>()});
    return items;
}

std::vector<TrialId> Session::decided_trials() const {
    std::set<TrialId> out;
    for (const auto& e : events)
        if (is_decision(e)) out.insert(*e.trial);
    return {out.begin(), out.end()};
}

Json event_to_json(const Event& e) {
    Json j;
    j["session"] = e.session_id;
    j["t"] = e.t;
    j["trial"] = e.trial ? Json(*e.trial) : Json(nullptr);
    j["kind"] = std::string(to_string(e.kind));
    j["payload"] = e.payload;
    return j;
}

Event event_from_json(const Json& j, std::string_view session_id) {
    if (!j.is_object()) throw InvalidInput("malformed record: not an object");
    static const std::set<std::string> allowed = {"session", "t", "trial", "kind", "payload"};
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw InvalidInput("malformed record: unexpected field '" + k + "'");
    Event e;
    e.session_id = j.contains("session") ? require_string(j, "session", 0) : std::string(session_id);
    if (!session_id.empty() && e.session_id != session_id)
        throw InvalidInput("record belongs to session '" + e.session_id + "'");
    auto kind_text = require_string(j, "kind", 0);
    auto kind = parse_event_kind(kind_text);
    if (!kind) throw InvalidInput("unknown kind '" + kind_text + "'");
    e.kind = *kind;
    e.t = require_int(j, "t", 0);
    if (e.t < 0) throw InvalidInput("negative timestamp");
    if (auto it = j.find("trial"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw InvalidInput("malformed record: 'trial' must be an integer");
        e.trial = it->get<TrialId>();
    }
    if (auto it = j.find("payload"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw InvalidInput("malformed record: 'payload' must be an object");
        e.payload = *it;
    }
    check_payload(e, "");
    return e;
}

void validate_append(const Session& session, const Event& next) {
    if (next.session_id != session.session_id)
        throw InvalidInput("event for session '" + next.session_id + "' appended to '" + session.session_id + "'");
    if (next.t < 0) throw InvalidInput("negative timestamp");
    if (!session.events.empty() && next.t < session.events.back().t) throw InvalidInput("timestamp regression");
    if (next.trial && !std::binary_search(session.trials.begin(), session.trials.end(), *next.trial))
        throw InvalidInput("dangling trial_id " + std::to_string(*next.trial));
    check_payload(next, "");
    if (is_decision(next)) {
        for (const auto& e : session.events)
            if (is_decision(e) && e.trial == next.trial)
                throw InvalidInput("trial " + std::to_string(*next.trial) + " already decided");
    }
}

void validate_session(const Session& s) {
    if (!std::is_sorted(s.trials.begin(), s.trials.end()) ||
        std::adjacent_find(s.trials.begin(), s.trials.end()) != s.trials.end())
        throw InvalidInput("declared trials must be unique and ascending");
    for (auto a : s.abandoned)
        if (!std::binary_search(s.trials.begin(), s.trials.end(), a))
            throw InvalidInput("abandoned trial " + std::to_string(a) + " not declared");

    std::map<TrialId, int> decisions;
    std::set<TrialId> referenced;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& e = s.events[i];
        if (e.session_id != s.session_id) throw InvalidInput("event " + std::to_string(i) + " belongs to another session");
        if (e.t < 0) throw InvalidInput("negative timestamp in event " + std::to_string(i));
        if (i > 0 && e.t < s.events[i - 1].t) throw InvalidInput("timestamp regression in event " + std::to_string(i));
        if (e.trial) {
            if (!std::binary_search(s.trials.begin(), s.trials.end(), *e.trial))
                throw InvalidInput("dangling trial_id " + std::to_string(*e.trial));
            referenced.insert(*e.trial);
        }
        check_payload(e, " in event " + std::to_string(i));
        if (is_decision(e)) ++decisions[*e.trial];
    }
    for (auto trial : referenced) {
        bool abandoned = std::binary_search(s.abandoned.begin(), s.abandoned.end(), trial);
        int n = decisions.count(trial) ? decisions[trial] : 0;
        if (abandoned && n > 0) throw InvalidInput("trial " + std::to_string(trial) + " is both decided and abandoned");
        if (!abandoned && n != 1)
            throw InvalidInput("trial " + std::to_string(trial) + " has " + std::to_string(n) + " decisions");
    }
}

Session ingest_log(std::istream& in) {
    Session s;
    bool have_header = false;
    std::set<TrialId> referenced;
    std::string line;
    std::size_t line_no = 0;
    std::size_t records = 0;
    Millis last_t = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw InvalidInput("malformed record" + at_line(line_no));
        auto kind_text = require_string(j, "kind", line_no);

        if (kind_text == kHeaderKind) {
            if (records != 0) throw InvalidInput("header must be the first record" + at_line(line_no));
            static const std::set<std::string> allowed = {"session", "t", "kind", "config_ref", "subject_kind", "trials",
                                                          "abandoned"};
            for (const auto& [k, v] : j.items())
                if (!allowed.count(k)) throw InvalidInput("malformed header" + at_line(line_no) + ": unexpected field '" + k + "'");
            s.session_id = require_string(j, "session", line_no);
            s.config_ref = j.value("config_ref", Json());
            s.subject = Subject::parse(j.value("subject_kind", std::string("human")));
            s.trials = trial_list(j, "trials", line_no);
            s.abandoned = trial_list(j, "abandoned", line_no);
            have_header = true;
            ++records;
            continue;
        }

        if (!parse_event_kind(kind_text)) throw InvalidInput("unknown kind '" + kind_text + "'" + at_line(line_no));
        Event e;
        try {
            e = event_from_json(j, records == 0 ? std::string_view{} : std::string_view{s.session_id});
        } catch (const InvalidInput& err) {
            throw InvalidInput(std::string(err.what()) + at_line(line_no));
        }
        if (records == 0) s.session_id = e.session_id;
        if (!s.events.empty() && e.t < last_t) throw InvalidInput("timestamp regression" + at_line(line_no));
        if (e.trial) {
            if (have_header && !std::binary_search(s.trials.begin(), s.trials.end(), *e.trial))
                throw InvalidInput("dangling trial_id " + std::to_string(*e.trial) + at_line(line_no));
            referenced.insert(*e.trial);
        }
        last_t = e.t;
        s.events.push_back(std::move(e));
        ++records;
    }
    if (records == 0) throw InvalidInput("empty log");
    if (!have_header) s.trials.assign(referenced.begin(), referenced.end());
    validate_session(s);
    return s;
}

Session ingest_log(std::string_view text) {
    std::istringstream in{std::string(text)};
    return ingest_log(in);
}

std::string serialize_log(const Session& s) {
    std::string out;
    Json header;
    header["session"] = s.session_id;
    header["t"] = 0;
    header["kind"] = std::string(kHeaderKind);
    header["config_ref"] = s.config_ref;
    header["subject_kind"] = s.subject.to_string();
    header["trials"] = s.trials;
    header["abandoned"] = s.abandoned;
    out += header.dump();
    out += '\n';
    for (const auto& e : s.events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string option_label(std::string_view enemy, std::string_view friendly) {
    std::string out(enemy);
    out += ':';
    out += friendly;
    return out;
}

Json key_to_json(const GroundTruthKey& key) {
    Json trials = Json::object();
    for (const auto& [id, entry] : key.trials) {
        trials[std::to_string(id)] = {
            {"truth", entry.truth == GroundTruth::signal ? "signal" : "noise"},
            {"flagged", entry.flagged},
            {"optimal", entry.optimal},
        };
    }
    return {{"efficiency_threshold_s", key.efficiency_threshold_s}, {"trials", trials}};
}

GroundTruthKey key_from_json(const Json& j) {
    GroundTruthKey key;
    key.efficiency_threshold_s = j.value("efficiency_threshold_s", key.efficiency_threshold_s);
    if (!(key.efficiency_threshold_s > 0)) throw InvalidInput("efficiency_threshold_s must be positive");
    for (const auto& [id, v] : j.at("trials").items()) {
        KeyEntry entry;
        auto truth = v.at("truth").get<std::string>();
        if (truth == "signal") entry.truth = GroundTruth::signal;
        else if (truth == "noise") entry.truth = GroundTruth::noise;
        else throw InvalidInput("ground truth must be 'signal' or 'noise', got '" + truth + "'");
        entry.flagged = v.at("flagged").get<std::string>();
        entry.optimal = v.value("optimal", entry.flagged);
        key.trials[std::stoll(id)] = entry;
    }
    return key;
}

std::vector<JudgmentRecord> derive_judgments(const Session& session, const GroundTruthKey& key) {
    for (auto trial : session.trials)
        if (!key.trials.count(trial)) throw InvalidInput("trial " + std::to_string(trial) + " missing from ground-truth key");

    std::map<TrialId, Millis> stimulus_t;
    std::map<TrialId, const Event*> decision;
    for (const auto& e : session.events) {
        if (!e.trial) continue;
        if (e.kind == EventKind::stimulus && e.payload.value("type", "scenario") != "probe")
            stimulus_t.try_emplace(*e.trial, e.t);
        else if (is_decision(e))
            decision.emplace(*e.trial, &e);
    }

    std::vector<JudgmentRecord> out;
    out.reserve(decision.size());
    for (const auto& [trial, ev] : decision) {
        if (std::binary_search(session.abandoned.begin(), session.abandoned.end(), trial)) continue;
        auto stim = stimulus_t.find(trial);
        if (stim == stimulus_t.end()) throw InvalidInput("trial " + std::to_string(trial) + " has no stimulus event");
        const auto& entry = key.trials.at(trial);
        if (ev->t <= stim->second)
            throw InvalidInput("trial " + std::to_string(trial) + " decided before its stimulus");

        auto chosen = option_label(ev->payload.at("enemy").get<std::string>(), ev->payload.at("friendly").get<std::string>());
        JudgmentRecord r;
        r.ground_truth = entry.truth;
        r.response = chosen == entry.flagged ? Response::yes : Response::no;
        r.decision_time = static_cast<double>(ev->t - stim->second) / 1000.0;
        r.accurate = chosen == entry.optimal;
        r.efficient = *r.accurate && *r.decision_time <= key.efficiency_threshold_s;
        r.coherent = (entry.truth == GroundTruth::signal) == (r.response == Response::yes);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------

void validate_inventory(const SystemInventory& inv) {
    std::unordered_set<std::string> front_ids;
    for (const auto& c : inv.front_end)
        if (!front_ids.insert(c.id).second) throw InvalidInput("duplicate front-end id '" + c.id + "'");

    std::unordered_map<std::string, const BackEndInteraction*> back;
    for (const auto& b : inv.back_end)
        if (!back.emplace(b.id, &b).second) throw InvalidInput("duplicate back-end id '" + b.id + "'");

    for (const auto& b : inv.back_end) {
        if (!b.duplicate_of) continue;
        if (*b.duplicate_of == b.id) throw InvalidInput("back-end '" + b.id + "' is a duplicate of itself");
        if (!back.count(*b.duplicate_of))
            throw InvalidInput("back-end '" + b.id + "' duplicates unknown id '" + *b.duplicate_of + "'");
        // A chain longer than the list must revisit a node.
        const BackEndInteraction* cur = &b;
        for (std::size_t steps = 0; cur->duplicate_of; ++steps) {
            if (steps > inv.back_end.size()) throw InvalidInput("duplicate_of cycle through '" + b.id + "'");
            cur = back.at(*cur->duplicate_of);
        }
    }
}

Json inventory_to_json(const SystemInventory& inv) {
    Json front = Json::array();
    for (const auto& c : inv.front_end) front.push_back({{"id", c.id}, {"chunk_group", opt_string(c.chunk_group)}});
    Json back = Json::array();
    for (const auto& b : inv.back_end)
        back.push_back({{"id", b.id},
                        {"provides_feedback", b.provides_feedback},
                        {"duplicate_of", opt_string(b.duplicate_of)},
                        {"critical", b.critical},
                        {"overlooked", b.overlooked}});
    return {{"front_end", front}, {"back_end", back}};
}

SystemInventory inventory_from_json(const Json& j) {
    SystemInventory inv;
    for (const auto& c : j.value("front_end", Json::array()))
        inv.front_end.push_back({c.at("id").get<std::string>(), read_opt_string(c, "chunk_group")});
    for (const auto& b : j.value("back_end", Json::array())) {
        BackEndInteraction x;
        x.id = b.at("id").get<std::string>();
        x.provides_feedback = b.value("provides_feedback", false);
        x.duplicate_of = read_opt_string(b, "duplicate_of");
        x.critical = b.value("critical", false);
        x.overlooked = b.value("overlooked", false);
        inv.back_end.push_back(std::move(x));
    }
    validate_inventory(inv);
    return inv;
}

}  // namespace haibench
