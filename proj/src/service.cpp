#include <chrono>
#include <regex>

#include <httplib.h>

#include "haibench/benchmark.hpp"
#include "haibench/error.hpp"
#include "haibench/service.hpp"

namespace haibench::harness {

namespace fs = std::filesystem;

struct SessionService::Live {
    std::mutex mutex;
    Session session;
    GroundTruthKey key;
    std::optional<sim::AutomationLevel> level;
    sim::ReliabilitySchedule schedule;
    std::uint64_t seed = 0;
    std::int64_t n_trials = 0;
    Millis start = 0;
    std::map<TrialId, Json> views;
    bool closed = false;
};

namespace {

Millis steady_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

class HttpError : public Error {
public:
    HttpError(int status, const std::string& msg) : Error(msg), status(status) {}
    int status;
};

Millis last_t(const Session& s) { return s.events.empty() ? 0 : s.events.back().t; }

Json as_list(const Json& body, const char* field) {
    if (body.is_array()) return body;
    if (body.is_object() && body.contains(field)) {
        if (!body.at(field).is_array()) throw HttpError(400, std::string("'") + field + "' must be an array");
        return body.at(field);
    }
    if (body.is_object() && !body.empty()) return Json::array({body});
    throw HttpError(400, std::string("expected '") + field + "'");
}

}  // namespace

ServiceResponse error_response(int status, const std::string& message) {
    return {status, {{"error", {{"status", status}, {"message", message}}}}};
}

SessionService::SessionService(BenchmarkConfig config, fs::path out_dir, Clock clock)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), clock_(clock ? std::move(clock) : Clock(steady_ms)) {}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Live> SessionService::find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
    return it->second;
}

ServiceResponse SessionService::create_session(const Json& body) {
    if (!body.is_object()) throw HttpError(400, "request body must be an object");
    auto live = std::make_shared<Live>();
    try {
        live->level = body.contains("level") ? sim::parse_optional_level(body.at("level").get<std::string>())
                                             : config_.levels.front();
        const ScheduleSpec* spec = &config_.schedules.front();
        if (body.contains("schedule")) {
            const auto name = body.at("schedule").get<std::string>();
            spec = nullptr;
            for (const auto& s : config_.schedules)
                if (s.name == name) spec = &s;
            if (!spec) throw HttpError(422, "unknown schedule '" + name + "'");
        }
        live->n_trials = body.value("trials", config_.trials_per_session);
        if (live->n_trials < 1) throw HttpError(422, "trials must be at least 1");

        std::uint64_t index;
        {
            std::lock_guard lock(mutex_);
            index = created_++;
        }
        live->seed = session_seed(config_.seed ^ 0x68756d616eULL, index);
        live->schedule = make_schedule(*spec, sim::derive_seed(live->seed, 0x5c4ed));
        auto& s = live->session;
        s.session_id = "h" + std::to_string(index + 1);
        s.subject = Subject::human();
        s.config_ref = {{"level", sim::level_name(live->level)},
                        {"reliability",
                         {{"rate", spec->rate},
                          {"first_failure_trial", spec->first_failure_trial ? Json(*spec->first_failure_trial) : Json()},
                          {"seed", live->schedule.seed}}},
                        {"agent", "human"},
                        {"seed", live->seed}};
        live->key.efficiency_threshold_s = config_.task.efficiency_threshold_s;
        live->start = clock_();
        {
            std::lock_guard lock(mutex_);
            sessions_[s.session_id] = live;
        }
    } catch (const Json::exception& e) {
        throw HttpError(400, std::string("malformed request: ") + e.what());
    } catch (const InvalidInput& e) {
        throw HttpError(422, e.what());
    }
    auto trial = get_trial(live->session.session_id, 1);
    return {201, {{"session_id", live->session.session_id}, {"trials", live->n_trials}, {"trial", trial.body}}};
}

ServiceResponse SessionService::get_trial(const std::string& id, std::int64_t n) {
    auto live = find(id);
    std::lock_guard lock(live->mutex);
    if (n < 1 || n > live->n_trials) throw HttpError(404, "no trial " + std::to_string(n));
    if (auto it = live->views.find(n); it != live->views.end()) return {200, it->second};
    if (live->closed) throw HttpError(409, "session is complete");

    auto& s = live->session;
    const auto scenario = sim::generate_scenario(config_.task.scenario, sim::derive_seed(live->seed, static_cast<std::uint64_t>(n)));
    const auto optimal = sim::pair_label(scenario, sim::solve_optimal(scenario, config_.task.weights).best);
    std::optional<sim::Advice> advice;
    if (live->level) advice = sim::advise(scenario, *live->level, live->schedule, n, config_.task.weights);

    const Millis t = std::max(clock_() - live->start, last_t(s));
    s.trials.insert(std::upper_bound(s.trials.begin(), s.trials.end(), n), n);
    s.events.push_back({s.session_id, t, n, EventKind::stimulus, {{"type", "scenario"}, {"scenario", sim::scenario_to_json(scenario)}}});
    if (advice) s.events.push_back({s.session_id, t, n, EventKind::advice, sim::advice_to_json(*advice)});

    KeyEntry entry;
    entry.optimal = optimal;
    entry.flagged = (advice ? advice->recommendation() : std::nullopt).value_or(optimal);
    entry.truth = entry.flagged == optimal ? GroundTruth::signal : GroundTruth::noise;
    live->key.trials[n] = entry;

    Json view = {{"n", n},
                 {"t", t},
                 {"scenario", sim::scenario_to_json(scenario)},
                 {"advice", advice ? sim::advice_to_json(*advice) : Json(nullptr)}};
    live->views[n] = view;
    return {200, view};
}

ServiceResponse SessionService::post_events(const std::string& id, const Json& body) {
    auto live = find(id);
    std::lock_guard lock(live->mutex);
    if (live->closed) throw HttpError(409, "session is complete");
    const auto items = as_list(body, "events");

    Session draft = live->session;
    Json responses = Json::array();
    const Millis now = clock_() - live->start;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string where = items.size() > 1 ? " (event " + std::to_string(i) + ")" : "";
        Event e;
        try {
            e = event_from_json(items[i], draft.session_id);
        } catch (const Error& err) {
            throw HttpError(400, err.what() + where);
        } catch (const Json::exception& err) {
            throw HttpError(400, std::string("malformed event: ") + err.what() + where);
        }
        if (e.kind != EventKind::operator_action)
            throw HttpError(422, "kind '" + std::string(to_string(e.kind)) + "' is not accepted from clients" + where);
        if (std::llabs(e.t - now) > config_.tolerance_ms)
            throw HttpError(422, "client timestamp " + std::to_string(e.t) + " outside tolerance of receipt time " +
                                     std::to_string(now) + where);
        const auto action = e.payload.value("action", "");
        if (action == "abandon") throw HttpError(422, "abandon is recorded by completing the session" + where);
        try {
            validate_append(draft, e);
        } catch (const Error& err) {
            throw HttpError(422, err.what() + where);
        }
        draft.events.push_back(e);
        if (action == "decide") {
            const Millis t_resp = std::max(now, e.t);
            const auto& entry = live->key.trials.at(*e.trial);
            const auto choice = option_label(e.payload.at("enemy").get<std::string>(), e.payload.at("friendly").get<std::string>());
            draft.events.push_back({draft.session_id, t_resp, e.trial, EventKind::system_response,
                                    {{"interaction", "engagement_order"}, {"feedback", true}}});
            draft.events.push_back({draft.session_id, t_resp, e.trial, EventKind::feedback,
                                    {{"correct", choice == entry.optimal}, {"advice_correct", entry.truth == GroundTruth::signal}}});
            draft.events.push_back({draft.session_id, t_resp, e.trial, EventKind::stimulus, {{"type", "probe"}}});
            responses.push_back({{"trial", *e.trial},
                                 {"t_action", e.t},
                                 {"t_response", t_resp},
                                 {"latency_ms", t_resp - e.t},
                                 {"correct", choice == entry.optimal}});
        }
    }
    const auto accepted = items.size();
    live->session = std::move(draft);
    return {200, {{"accepted", accepted}, {"responses", responses}}};
}

ServiceResponse SessionService::post_questionnaire(const std::string& id, const Json& body) {
    auto live = find(id);
    std::lock_guard lock(live->mutex);
    if (live->closed) throw HttpError(409, "session is complete");
    const auto items = as_list(body, "items");
    auto& s = live->session;
    const Millis t = std::max(clock_() - live->start, last_t(s));
    std::vector<Event> events;
    for (const auto& item : items) {
        if (!item.is_object() || !item.contains("name") || !item.at("name").is_string() || !item.contains("value") ||
            !item.at("value").is_number_integer())
            throw HttpError(400, "questionnaire items need a string name and an integer value");
        const auto v = item.at("value").get<std::int64_t>();
        if (v < kLikertMin || v > kLikertMax)
            throw HttpError(422, "rating " + std::to_string(v) + " outside " + std::to_string(kLikertMin) + ".." +
                                     std::to_string(kLikertMax));
        events.push_back({s.session_id, t, std::nullopt, EventKind::questionnaire,
                          {{"name", item.at("name")}, {"value", v}}});
    }
    for (auto& e : events) s.events.push_back(std::move(e));
    return {200, {{"accepted", events.size()}}};
}

ServiceResponse SessionService::complete(const std::string& id) {
    auto live = find(id);
    std::lock_guard lock(live->mutex);
    if (live->closed) throw HttpError(409, "session is complete");
    auto& s = live->session;
    const auto decided = s.decided_trials();
    s.abandoned.clear();
    for (auto t : s.trials)
        if (!std::binary_search(decided.begin(), decided.end(), t)) s.abandoned.push_back(t);
    validate_session(s);

    const auto rel = fs::path("human") / (s.session_id + ".jsonl");
    write_text(out_dir_ / rel, serialize_log(s));
    write_text(out_dir_ / key_path_for(rel), dump(key_to_json(live->key)));
    live->closed = true;
    return {200,
            {{"session_id", s.session_id},
             {"path", (out_dir_ / rel).generic_string()},
             {"key", (out_dir_ / key_path_for(rel)).generic_string()},
             {"decided", decided.size()},
             {"abandoned", s.abandoned}}};
}

ServiceResponse SessionService::handle(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex trial_re(R"(^/sessions/([A-Za-z0-9_-]+)/trials/(-?[0-9]+)$)");
    static const std::regex action_re(R"(^/sessions/([A-Za-z0-9_-]+)/(events|questionnaire|complete)$)");
    try {
        Json j = Json::object();
        if (method == "POST" && body.find_first_not_of(" \t\r\n") != std::string::npos) {
            try {
                j = Json::parse(body);
            } catch (const Json::parse_error& e) {
                return error_response(400, std::string("malformed JSON body: ") + e.what());
            }
        }
        std::smatch m;
        if (path == "/sessions") {
            if (method != "POST") return error_response(405, "use POST");
            return create_session(j);
        }
        if (std::regex_match(path, m, trial_re)) {
            if (method != "GET") return error_response(405, "use GET");
            return get_trial(m[1], std::stoll(m[2]));
        }
        if (std::regex_match(path, m, action_re)) {
            if (method != "POST") return error_response(405, "use POST");
            if (m[2] == "events") return post_events(m[1], j);
            if (m[2] == "questionnaire") return post_questionnaire(m[1], j);
            return complete(m[1]);
        }
        return error_response(404, "no route for " + method + " " + path);
    } catch (const HttpError& e) {
        return error_response(e.status, e.what());
    } catch (const InvalidInput& e) {
        return error_response(422, e.what());
    } catch (const std::out_of_range& e) {
        return error_response(400, std::string("bad number: ") + e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

// ---------------------------------------------------------------------------

struct HttpFrontend::Impl {
    SessionService& service;
    httplib::Server server;
    explicit Impl(SessionService& s) : service(s) {}
};

HttpFrontend::HttpFrontend(SessionService& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        auto r = impl_->service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::bind(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpFrontend::listen() {
    if (!impl_->server.listen_after_bind()) throw Error("server stopped with an error");
}

void HttpFrontend::stop() { impl_->server.stop(); }

}  // namespace haibench::harness
