#include "haibench/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "haibench/error.hpp"

namespace haibench::sim {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw InvalidInput("empty integer range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
}

double Rng::normal() {
    if (spare_normal_) {
        double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(theta);
    return r * std::cos(theta);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::lognormal(double median, double sigma) { return median * std::exp(sigma * normal()); }

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(parent), static_cast<std::uint32_t>(parent >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---------------------------------------------------------------------------

double distance(Position a, Position b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

void validate_scenario(const Scenario& s) {
    if (s.grid <= 0) throw InvalidInput("grid size must be positive");
    if (s.enemies.empty()) throw InvalidInput("scenario needs at least one enemy");
    if (s.friendlies.empty()) throw InvalidInput("scenario needs at least one friendly");
    auto inside = [&](Position p) { return p.x >= 0 && p.y >= 0 && p.x < s.grid && p.y < s.grid; };
    if (!inside(s.hq)) throw InvalidInput("HQ outside the grid");
    for (const auto& e : s.enemies) {
        if (!inside(e.pos)) throw InvalidInput("enemy " + e.id + " outside the grid");
        if (!(e.threat > 0.0) || !std::isfinite(e.threat)) throw InvalidInput("enemy " + e.id + " threat must be positive");
    }
    for (const auto& f : s.friendlies)
        if (!inside(f.pos)) throw InvalidInput("friendly " + f.id + " outside the grid");
    std::set<std::string> ids;
    for (const auto& e : s.enemies)
        if (e.id.empty() || !ids.insert(e.id).second) throw InvalidInput("enemy ids must be unique and non-empty");
    for (const auto& f : s.friendlies)
        if (f.id.empty() || !ids.insert(f.id).second) throw InvalidInput("unit ids must be unique and non-empty");
}

Scenario generate_scenario(const ScenarioParams& p, std::uint64_t seed) {
    if (p.enemies <= 0) throw InvalidInput("at least one enemy required");
    if (p.friendlies <= 0) throw InvalidInput("at least one friendly required");
    if (p.grid <= 0) throw InvalidInput("grid size must be positive");
    if (!(p.threat_min > 0.0) || p.threat_max < p.threat_min) throw InvalidInput("threat range must be positive and ordered");

    Rng rng(seed);
    auto cell = [&] { return Position{int(rng.uniform_int(0, p.grid - 1)), int(rng.uniform_int(0, p.grid - 1))}; };
    Scenario s;
    s.grid = p.grid;
    s.seed = seed;
    s.hq = cell();
    for (int i = 0; i < p.enemies; ++i) {
        Enemy e{"E" + std::to_string(i + 1), cell(), 0.0};
        // Threats on a 0.1 lattice keep logged values short and exact.
        double raw = p.threat_min + (p.threat_max - p.threat_min) * rng.uniform();
        e.threat = std::max(p.threat_min, std::round(raw * 10.0) / 10.0);
        s.enemies.push_back(std::move(e));
    }
    for (int i = 0; i < p.friendlies; ++i) s.friendlies.push_back({"F" + std::to_string(i + 1), cell()});
    return s;
}

Json scenario_to_json(const Scenario& s) {
    Json enemies = Json::array();
    for (const auto& e : s.enemies) enemies.push_back({{"id", e.id}, {"x", e.pos.x}, {"y", e.pos.y}, {"threat", e.threat}});
    Json friendlies = Json::array();
    for (const auto& f : s.friendlies) friendlies.push_back({{"id", f.id}, {"x", f.pos.x}, {"y", f.pos.y}});
    return {{"grid", s.grid},
            {"hq", {{"x", s.hq.x}, {"y", s.hq.y}}},
            {"enemies", enemies},
            {"friendlies", friendlies},
            {"seed", s.seed}};
}

Scenario scenario_from_json(const Json& j) {
    Scenario s;
    s.grid = j.at("grid").get<int>();
    s.hq = {j.at("hq").at("x").get<int>(), j.at("hq").at("y").get<int>()};
    for (const auto& e : j.at("enemies"))
        s.enemies.push_back({e.at("id").get<std::string>(), {e.at("x").get<int>(), e.at("y").get<int>()},
                             e.at("threat").get<double>()});
    for (const auto& f : j.at("friendlies"))
        s.friendlies.push_back({f.at("id").get<std::string>(), {f.at("x").get<int>(), f.at("y").get<int>()}});
    s.seed = j.value("seed", std::uint64_t{0});
    validate_scenario(s);
    return s;
}

double danger(const Scenario& s, const Enemy& e, const DangerWeights& w) {
    return w.threat * e.threat - w.distance * distance(e.pos, s.hq);
}

std::string pair_label(const Scenario& s, EngagementPair p) {
    return option_label(s.enemies.at(p.enemy).id, s.friendlies.at(p.friendly).id);
}

Solution solve_optimal(const Scenario& s, const DangerWeights& w) {
    validate_scenario(s);
    Solution sol;
    for (const auto& e : s.enemies) sol.danger.push_back(danger(s, e, w));
    // Strict comparisons keep the lowest index on ties.
    std::size_t best_enemy = 0;
    for (std::size_t i = 1; i < s.enemies.size(); ++i)
        if (sol.danger[i] > sol.danger[best_enemy]) best_enemy = i;
    std::size_t best_friendly = 0;
    const auto target = s.enemies[best_enemy].pos;
    for (std::size_t j = 1; j < s.friendlies.size(); ++j)
        if (distance(s.friendlies[j].pos, target) < distance(s.friendlies[best_friendly].pos, target)) best_friendly = j;
    sol.best = {best_enemy, best_friendly};
    return sol;
}

std::vector<EngagementPair> rank_pairs(const Scenario& s, const DangerWeights& w) {
    validate_scenario(s);
    std::vector<double> d;
    for (const auto& e : s.enemies) d.push_back(danger(s, e, w));
    std::vector<EngagementPair> pairs;
    for (std::size_t i = 0; i < s.enemies.size(); ++i)
        for (std::size_t j = 0; j < s.friendlies.size(); ++j) pairs.push_back({i, j});
    std::stable_sort(pairs.begin(), pairs.end(), [&](EngagementPair a, EngagementPair b) {
        if (d[a.enemy] != d[b.enemy]) return d[a.enemy] > d[b.enemy];
        if (a.enemy != b.enemy) return a.enemy < b.enemy;
        double da = distance(s.enemies[a.enemy].pos, s.friendlies[a.friendly].pos);
        double db = distance(s.enemies[b.enemy].pos, s.friendlies[b.friendly].pos);
        if (da != db) return da < db;
        return a.friendly < b.friendly;
    });
    return pairs;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AutomationLevel level) {
    switch (level) {
        case AutomationLevel::information: return "information";
        case AutomationLevel::low_decision: return "low_decision";
        case AutomationLevel::medium_decision: return "medium_decision";
        case AutomationLevel::high_decision: return "high_decision";
    }
    return "?";
}

AutomationLevel parse_level(std::string_view text) {
    for (auto l : {AutomationLevel::information, AutomationLevel::low_decision, AutomationLevel::medium_decision,
                   AutomationLevel::high_decision})
        if (to_string(l) == text) return l;
    throw InvalidInput("invalid automation level '" + std::string(text) + "'");
}

std::optional<AutomationLevel> parse_optional_level(std::string_view text) {
    if (text == "none") return std::nullopt;
    return parse_level(text);
}

std::string level_name(const std::optional<AutomationLevel>& level) {
    return level ? std::string(to_string(*level)) : std::string("none");
}

double automation_level_value(const std::optional<AutomationLevel>& level) {
    if (!level) return 0.0;
    switch (*level) {
        case AutomationLevel::information: return 0.25;
        case AutomationLevel::low_decision: return 0.5;
        case AutomationLevel::medium_decision: return 0.75;
        case AutomationLevel::high_decision: return 1.0;
    }
    return 0.0;
}

std::optional<std::string> Advice::recommendation() const {
    if (level == AutomationLevel::information || options.empty()) return std::nullopt;
    return option_label(options.front().enemy, options.front().friendly);
}

Json advice_to_json(const Advice& a) {
    Json options = Json::array();
    int rank = 1;
    for (const auto& o : a.options) {
        Json item = {{"enemy", o.enemy}, {"friendly", o.friendly}, {"distance", o.distance}};
        if (a.level != AutomationLevel::information) item["rank"] = rank++;
        options.push_back(item);
    }
    return {{"level", std::string(to_string(a.level))}, {"options", options}};
}

void validate_schedule(const ReliabilitySchedule& sched) {
    if (!(sched.rate >= 0.0 && sched.rate <= 1.0)) throw InvalidInput("reliability rate must lie in [0, 1]");
    if (sched.first_failure_trial && *sched.first_failure_trial < 1)
        throw InvalidInput("first_failure_trial must be at least 1");
}

bool advice_correct(const ReliabilitySchedule& sched, std::int64_t trial_index) {
    validate_schedule(sched);
    if (trial_index < 1) throw InvalidInput("trial index must be at least 1");
    if (sched.first_failure_trial) {
        if (trial_index < *sched.first_failure_trial) return true;
        if (trial_index == *sched.first_failure_trial) return false;
    }
    Rng rng(derive_seed(sched.seed, static_cast<std::uint64_t>(trial_index)));
    return rng.bernoulli(sched.rate);
}

Advice advise(const Scenario& s, AutomationLevel level, const ReliabilitySchedule& sched, std::int64_t trial_index,
              const DangerWeights& w) {
    Advice a;
    a.level = level;
    const bool drawn_correct = advice_correct(sched, trial_index);
    auto option = [&](EngagementPair p) {
        const auto& e = s.enemies[p.enemy];
        const auto& f = s.friendlies[p.friendly];
        return AdviceOption{e.id, f.id, distance(e.pos, f.pos)};
    };

    if (level == AutomationLevel::information) {
        validate_scenario(s);
        for (std::size_t i = 0; i < s.enemies.size(); ++i)
            for (std::size_t j = 0; j < s.friendlies.size(); ++j) a.options.push_back(option({i, j}));
        a.correct = true;
        return a;
    }

    auto ranked = rank_pairs(s, w);
    if (!drawn_correct) {
        if (ranked.size() < 2) throw Undefined("single engagement pair; advice cannot be made incorrect");
        std::swap(ranked[0], ranked[1]);
    }
    std::size_t keep = ranked.size();
    if (level == AutomationLevel::medium_decision) keep = std::min<std::size_t>(3, ranked.size());
    if (level == AutomationLevel::high_decision) keep = 1;
    for (std::size_t k = 0; k < keep; ++k) a.options.push_back(option(ranked[k]));
    a.correct = drawn_correct;
    return a;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::compliant: return "compliant";
        case AgentKind::manual: return "manual";
        case AgentKind::anchored: return "anchored";
        case AgentKind::calibrated: return "calibrated";
    }
    return "?";
}

AgentKind parse_agent_kind(std::string_view text) {
    for (auto k : {AgentKind::compliant, AgentKind::manual, AgentKind::anchored, AgentKind::calibrated})
        if (to_string(k) == text) return k;
    throw InvalidInput("unknown agent kind '" + std::string(text) + "'");
}

void validate_agent(const AgentSpec& a) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(a.rt_median_ms > 0.0)) throw InvalidInput("rt median must be positive");
    if (!(a.rt_sigma >= 0.0)) throw InvalidInput("rt sigma must be nonnegative");
    if (!(a.probe_rt_median_ms > 0.0)) throw InvalidInput("probe rt median must be positive");
    if (!prob(a.trust_init) || !prob(a.trust_step) || !prob(a.noise) || !prob(a.check_probability) ||
        !prob(a.probe_accuracy))
        throw InvalidInput("agent probabilities must lie in [0, 1]");
}

double reliance_effort(AutomationLevel level) {
    switch (level) {
        case AutomationLevel::information: return 0.85;
        case AutomationLevel::low_decision: return 0.7;
        case AutomationLevel::medium_decision: return 0.55;
        case AutomationLevel::high_decision: return 0.4;
    }
    return 1.0;
}

namespace {

constexpr double kScanEffort = 0.3;
constexpr double kProbeSigma = 0.25;

int likert_from_fraction(double f) {
    return std::clamp(static_cast<int>(std::lround(1.0 + 6.0 * std::clamp(f, 0.0, 1.0))), kLikertMin, kLikertMax);
}

std::string default_session_id(std::uint64_t seed) {
    std::ostringstream os;
    os << "s" << std::hex << seed;
    return os.str();
}

}  // namespace

SessionRun run_session(const TaskOptions& task, const std::optional<AutomationLevel>& level,
                       const ReliabilitySchedule& sched, const AgentSpec& agent, std::int64_t n_trials,
                       std::uint64_t seed, std::string session_id) {
    validate_agent(agent);
    validate_schedule(sched);
    if (n_trials < 1) throw InvalidInput("a session needs at least one trial");
    if (!(task.efficiency_threshold_s > 0.0)) throw InvalidInput("efficiency threshold must be positive");

    SessionRun run;
    Session& s = run.session;
    s.session_id = session_id.empty() ? default_session_id(seed) : std::move(session_id);
    s.subject = Subject::scripted(agent.name.empty() ? std::string(to_string(agent.kind)) : agent.name);
    s.config_ref = {{"level", level_name(level)},
                    {"reliability",
                     {{"rate", sched.rate},
                      {"first_failure_trial", sched.first_failure_trial ? Json(*sched.first_failure_trial) : Json()},
                      {"seed", sched.seed}}},
                    {"agent", s.subject.agent},
                    {"seed", seed}};
    run.key.efficiency_threshold_s = task.efficiency_threshold_s;

    double trust = agent.trust_init;
    double effort_sum = 0.0;
    std::int64_t followed = 0;
    std::int64_t correct_decisions = 0;
    Millis clock = 0;

    auto emit = [&](Millis t, std::optional<TrialId> trial, EventKind kind, Json payload) {
        s.events.push_back({s.session_id, t, trial, kind, std::move(payload)});
    };

    for (std::int64_t trial = 1; trial <= n_trials; ++trial) {
        s.trials.push_back(trial);
        const auto scenario = generate_scenario(task.scenario, derive_seed(seed, static_cast<std::uint64_t>(trial)));
        const auto ranked = rank_pairs(scenario, task.weights);
        const auto best = ranked.front();
        const auto optimal = pair_label(scenario, best);

        // Every draw happens on every trial so agents with matched seeds see
        // matched noise.
        Rng rng(derive_seed(derive_seed(seed, 0x5e55), static_cast<std::uint64_t>(trial)));
        const double z_rt = rng.normal();
        const double u_choice = rng.uniform();
        const double u_check = rng.uniform();
        const double z_latency = rng.normal();
        const double u_probe = rng.uniform();
        const double z_probe = rng.normal();

        std::optional<Advice> advice;
        if (level) advice = advise(scenario, *level, sched, trial, task.weights);
        const auto rec = advice ? advice->recommendation() : std::nullopt;

        const double unaided_effort = advice ? reliance_effort(AutomationLevel::information) : 1.0;
        auto self_solve = [&](bool noisy) {
            if (noisy && ranked.size() > 1 && u_choice < agent.noise) return pair_label(scenario, ranked[1]);
            return optimal;
        };

        std::string choice;
        double effort = 1.0;
        bool relied = false;
        switch (agent.kind) {
            case AgentKind::manual:
                choice = self_solve(true);
                effort = 1.0;
                break;
            case AgentKind::compliant:
                if (rec) {
                    choice = *rec;
                    effort = reliance_effort(*level);
                    relied = true;
                } else {
                    choice = self_solve(false);
                    effort = unaided_effort;
                }
                break;
            case AgentKind::anchored:
                if (rec) {
                    choice = *rec;
                    effort = reliance_effort(*level);
                    relied = true;
                    if (u_check < agent.check_probability) {
                        // Scanning the displayed options finds the truly best one among them.
                        for (auto p : ranked) {
                            auto label = pair_label(scenario, p);
                            bool shown = std::any_of(advice->options.begin(), advice->options.end(), [&](const auto& o) {
                                return option_label(o.enemy, o.friendly) == label;
                            });
                            if (shown) {
                                choice = label;
                                break;
                            }
                        }
                        effort += kScanEffort;
                        relied = choice == *rec;
                    }
                } else {
                    choice = self_solve(false);
                    effort = unaided_effort;
                }
                break;
            case AgentKind::calibrated:
                if (rec && u_choice < trust) {
                    choice = *rec;
                    effort = reliance_effort(*level);
                    relied = true;
                } else {
                    choice = self_solve(false);
                    effort = unaided_effort;
                }
                break;
        }

        const Millis rt = std::max<Millis>(1, std::llround(agent.rt_median_ms * effort * std::exp(agent.rt_sigma * z_rt)));
        const Millis latency = std::max<Millis>(
            0, std::llround(task.system_latency_median_ms * std::exp(task.system_latency_sigma * z_latency)));
        const Millis probe_rt = std::max<Millis>(1, std::llround(agent.probe_rt_median_ms * std::exp(kProbeSigma * z_probe)));
        const bool decision_ok = choice == optimal;
        const bool advice_ok = advice ? advice->correct : true;
        const auto sep = choice.find(':');

        const Millis t0 = clock;
        emit(t0, trial, EventKind::stimulus, {{"type", "scenario"}, {"scenario", scenario_to_json(scenario)}});
        if (advice) emit(t0, trial, EventKind::advice, advice_to_json(*advice));
        emit(t0 + rt, trial, EventKind::operator_action,
             {{"action", "decide"}, {"enemy", choice.substr(0, sep)}, {"friendly", choice.substr(sep + 1)}});
        const Millis t_resp = t0 + rt + latency;
        emit(t_resp, trial, EventKind::system_response, {{"interaction", "engagement_order"}, {"feedback", true}});
        emit(t_resp, trial, EventKind::feedback, {{"correct", decision_ok}, {"advice_correct", advice_ok}});
        const Millis t_probe = t_resp + task.probe_delay_ms;
        emit(t_probe, trial, EventKind::stimulus, {{"type", "probe"}});
        emit(t_probe + probe_rt, trial, EventKind::operator_action,
             {{"action", "probe_response"}, {"correct", u_probe < agent.probe_accuracy}});
        clock = t_probe + probe_rt + task.inter_trial_ms;

        KeyEntry entry;
        entry.flagged = rec.value_or(optimal);
        entry.optimal = optimal;
        entry.truth = entry.flagged == optimal ? GroundTruth::signal : GroundTruth::noise;
        run.key.trials[trial] = entry;

        if (agent.kind == AgentKind::calibrated && rec) {
            if (advice_ok) trust += agent.trust_step * (1.0 - trust);
            else trust *= (1.0 - agent.trust_step);
        }
        run.trust.push_back(trust);
        run.advice_correct.push_back(advice_ok);
        run.decision_correct.push_back(decision_ok);
        effort_sum += effort;
        followed += relied ? 1 : 0;
        correct_decisions += decision_ok ? 1 : 0;
    }

    // Scripted self-report; deterministic functions of agent state.
    const double n = static_cast<double>(n_trials);
    double perceived_trust = 0.0;
    switch (agent.kind) {
        case AgentKind::compliant: perceived_trust = 1.0; break;
        case AgentKind::manual: perceived_trust = 0.0; break;
        case AgentKind::anchored: perceived_trust = static_cast<double>(followed) / n; break;
        case AgentKind::calibrated: perceived_trust = trust; break;
    }
    const Millis t_end = clock;
    emit(t_end, std::nullopt, EventKind::questionnaire,
         {{"name", "workload"}, {"value", likert_from_fraction(effort_sum / n)}, {"synthetic", true}});
    emit(t_end, std::nullopt, EventKind::questionnaire,
         {{"name", "trust"}, {"value", likert_from_fraction(perceived_trust)}, {"synthetic", true}});
    emit(t_end, std::nullopt, EventKind::questionnaire,
         {{"name", "self_confidence"},
          {"value", likert_from_fraction(static_cast<double>(correct_decisions) / n)},
          {"synthetic", true}});
    if (level) {
        const auto good = std::count(run.advice_correct.begin(), run.advice_correct.end(), true);
        emit(t_end, std::nullopt, EventKind::questionnaire,
             {{"name", "clarity"}, {"value", likert_from_fraction(static_cast<double>(good) / n)}, {"synthetic", true}});
    }

    validate_session(s);
    return run;
}

}  // namespace haibench::sim
