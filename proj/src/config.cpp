#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "haibench/config.hpp"
#include "haibench/error.hpp"

namespace haibench::harness {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be an object");
    for (const auto& [k, _] : j.items()) {
        bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
        if (!known) throw InvalidInput("unknown field '" + k + "' in " + where);
    }
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it != j.end() && !it->is_null()) out = it->get<T>();
}

template <class T>
void read_opt(const Json& j, const char* key, std::optional<T>& out) {
    auto it = j.find(key);
    if (it != j.end() && !it->is_null()) out = it->get<T>();
}

sim::TaskOptions task_from_json(const Json& j) {
    check_keys(j,
               {"grid", "enemies", "friendlies", "threat_min", "threat_max", "w_threat", "w_distance",
                "efficiency_threshold_s", "system_latency_median_ms", "system_latency_sigma", "probe_delay_ms",
                "inter_trial_ms"},
               "task");
    sim::TaskOptions t;
    read(j, "grid", t.scenario.grid);
    read(j, "enemies", t.scenario.enemies);
    read(j, "friendlies", t.scenario.friendlies);
    read(j, "threat_min", t.scenario.threat_min);
    read(j, "threat_max", t.scenario.threat_max);
    read(j, "w_threat", t.weights.threat);
    read(j, "w_distance", t.weights.distance);
    read(j, "efficiency_threshold_s", t.efficiency_threshold_s);
    read(j, "system_latency_median_ms", t.system_latency_median_ms);
    read(j, "system_latency_sigma", t.system_latency_sigma);
    read(j, "probe_delay_ms", t.probe_delay_ms);
    read(j, "inter_trial_ms", t.inter_trial_ms);
    if (t.scenario.grid < 2) throw InvalidInput("task.grid must be at least 2");
    if (t.scenario.enemies < 1 || t.scenario.friendlies < 1) throw InvalidInput("task needs at least one enemy and one friendly");
    if (!(t.scenario.threat_min <= t.scenario.threat_max)) throw InvalidInput("task.threat_min exceeds threat_max");
    if (!(t.efficiency_threshold_s > 0)) throw InvalidInput("task.efficiency_threshold_s must be positive");
    if (!(t.system_latency_median_ms > 0) || t.system_latency_sigma < 0) throw InvalidInput("bad system latency");
    if (t.probe_delay_ms < 0 || t.inter_trial_ms < 0) throw InvalidInput("task delays must be non-negative");
    return t;
}

Json task_to_json(const sim::TaskOptions& t) {
    return {{"grid", t.scenario.grid},
            {"enemies", t.scenario.enemies},
            {"friendlies", t.scenario.friendlies},
            {"threat_min", t.scenario.threat_min},
            {"threat_max", t.scenario.threat_max},
            {"w_threat", t.weights.threat},
            {"w_distance", t.weights.distance},
            {"efficiency_threshold_s", t.efficiency_threshold_s},
            {"system_latency_median_ms", t.system_latency_median_ms},
            {"system_latency_sigma", t.system_latency_sigma},
            {"probe_delay_ms", t.probe_delay_ms},
            {"inter_trial_ms", t.inter_trial_ms}};
}

sim::AgentSpec agent_from_json(const Json& j) {
    sim::AgentSpec a;
    if (j.is_string()) {
        a.name = j.get<std::string>();
        a.kind = sim::parse_agent_kind(a.name);
        return a;
    }
    check_keys(j,
               {"name", "kind", "rt_median_ms", "rt_sigma", "trust_init", "trust_step", "noise", "check_probability",
                "probe_accuracy", "probe_rt_median_ms"},
               "agent");
    a.kind = sim::parse_agent_kind(j.at("kind").get<std::string>());
    a.name = j.value("name", std::string(sim::to_string(a.kind)));
    read(j, "rt_median_ms", a.rt_median_ms);
    read(j, "rt_sigma", a.rt_sigma);
    read(j, "trust_init", a.trust_init);
    read(j, "trust_step", a.trust_step);
    read(j, "noise", a.noise);
    read(j, "check_probability", a.check_probability);
    read(j, "probe_accuracy", a.probe_accuracy);
    read(j, "probe_rt_median_ms", a.probe_rt_median_ms);
    sim::validate_agent(a);
    return a;
}

Json agent_to_json(const sim::AgentSpec& a) {
    return {{"name", a.name},
            {"kind", sim::to_string(a.kind)},
            {"rt_median_ms", a.rt_median_ms},
            {"rt_sigma", a.rt_sigma},
            {"trust_init", a.trust_init},
            {"trust_step", a.trust_step},
            {"noise", a.noise},
            {"check_probability", a.check_probability},
            {"probe_accuracy", a.probe_accuracy},
            {"probe_rt_median_ms", a.probe_rt_median_ms}};
}

Coefficients coefficients_from_json(const Json& j) {
    check_keys(j,
               {"alpha", "beta", "gamma", "delta", "baseline_time_s", "reference_response_s", "latency_bound_ms",
                "alignment_block", "alpha1", "beta1", "delta1", "alpha2", "l_threshold", "f_base"},
               "metrics.coefficients");
    Coefficients c;
    read(j, "alpha", c.alpha);
    read(j, "beta", c.beta);
    read(j, "gamma", c.gamma);
    read(j, "delta", c.delta);
    read(j, "baseline_time_s", c.baseline_time_s);
    read(j, "reference_response_s", c.reference_response_s);
    read(j, "latency_bound_ms", c.latency_bound_ms);
    read(j, "alignment_block", c.alignment_block);
    read(j, "alpha1", c.alpha1);
    read(j, "beta1", c.beta1);
    read(j, "delta1", c.delta1);
    read(j, "alpha2", c.alpha2);
    read(j, "l_threshold", c.l_threshold);
    read_opt(j, "f_base", c.f_base);
    if (!(c.baseline_time_s > 0) || !(c.reference_response_s > 0))
        throw InvalidInput("reference times must be positive");
    if (c.alignment_block < 1) throw InvalidInput("metrics.coefficients.alignment_block must be at least 1");
    return c;
}

Json coefficients_to_json(const Coefficients& c) {
    return {{"alpha", c.alpha},
            {"beta", c.beta},
            {"gamma", c.gamma},
            {"delta", c.delta},
            {"baseline_time_s", c.baseline_time_s},
            {"reference_response_s", c.reference_response_s},
            {"latency_bound_ms", c.latency_bound_ms},
            {"alignment_block", c.alignment_block},
            {"alpha1", c.alpha1},
            {"beta1", c.beta1},
            {"delta1", c.delta1},
            {"alpha2", c.alpha2},
            {"l_threshold", c.l_threshold},
            {"f_base", c.f_base ? Json(*c.f_base) : Json(nullptr)}};
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

}  // namespace

const std::vector<std::string>& metric_catalogue() {
    static const std::vector<std::string> names = {
        "accuracy", "classification", "reward", "sdt", "ndm", "coherence", "lens", "cct",
        "alignment", "policy_capture", "rt", "latency", "secondary", "questionnaire", "csi", "ccs",
        "weaf", "wsaf", "whaib", "interaction", "attention", "cri", "human_performance", "system_performance",
    };
    return names;
}

BenchmarkConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    try {
        check_keys(j,
                   {"seed", "sessions_per_cell", "trials_per_session", "output_dir", "task", "levels", "schedules",
                    "agents", "metrics", "inventory", "inventories", "causal", "service"},
                   "config");
        BenchmarkConfig c;
        if (!j.contains("seed") || j.at("seed").is_null()) throw InvalidInput("config.seed is required");
        if (!j.at("seed").is_number_integer()) throw InvalidInput("config.seed must be an integer");
        c.seed = j.at("seed").get<std::uint64_t>();
        read(j, "sessions_per_cell", c.sessions_per_cell);
        read(j, "trials_per_session", c.trials_per_session);
        read(j, "output_dir", c.output_dir);
        if (c.sessions_per_cell < 1) throw InvalidInput("sessions_per_cell must be at least 1");
        if (c.trials_per_session < 1) throw InvalidInput("trials_per_session must be at least 1");
        if (j.contains("task")) c.task = task_from_json(j.at("task"));

        std::set<std::string> seen;
        for (const auto& l : j.value("levels", Json::array({"information"}))) {
            auto level = sim::parse_optional_level(l.get<std::string>());
            if (!seen.insert(sim::level_name(level)).second) throw InvalidInput("duplicate level " + l.get<std::string>());
            c.levels.push_back(level);
        }
        if (c.levels.empty()) throw InvalidInput("at least one level is required");

        seen.clear();
        for (const auto& s : j.value("schedules", Json::array({Json{{"name", "reliable"}, {"rate", 1.0}}}))) {
            check_keys(s, {"name", "rate", "first_failure_trial"}, "schedule");
            ScheduleSpec spec;
            spec.rate = s.value("rate", 1.0);
            read_opt(s, "first_failure_trial", spec.first_failure_trial);
            spec.name = s.value("name", "");
            if (spec.name.empty()) throw InvalidInput("schedule needs a name");
            if (!seen.insert(spec.name).second) throw InvalidInput("duplicate schedule " + spec.name);
            sim::validate_schedule(make_schedule(spec, 0));
            c.schedules.push_back(spec);
        }
        if (c.schedules.empty()) throw InvalidInput("at least one schedule is required");

        seen.clear();
        for (const auto& a : j.value("agents", Json::array({"compliant"}))) {
            auto spec = agent_from_json(a);
            if (!seen.insert(spec.name).second) throw InvalidInput("duplicate agent " + spec.name);
            c.agents.push_back(spec);
        }
        if (c.agents.empty()) throw InvalidInput("at least one agent is required");

        Json metrics = j.value("metrics", Json::object());
        Json select;
        if (metrics.is_array() || metrics.is_string()) {
            select = metrics;
        } else {
            check_keys(metrics, {"select", "coefficients"}, "metrics");
            select = metrics.value("select", Json("all"));
            if (metrics.contains("coefficients")) c.coefficients = coefficients_from_json(metrics.at("coefficients"));
        }
        const auto& catalogue = metric_catalogue();
        if (select.is_string() && select.get<std::string>() == "all") {
            c.metrics = catalogue;
        } else {
            std::set<std::string> chosen;
            for (const auto& m : select) {
                auto name = m.get<std::string>();
                if (std::find(catalogue.begin(), catalogue.end(), name) == catalogue.end())
                    throw InvalidInput("unknown metric '" + name + "'");
                chosen.insert(name);
            }
            for (const auto& name : catalogue)
                if (chosen.count(name)) c.metrics.push_back(name);
        }
        if (c.metrics.empty()) throw InvalidInput("at least one metric must be selected");

        if (j.contains("inventory") && !j.at("inventory").is_null()) {
            c.inventory = inventory_from_json(j.at("inventory"));
            validate_inventory(*c.inventory);
        }
        for (const auto& [level, inv] : j.value("inventories", Json::object()).items()) {
            auto parsed = sim::parse_optional_level(level);
            auto key = sim::level_name(parsed);
            c.level_inventories[key] = inventory_from_json(inv);
            validate_inventory(c.level_inventories[key]);
        }

        std::size_t n = 0;
        for (const auto& job : j.value("causal", Json::array())) {
            check_keys(job, {"name", "model", "queries"}, "causal job");
            CausalJob cj;
            cj.name = job.value("name", "causal" + std::to_string(++n));
            const auto& model = job.at("model");
            cj.model = model.is_string() ? read_json_file(base_dir / model.get<std::string>()) : model;
            const auto& queries = job.at("queries");
            cj.queries = queries.is_string() ? read_json_file(base_dir / queries.get<std::string>()) : queries;
            if (cj.queries.is_object() && cj.queries.contains("queries")) cj.queries = cj.queries.at("queries");
            if (!cj.queries.is_array()) cj.queries = Json::array({cj.queries});
            c.causal.push_back(std::move(cj));
        }

        if (j.contains("service")) {
            check_keys(j.at("service"), {"tolerance_ms"}, "service");
            read(j.at("service"), "tolerance_ms", c.tolerance_ms);
            if (c.tolerance_ms < 0) throw InvalidInput("service.tolerance_ms must be non-negative");
        }
        return c;
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed config: ") + e.what());
    }
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
    return config_from_json(read_json_file(path), path.parent_path());
}

Json canonical_config(const BenchmarkConfig& c) {
    Json levels = Json::array();
    for (const auto& l : c.levels) levels.push_back(sim::level_name(l));
    Json schedules = Json::array();
    for (const auto& s : c.schedules)
        schedules.push_back({{"name", s.name},
                             {"rate", s.rate},
                             {"first_failure_trial", s.first_failure_trial ? Json(*s.first_failure_trial) : Json(nullptr)}});
    Json agents = Json::array();
    for (const auto& a : c.agents) agents.push_back(agent_to_json(a));
    Json inventories = Json::object();
    for (const auto& [k, v] : c.level_inventories) inventories[k] = inventory_to_json(v);
    Json causal = Json::array();
    for (const auto& job : c.causal) causal.push_back({{"name", job.name}, {"model", job.model}, {"queries", job.queries}});
    return {{"seed", c.seed},
            {"sessions_per_cell", c.sessions_per_cell},
            {"trials_per_session", c.trials_per_session},
            {"task", task_to_json(c.task)},
            {"levels", levels},
            {"schedules", schedules},
            {"agents", agents},
            {"metrics", {{"select", c.metrics}, {"coefficients", coefficients_to_json(c.coefficients)}}},
            {"inventory", c.inventory ? inventory_to_json(*c.inventory) : Json(nullptr)},
            {"inventories", inventories},
            {"causal", causal},
            {"service", {{"tolerance_ms", c.tolerance_ms}}}};
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string config_fingerprint(const BenchmarkConfig& c) { return sha256_hex(canonical_config(c).dump()); }

sim::ReliabilitySchedule make_schedule(const ScheduleSpec& spec, std::uint64_t seed) {
    return {spec.rate, spec.first_failure_trial, seed};
}

}  // namespace haibench::harness
