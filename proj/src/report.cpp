#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "haibench/judgment.hpp"
#include "haibench/report.hpp"
#include "haibench/sim.hpp"
#include "haibench/system.hpp"

namespace haibench::harness {

namespace {

const std::map<std::string, std::vector<std::string>>& field_table() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"accuracy", {"accuracy"}},
        {"classification", {"precision", "recall", "f1"}},
        {"reward", {"cumulative_reward"}},
        {"sdt", {"sdt.score", "sdt.d_prime", "sdt.c", "sdt.hit_rate", "sdt.fa_rate"}},
        {"ndm", {"ndm.score", "ndm.mean_speed"}},
        {"coherence", {"coherence.score", "coherence.b_assessment"}},
        {"lens", {"lens.score", "lens.e_validity"}},
        {"cct", {"cct.score", "cct.normalized"}},
        {"alignment", {"alignment.as", "alignment.hts_reliance"}},
        {"policy_capture", {"policy_capture.w_baseline", "policy_capture.w_bad_advice", "policy_capture.residual"}},
        {"rt", {"rt.mean_ms", "rt.median_ms"}},
        {"latency", {"ol.mean_ms", "ol.max_ms"}},
        {"secondary", {"secondary.accuracy", "secondary.mean_rt_ms"}},
        {"questionnaire",
         {"questionnaire.workload", "questionnaire.trust", "questionnaire.self_confidence", "questionnaire.clarity"}},
        {"csi", {"csi"}},
        {"ccs", {"ccs1", "ccs2"}},
        {"weaf", {"weaf.raw", "weaf.paper_normalized"}},
        {"wsaf", {"wsaf.raw", "wsaf.paper_normalized"}},
        {"whaib", {"whaib.raw", "whaib.paper_normalized"}},
        {"interaction", {"cib", "op", "ir", "fe"}},
        {"attention", {"ase", "war", "ni"}},
        {"cri", {"cri"}},
        {"human_performance", {"hp.lumberjack", "hp.load"}},
        {"system_performance", {"sp.base", "sp.with_bfid"}},
    };
    return table;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct TrialFacts {
    TrialId id = 0;
    std::optional<Millis> stimulus;
    std::optional<sim::Scenario> scenario;
    std::optional<std::string> level;       // advice level shown
    std::optional<std::string> recommended;  // first ranked option
    std::optional<Millis> decide;
    std::string choice;
    std::optional<Millis> response;
    std::optional<Millis> probe_onset;
    std::optional<Millis> probe_response;
    std::optional<bool> probe_correct;
};

// Everything the metric groups read from one session. Key-dependent parts are
// computed once; their failure is remembered and rethrown per group.
class Context {
public:
    Context(const Session& s, const GroundTruthKey* key, const BenchmarkConfig& c) : s_(s), key_(key), c_(c) {
        std::map<TrialId, TrialFacts> by_id;
        for (auto id : s.trials) by_id[id].id = id;
        for (const auto& e : s.events) {
            if (!e.trial) continue;
            auto& f = by_id[*e.trial];
            f.id = *e.trial;
            const auto& p = e.payload;
            switch (e.kind) {
                case EventKind::stimulus:
                    if (p.value("type", "") == "probe") {
                        if (!f.probe_onset) f.probe_onset = e.t;
                    } else if (!f.stimulus) {
                        f.stimulus = e.t;
                        if (p.contains("scenario")) f.scenario = sim::scenario_from_json(p.at("scenario"));
                    }
                    break;
                case EventKind::advice:
                    if (!f.level) {
                        f.level = p.value("level", "");
                        const auto& opts = p.value("options", Json::array());
                        if (*f.level != "information" && !opts.empty())
                            f.recommended = option_label(opts[0].at("enemy").get<std::string>(),
                                                         opts[0].at("friendly").get<std::string>());
                    }
                    break;
                case EventKind::operator_action: {
                    const auto action = p.value("action", "");
                    if (action == "decide" && !f.decide) {
                        f.decide = e.t;
                        f.choice = option_label(p.at("enemy").get<std::string>(), p.at("friendly").get<std::string>());
                    } else if (action == "probe_response" && !f.probe_response) {
                        f.probe_response = e.t;
                        f.probe_correct = p.value("correct", false);
                    }
                    break;
                }
                case EventKind::system_response:
                    if (f.decide && !f.response && e.t >= *f.decide) f.response = e.t;
                    break;
                default:
                    break;
            }
        }
        for (auto& [id, f] : by_id) trials.push_back(f);

        if (s.config_ref.is_object() && s.config_ref.contains("level")) {
            level = sim::parse_optional_level(s.config_ref.at("level").get<std::string>());
        } else {
            for (const auto& f : trials)
                if (f.level) {
                    level = sim::parse_level(*f.level);
                    break;
                }
        }
        for (const auto& q : s.questionnaire()) questionnaire[q.name].push_back(q.value);

        if (key) {
            try {
                judgments = derive_judgments(s, *key);
            } catch (const std::exception& e) {
                judgment_error = e.what();
            }
        } else {
            judgment_error = "no ground-truth key for session";
        }
    }

    const std::vector<JudgmentRecord>& records() const {
        if (!judgment_error.empty()) throw InvalidInput(judgment_error);
        if (judgments.empty()) throw Undefined("no decided trials");
        return judgments;
    }

    const GroundTruthKey& key() const {
        if (!key_) throw InvalidInput("no ground-truth key for session");
        return *key_;
    }

    double accuracy() const {
        const auto& r = records();
        auto ok = std::count_if(r.begin(), r.end(), [](const auto& j) { return j.accurate.value_or(false); });
        return static_cast<double>(ok) / static_cast<double>(r.size());
    }

    std::vector<double> decision_ms() const {
        std::vector<double> out;
        for (const auto& f : trials)
            if (f.decide && f.stimulus) out.push_back(static_cast<double>(*f.decide - *f.stimulus));
        if (out.empty()) throw Undefined("no timed decisions");
        return out;
    }

    double mean_decision_s() const { return mean(decision_ms()) / 1000.0; }

    const SystemInventory& inventory() const {
        auto it = c_.level_inventories.find(sim::level_name(level));
        if (it != c_.level_inventories.end()) return it->second;
        if (c_.inventory) return *c_.inventory;
        throw InvalidInput("no system inventory declared");
    }

    double optimal_threat(const TrialFacts& f) const {
        if (!f.scenario || !key_) return 1.0;
        auto it = key_->trials.find(f.id);
        if (it == key_->trials.end()) return 1.0;
        const auto enemy = it->second.optimal.substr(0, it->second.optimal.find(':'));
        for (const auto& e : f.scenario->enemies)
            if (e.id == enemy) return e.threat;
        return 1.0;
    }

    std::int64_t latency_failures() const {
        std::int64_t n = 0;
        for (const auto& f : trials)
            if (f.decide && f.response && static_cast<double>(*f.response - *f.decide) > c_.coefficients.latency_bound_ms) ++n;
        return n;
    }

    std::int64_t advice_failures() const {
        std::int64_t n = 0;
        for (const auto& f : trials) {
            if (!f.level || !f.decide) continue;
            auto it = key().trials.find(f.id);
            if (it != key().trials.end() && it->second.truth == GroundTruth::noise) ++n;
        }
        return n;
    }

    const Session& s_;
    const GroundTruthKey* key_;
    const BenchmarkConfig& c_;
    std::vector<TrialFacts> trials;
    std::optional<sim::AutomationLevel> level;
    std::map<std::string, std::vector<int>> questionnaire;
    std::vector<JudgmentRecord> judgments;
    std::string judgment_error;
};

void put(MetricValues& out, const std::string& field, double v) {
    out[field] = std::isfinite(v) ? FieldValue::of(v) : FieldValue::fail("non-finite value");
}

void put(MetricValues& out, const std::string& field, const FieldValue& v) {
    if (v.ok() && !std::isfinite(*v)) out[field] = FieldValue::fail("non-finite value");
    else out[field] = v;
}

system::WeightedFailureScore weighted(const std::vector<system::WeightedItem>& items, system::FailureFlavor flavor,
                                      const char* what) {
    if (items.empty()) throw Undefined(std::string("no ") + what + " in session");
    return system::weighted_failure_score({items, flavor});
}

void fill(const std::string& metric, const Context& ctx, const BenchmarkConfig& c, MetricValues& out) {
    const auto& k = c.coefficients;
    if (metric == "accuracy") {
        put(out, "accuracy", ctx.accuracy());
    } else if (metric == "classification" || metric == "reward") {
        const auto counts = judgment::sdt_count(ctx.records());
        std::vector<double> rewards;
        for (const auto& r : ctx.records()) rewards.push_back(r.accurate.value_or(false) ? 1.0 : -1.0);
        auto m = judgment::classification_metrics(counts.hits, counts.correct_rejections, counts.false_alarms,
                                                  counts.misses, rewards);
        if (metric == "reward") {
            put(out, "cumulative_reward", m.cumulative_reward);
        } else {
            put(out, "precision", m.precision);
            put(out, "recall", m.recall);
            put(out, "f1", m.f1);
        }
    } else if (metric == "sdt") {
        auto r = judgment::sdt_evaluate(ctx.records());
        put(out, "sdt.score", r.score);
        put(out, "sdt.hit_rate", r.rates.hit);
        put(out, "sdt.fa_rate", r.rates.fa);
        put(out, "sdt.d_prime", r.d_prime);
        put(out, "sdt.c", r.c);
    } else if (metric == "ndm") {
        auto r = judgment::ndm_evaluate(ctx.records());
        put(out, "ndm.score", r.ndm_score);
        put(out, "ndm.mean_speed", r.speeds.empty() ? FieldValue::fail("no timed decisions") : FieldValue::of(mean(r.speeds)));
    } else if (metric == "coherence") {
        auto r = judgment::coherence_evaluate(ctx.records());
        put(out, "coherence.score", r.coherence_score);
        put(out, "coherence.b_assessment", r.b_assessment);
    } else if (metric == "lens") {
        auto r = judgment::lens_evaluate(ctx.records());
        put(out, "lens.score", r.lens_score);
        put(out, "lens.e_validity", r.e_validity);
    } else if (metric == "cct") {
        auto ms = ctx.decision_ms();
        std::vector<double> s;
        for (double v : ms) s.push_back(v / 1000.0);
        auto r = judgment::cct_evaluate(s);
        put(out, "cct.score", r.cct_score);
        put(out, "cct.normalized", r.normalized_score);
    } else if (metric == "alignment") {
        const auto& recs = ctx.records();
        std::vector<HeuristicOutcome> tests;
        for (std::size_t i = 0; i < recs.size(); i += static_cast<std::size_t>(k.alignment_block)) {
            auto end = std::min(recs.size(), i + static_cast<std::size_t>(k.alignment_block));
            auto cnt = judgment::sdt_count(std::span(recs).subspan(i, end - i));
            tests.push_back({"reliance", cnt.hits, cnt.correct_rejections, cnt.false_alarms, cnt.misses});
        }
        auto r = judgment::heuristic_alignment(tests);
        put(out, "alignment.as", r.as);
        put(out, "alignment.hts_reliance", r.hts.front().second);
    } else if (metric == "policy_capture") {
        // Judged quantity: true rank of the chosen pair (1 = optimal).
        // Cues: a constant and whether the recommendation shown was wrong.
        std::vector<judgment::CueObservation> obs;
        for (const auto& f : ctx.trials) {
            if (!f.decide || !f.scenario) continue;
            const auto ranked = sim::rank_pairs(*f.scenario, c.task.weights);
            const auto optimal = sim::pair_label(*f.scenario, ranked.front());
            double rank = 0;
            for (std::size_t i = 0; i < ranked.size(); ++i)
                if (sim::pair_label(*f.scenario, ranked[i]) == f.choice) rank = static_cast<double>(i + 1);
            if (rank == 0) throw InvalidInput("decision '" + f.choice + "' is not a valid pair");
            const double bad_advice = f.recommended && *f.recommended != optimal ? 1.0 : 0.0;
            obs.push_back({{1.0, bad_advice}, rank});
        }
        auto m = judgment::policy_capture_fit(obs, {"baseline", "bad_advice"});
        put(out, "policy_capture.w_baseline", m.weights[0]);
        put(out, "policy_capture.w_bad_advice", m.weights[1]);
        put(out, "policy_capture.residual", m.residual_norm);
    } else if (metric == "rt") {
        auto ms = ctx.decision_ms();
        put(out, "rt.mean_ms", mean(ms));
        put(out, "rt.median_ms", median(ms));
    } else if (metric == "latency") {
        std::vector<double> ol;
        for (const auto& f : ctx.trials)
            if (f.decide && f.response) ol.push_back(static_cast<double>(system::operational_latency(*f.decide, *f.response)));
        if (ol.empty()) throw Undefined("no action/response pairs");
        put(out, "ol.mean_ms", mean(ol));
        put(out, "ol.max_ms", *std::max_element(ol.begin(), ol.end()));
    } else if (metric == "secondary") {
        std::vector<double> rt;
        std::int64_t correct = 0, answered = 0;
        for (const auto& f : ctx.trials) {
            if (!f.probe_response) continue;
            ++answered;
            correct += f.probe_correct.value_or(false) ? 1 : 0;
            if (f.probe_onset && *f.probe_response >= *f.probe_onset)
                rt.push_back(static_cast<double>(*f.probe_response - *f.probe_onset));
        }
        if (answered == 0) throw Undefined("no secondary-task responses");
        put(out, "secondary.accuracy", static_cast<double>(correct) / static_cast<double>(answered));
        put(out, "secondary.mean_rt_ms", rt.empty() ? FieldValue::fail("no timed probe responses") : FieldValue::of(mean(rt)));
    } else if (metric == "questionnaire") {
        for (const char* item : {"workload", "trust", "self_confidence", "clarity"}) {
            auto it = ctx.questionnaire.find(item);
            std::string field = std::string("questionnaire.") + item;
            if (it == ctx.questionnaire.end()) {
                out[field] = FieldValue::fail(std::string("no '") + item + "' rating");
            } else {
                std::vector<double> v(it->second.begin(), it->second.end());
                put(out, field, mean(v));
            }
        }
    } else if (metric == "csi") {
        put(out, "csi", system::cognitive_strain({ctx.mean_decision_s(), k.baseline_time_s, 1.0 - ctx.accuracy(), k.alpha, k.beta}));
    } else if (metric == "ccs") {
        system::ClarityInput in;
        in.art = ctx.mean_decision_s();
        in.ert = k.reference_response_s;
        in.ar = ctx.accuracy();
        in.gamma = k.gamma;
        in.delta = k.delta;
        auto it = ctx.questionnaire.find("clarity");
        if (it != ctx.questionnaire.end()) in.user_scores = it->second;
        auto r = system::component_clarity(in);
        put(out, "ccs1", r.ccs1);
        put(out, "ccs2", r.ccs2);
    } else if (metric == "weaf" || metric == "wsaf" || metric == "whaib") {
        std::vector<system::WeightedItem> items;
        system::WeightedFailureScore r;
        if (metric == "weaf") {
            for (const auto& f : ctx.trials) {
                if (!f.level || !f.decide) continue;
                auto it = ctx.key().trials.find(f.id);
                if (it == ctx.key().trials.end()) continue;
                items.push_back({ctx.optimal_threat(f), it->second.truth == GroundTruth::noise});
            }
            r = weighted(items, system::FailureFlavor::weaf, "automation advice");
        } else if (metric == "wsaf") {
            for (const auto& f : ctx.trials)
                if (f.decide && f.response)
                    items.push_back({1.0, static_cast<double>(*f.response - *f.decide) > k.latency_bound_ms});
            r = weighted(items, system::FailureFlavor::wsaf, "system responses");
        } else {
            const auto& recs = ctx.records();
            std::size_t i = 0;
            for (const auto& f : ctx.trials) {
                if (!f.decide || i >= recs.size()) continue;
                items.push_back({ctx.optimal_threat(f), !recs[i++].accurate.value_or(false)});
            }
            r = weighted(items, system::FailureFlavor::whaib, "decisions");
        }
        put(out, metric + ".raw", r.raw);
        put(out, metric + ".paper_normalized", r.paper_normalized);
    } else if (metric == "interaction") {
        auto r = system::interaction_balance(ctx.inventory());
        put(out, "cib", r.cib);
        put(out, "op", static_cast<double>(r.op));
        put(out, "ir", static_cast<double>(r.ir));
        put(out, "fe", r.fe);
    } else if (metric == "attention") {
        auto r = system::attention_metrics(ctx.inventory());
        put(out, "ase", r.ase);
        put(out, "war", static_cast<double>(r.war));
        put(out, "ni", static_cast<double>(r.ni));
    } else if (metric == "cri") {
        put(out, "cri", system::critical_risk(ctx.inventory()));
    } else if (metric == "human_performance") {
        system::CompositeCoefficients cc;
        cc.alpha1 = k.alpha1;
        cc.beta1 = k.beta1;
        cc.delta1 = k.delta1;
        cc.l_threshold = k.l_threshold;
        cc.automation_level = sim::automation_level_value(ctx.level);
        put(out, "hp.lumberjack", system::human_performance(cc, system::HumanVariant::lumberjack));
        try {
            const double acc = ctx.accuracy();
            cc.h_error = 1.0 - acc;
            cc.c_load = system::cognitive_strain({ctx.mean_decision_s(), k.baseline_time_s, 1.0 - acc, k.alpha, k.beta});
            put(out, "hp.load", system::human_performance(cc, system::HumanVariant::load));
        } catch (const std::exception& e) {
            out["hp.load"] = FieldValue::fail(e.what());
        }
    } else if (metric == "system_performance") {
        system::CompositeCoefficients cc;
        cc.alpha2 = k.alpha2;
        std::int64_t decided = 0;
        for (const auto& f : ctx.trials) decided += f.decide ? 1 : 0;
        cc.f_base = k.f_base.value_or(static_cast<double>(decided));
        cc.failure_counts["advice"] = ctx.advice_failures();
        cc.failure_counts["latency"] = ctx.latency_failures();
        put(out, "sp.base", system::system_performance(cc, system::SystemVariant::base));
        try {
            const auto& inv = ctx.inventory();
            cc.bfid = std::count_if(inv.back_end.begin(), inv.back_end.end(), [](const auto& b) { return b.provides_feedback; });
            put(out, "sp.with_bfid", system::system_performance(cc, system::SystemVariant::with_bfid));
        } catch (const std::exception& e) {
            out["sp.with_bfid"] = FieldValue::fail(e.what());
        }
    } else {
        throw InvalidInput("unknown metric '" + metric + "'");
    }
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string csv_value(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return "";
    return it->is_string() ? csv_escape(it->get<std::string>()) : it->dump();
}

}  // namespace

std::string tool_version() { return HAIBENCH_VERSION; }

const std::vector<std::string>& metric_fields(const std::string& metric) {
    auto it = field_table().find(metric);
    if (it == field_table().end()) throw InvalidInput("unknown metric '" + metric + "'");
    return it->second;
}

std::vector<std::string> selected_fields(const std::vector<std::string>& metrics) {
    std::vector<std::string> out;
    for (const auto& m : metrics)
        for (const auto& f : metric_fields(m)) out.push_back(f);
    return out;
}

MetricValues compute_metrics(const Session& session, const GroundTruthKey* key, const BenchmarkConfig& config) {
    MetricValues out;
    std::optional<Context> ctx;
    std::string ctx_error;
    try {
        ctx.emplace(session, key, config);
    } catch (const std::exception& e) {
        ctx_error = std::string("unreadable session: ") + e.what();
    }
    for (const auto& metric : config.metrics) {
        try {
            if (!ctx) throw InvalidInput(ctx_error);
            fill(metric, *ctx, config, out);
        } catch (const std::exception& e) {
            for (const auto& f : metric_fields(metric))
                if (!out.count(f)) out[f] = FieldValue::fail(e.what());
        }
        for (const auto& f : metric_fields(metric))
            if (!out.count(f)) out[f] = FieldValue::fail("not computed");
    }
    return out;
}

Json field_to_json(const FieldValue& v) {
    if (v.ok()) return *v;
    return {{"error", v.error}};
}

FieldValue field_from_json(const Json& j) {
    if (j.is_number()) return FieldValue::of(j.get<double>());
    if (j.is_object() && j.contains("error")) return FieldValue::fail(j.at("error").get<std::string>());
    return FieldValue::fail("missing");
}

Json aggregate(const std::vector<MetricValues>& sessions, const std::vector<std::string>& fields) {
    Json out = Json::object();
    for (const auto& f : fields) {
        std::vector<double> vals;
        std::int64_t errors = 0;
        std::string first_error;
        for (const auto& s : sessions) {
            auto it = s.find(f);
            if (it != s.end() && it->second.ok()) {
                vals.push_back(*it->second);
            } else {
                ++errors;
                if (first_error.empty()) first_error = it == s.end() ? "missing" : it->second.error;
            }
        }
        if (vals.empty()) {
            out[f] = {{"error", first_error.empty() ? "no sessions" : first_error}, {"errors", errors}};
        } else {
            out[f] = {{"mean", mean(vals)}, {"median", median(vals)}, {"n", vals.size()}, {"errors", errors}};
        }
    }
    return out;
}

Json make_report(const BenchmarkConfig& config, const Json& cell, const std::vector<SessionEntry>& sessions) {
    const auto fields = selected_fields(config.metrics);
    Json list = Json::array();
    std::vector<MetricValues> values;
    for (const auto& s : sessions) {
        Json v = Json::object();
        for (const auto& f : fields) {
            auto it = s.values.find(f);
            v[f] = field_to_json(it == s.values.end() ? FieldValue::fail("missing") : it->second);
        }
        list.push_back({{"session_id", s.session_id}, {"log", s.log}, {"values", v}});
        values.push_back(s.values);
    }
    return {{"tool", "haibench"},
            {"version", tool_version()},
            {"fingerprint", config_fingerprint(config)},
            {"cell", cell},
            {"metrics", config.metrics},
            {"sessions", list},
            {"aggregate", aggregate(values, fields)}};
}

Json compare_designs(const Json& a, const Json& b) {
    for (const auto* r : {&a, &b})
        if (!r->is_object() || !r->contains("metrics") || !r->contains("aggregate"))
            throw InvalidInput("not a cell report (needs metrics and aggregate)");
    const auto ma = a.at("metrics").get<std::set<std::string>>();
    const auto mb = b.at("metrics").get<std::set<std::string>>();
    if (ma != mb) {
        std::vector<std::string> only_a, only_b;
        std::set_difference(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(only_a));
        std::set_difference(mb.begin(), mb.end(), ma.begin(), ma.end(), std::back_inserter(only_b));
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
            return "[" + s + "]";
        };
        throw InvalidInput("metric sets differ: only in a " + join(only_a) + ", only in b " + join(only_b));
    }
    std::vector<std::string> metrics;
    for (const auto& m : metric_catalogue())
        if (ma.count(m)) metrics.push_back(m);
    Json rows = Json::array();
    Json identical = Json::array();
    std::int64_t up = 0, down = 0, same = 0, incomparable = 0;
    for (const auto& field : selected_fields(metrics)) {
        const Json& fa = a.at("aggregate").value(field, Json());
        const Json& fb = b.at("aggregate").value(field, Json());
        Json row = {{"field", field}};
        if (fa.is_object() && fb.is_object() && fa.contains("mean") && fb.contains("mean")) {
            const double va = fa.at("mean").get<double>(), vb = fb.at("mean").get<double>();
            const double d = vb - va;
            row["a"] = va;
            row["b"] = vb;
            row["delta"] = d;
            row["sign"] = d > 0 ? "+" : d < 0 ? "-" : "0";
            row["identical"] = va == vb;
            if (va == vb) {
                identical.push_back(field);
                ++same;
            } else if (d > 0) {
                ++up;
            } else {
                ++down;
            }
        } else {
            row["error"] = "not comparable: value missing in " + std::string(fa.contains("mean") ? "b" : "a");
            ++incomparable;
        }
        rows.push_back(row);
    }
    return {{"a", a.value("cell", Json())},
            {"b", b.value("cell", Json())},
            {"rows", rows},
            {"identical", identical},
            {"summary", {{"increased", up}, {"decreased", down}, {"unchanged", same}, {"incomparable", incomparable}}}};
}

std::string summary_csv(const Json& summary) {
    std::ostringstream out;
    out << "level,schedule,agent,field,mean,median,n,errors,error\n";
    for (const auto& cell : summary.at("cells")) {
        const auto& c = cell.at("cell");
        for (const auto& [field, agg] : cell.at("aggregate").items()) {
            out << csv_value(c, "level") << ',' << csv_value(c, "schedule") << ',' << csv_value(c, "agent") << ','
                << csv_escape(field) << ',' << csv_value(agg, "mean") << ',' << csv_value(agg, "median") << ','
                << csv_value(agg, "n") << ',' << csv_value(agg, "errors") << ',' << csv_value(agg, "error") << '\n';
        }
    }
    return out.str();
}

}  // namespace haibench::harness
