#include "haibench/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace haibench::system {

namespace {

double require(const std::optional<double>& v, const char* name, const char* variant) {
    if (!v) throw InvalidInput(std::string("missing coefficient '") + name + "' for " + variant + " variant");
    return *v;
}

}  // namespace

WeightedFailureScore weighted_failure_score(const WeightedFailureInput& input) {
    if (input.items.empty()) throw InvalidInput("no weighted items");
    double total = 0, failed = 0;
    for (const auto& item : input.items) {
        if (!(item.weight > 0.0) || !std::isfinite(item.weight))
            throw InvalidInput("weights must be positive and finite");
        total += item.weight;
        if (item.failed) failed += item.weight;
    }
    WeightedFailureScore s;
    s.raw = failed / total;
    s.paper_normalized = s.raw / total;
    return s;
}

InteractionBalance interaction_balance(const SystemInventory& inv) {
    validate_inventory(inv);
    const auto front = static_cast<std::int64_t>(inv.front_end.size());
    const auto back = static_cast<std::int64_t>(inv.back_end.size());
    InteractionBalance out;
    out.op = std::max<std::int64_t>(0, back - front);
    // Acyclic chains collapse onto their roots, so the distinct count is the
    // number of interactions that duplicate nothing.
    const auto duplicates =
        std::count_if(inv.back_end.begin(), inv.back_end.end(), [](const auto& b) { return b.duplicate_of.has_value(); });
    out.ir = duplicates;
    if (back == 0) {
        out.cib = FieldValue::fail("no back-end interactions");
        out.fe = FieldValue::fail("no back-end interactions");
        return out;
    }
    const auto feedback =
        std::count_if(inv.back_end.begin(), inv.back_end.end(), [](const auto& b) { return b.provides_feedback; });
    out.cib = FieldValue::of(static_cast<double>(front) / static_cast<double>(back));
    out.fe = FieldValue::of(static_cast<double>(feedback) / static_cast<double>(back));
    return out;
}

AttentionMetrics attention_metrics(const SystemInventory& inv) {
    const auto front = static_cast<std::int64_t>(inv.front_end.size());
    AttentionMetrics out;
    out.war = std::max<std::int64_t>(0, kAttentionLow - front);
    out.ni = std::max<std::int64_t>(0, front - kAttentionHigh);
    if (front == 0) {
        out.ase = FieldValue::fail("no front-end components");
        return out;
    }
    const auto chunked =
        std::count_if(inv.front_end.begin(), inv.front_end.end(), [](const auto& c) { return c.chunk_group.has_value(); });
    out.ase = FieldValue::of(static_cast<double>(chunked) / static_cast<double>(front));
    return out;
}

double critical_risk(std::int64_t critical_overlooked) {
    if (critical_overlooked < 0) throw InvalidInput("negative count");
    return std::ldexp(1.0, static_cast<int>(std::max<std::int64_t>(0, critical_overlooked - 9)));
}

double critical_risk(const SystemInventory& inv) {
    const auto n = std::count_if(inv.back_end.begin(), inv.back_end.end(),
                                 [](const auto& b) { return b.critical && b.overlooked; });
    return critical_risk(static_cast<std::int64_t>(n));
}

double cognitive_strain(const TimingInput& in) {
    if (!(in.bt > 0.0)) throw InvalidInput("baseline time must be positive");
    if (!(in.tct > 0.0)) throw InvalidInput("task completion time must be positive");
    if (in.er < 0.0 || in.er > 1.0) throw InvalidInput("error rate must lie in [0, 1]");
    if (in.alpha < 0.0 || in.beta < 0.0) throw InvalidInput("weighting factors must be nonnegative");
    return in.alpha * in.tct / in.bt + in.beta * in.er;
}

ClarityScores component_clarity(const ClarityInput& in) {
    if (!(in.ert > 0.0)) throw InvalidInput("reference response time must be positive");
    if (!(in.art > 0.0)) throw InvalidInput("average response time must be positive");
    if (in.ar < 0.0 || in.ar > 1.0) throw InvalidInput("accuracy rate must lie in [0, 1]");
    if (in.gamma < 0.0 || in.delta < 0.0) throw InvalidInput("weighting factors must be nonnegative");
    ClarityScores out;
    out.ccs1 = in.gamma * in.art / in.ert + in.delta * in.ar;
    if (in.user_scores.empty()) {
        out.ccs2 = FieldValue::fail("no user clarity scores");
        return out;
    }
    for (int s : in.user_scores)
        if (s < in.scale_min || s > in.scale_max)
            throw InvalidInput("clarity score " + std::to_string(s) + " outside the declared scale");
    double sum = std::accumulate(in.user_scores.begin(), in.user_scores.end(), 0.0);
    out.ccs2 = FieldValue::of(sum / static_cast<double>(in.user_scores.size()));
    return out;
}

Millis operational_latency(Millis t_action, Millis t_response) {
    if (t_response < t_action)
        throw InvalidInput("response at " + std::to_string(t_response) + " ms precedes action at " +
                           std::to_string(t_action) + " ms; log ordering defect");
    return t_response - t_action;
}

double human_performance(const CompositeCoefficients& c, HumanVariant variant) {
    if (variant == HumanVariant::lumberjack) {
        return require(c.alpha1, "alpha1", "lumberjack") * require(c.automation_level, "automation_level", "lumberjack") -
               require(c.delta1, "delta1", "lumberjack") * require(c.l_threshold, "l_threshold", "lumberjack");
    }
    return require(c.alpha1, "alpha1", "load") * require(c.automation_level, "automation_level", "load") +
           require(c.beta1, "beta1", "load") * require(c.c_load, "c_load", "load") - require(c.h_error, "h_error", "load");
}

double system_performance(const CompositeCoefficients& c, SystemVariant variant) {
    const char* name = variant == SystemVariant::base ? "base" : "with_bfid";
    if (c.bfid < 0) throw InvalidInput("BFID must be nonnegative");
    double failures = 0;
    for (const auto& [type, n] : c.failure_counts) {
        if (n < 0) throw InvalidInput("negative failure count for '" + type + "'");
        failures += static_cast<double>(n);
    }
    double s = require(c.alpha2, "alpha2", name) * require(c.f_base, "f_base", name) - failures;
    if (variant == SystemVariant::with_bfid) s += static_cast<double>(c.bfid);
    return s;
}

}  // namespace haibench::system
