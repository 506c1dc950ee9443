#include "haibench/judgment.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "haibench/normal.hpp"

namespace haibench::judgment {

namespace {

template <class Pred>
std::size_t count_if_flag(std::span<const JudgmentRecord> records, Pred pred, const char* flag_name) {
    std::size_t n = 0;
    for (const auto& r : records) {
        auto flag = pred(r);
        if (!flag) throw InvalidInput(std::string("record without '") + flag_name + "' flag");
        n += *flag ? 1 : 0;
    }
    return n;
}

// Replaces a rate of exactly 0 or 1 by 1/(2n) or 1 - 1/(2n).
double corrected_rate(std::int64_t count, std::int64_t n, RateCorrection correction, const char* name) {
    double rate = static_cast<double>(count) / static_cast<double>(n);
    if (count > 0 && count < n) return rate;
    if (correction == RateCorrection::none)
        throw Undefined(std::string(name) + " rate is " + (count == 0 ? "0" : "1") + "; z-score is infinite");
    double half = 1.0 / (2.0 * static_cast<double>(n));
    return count == 0 ? half : 1.0 - half;
}

}  // namespace

double policy_capture_predict(const CueModel& model, std::span<const double> cues) {
    if (cues.size() != model.weights.size())
        throw InvalidInput("cue dimension " + std::to_string(cues.size()) + " does not match model dimension " +
                           std::to_string(model.weights.size()));
    double d = 0.0;
    for (std::size_t j = 0; j < cues.size(); ++j) d += model.weights[j] * cues[j];
    return d;
}

CueModel policy_capture_fit(std::span<const CueObservation> observations, std::vector<std::string> labels) {
    if (observations.empty()) throw InvalidInput("no observations");
    const auto dim = observations.front().cues.size();
    if (dim == 0) throw InvalidInput("observations carry no cues");
    if (observations.size() < dim + 1)
        throw InvalidInput("need at least " + std::to_string(dim + 1) + " observations for " + std::to_string(dim) +
                           " cues, got " + std::to_string(observations.size()));
    if (!labels.empty() && labels.size() != dim) throw InvalidInput("cue label count does not match dimension");

    const auto n = static_cast<Eigen::Index>(observations.size());
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(dim));
    Eigen::VectorXd decisions(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& obs = observations[static_cast<std::size_t>(i)];
        if (obs.cues.size() != dim) throw InvalidInput("observation " + std::to_string(i) + " has wrong cue dimension");
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(obs.cues[j])) throw InvalidInput("non-finite cue value");
            design(i, static_cast<Eigen::Index>(j)) = obs.cues[j];
        }
        decisions(i) = obs.decision;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(dim))
        throw Undefined("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(dim) + "); normal equations are singular");
    Eigen::VectorXd w = qr.solve(decisions);

    CueModel model;
    model.weights.assign(w.data(), w.data() + w.size());
    if (labels.empty())
        for (std::size_t j = 0; j < dim; ++j) labels.push_back("cue" + std::to_string(j));
    model.labels = std::move(labels);
    model.residual_norm = (decisions - design * w).norm();
    return model;
}

// ---------------------------------------------------------------------------

SdtCounts sdt_count(std::span<const JudgmentRecord> records) {
    SdtCounts c;
    for (const auto& r : records) {
        bool yes = r.response == Response::yes;
        if (r.ground_truth == GroundTruth::signal) (yes ? c.hits : c.misses)++;
        else (yes ? c.false_alarms : c.correct_rejections)++;
    }
    return c;
}

SdtResult sdt_from_counts(const SdtCounts& counts, RateCorrection correction) {
    const auto signal = counts.hits + counts.misses;
    const auto noise = counts.false_alarms + counts.correct_rejections;
    if (signal == 0) throw Undefined("no signal trials");
    if (noise == 0) throw Undefined("no noise trials");

    SdtResult r;
    r.counts = counts;
    r.score = static_cast<double>(counts.hits + counts.correct_rejections) / static_cast<double>(signal + noise);
    r.rates.hit = static_cast<double>(counts.hits) / static_cast<double>(signal);
    r.rates.miss = static_cast<double>(counts.misses) / static_cast<double>(signal);
    r.rates.fa = static_cast<double>(counts.false_alarms) / static_cast<double>(noise);
    r.rates.cr = static_cast<double>(counts.correct_rejections) / static_cast<double>(noise);

    double zh = normal_quantile(corrected_rate(counts.hits, signal, correction, "hit"));
    double zf = normal_quantile(corrected_rate(counts.false_alarms, noise, correction, "false-alarm"));
    r.d_prime = zh - zf;
    r.c = -0.5 * (zh + zf);
    return r;
}

SdtResult sdt_evaluate(std::span<const JudgmentRecord> records, RateCorrection correction) {
    return sdt_from_counts(sdt_count(records), correction);
}

// ---------------------------------------------------------------------------

NdmResult ndm_evaluate(std::span<const JudgmentRecord> records) {
    if (records.empty()) throw InvalidInput("no decisions");
    NdmResult out;
    auto efficient = count_if_flag(records, [](const JudgmentRecord& r) { return r.efficient; }, "efficient");
    out.ndm_score = static_cast<double>(efficient) / static_cast<double>(records.size());
    for (const auto& r : records) {
        if (!r.decision_time) continue;
        if (!(*r.decision_time > 0.0) || !std::isfinite(*r.decision_time))
            throw InvalidInput("decision time must be positive and finite");
        out.speeds.push_back(1.0 / *r.decision_time);
    }
    return out;
}

double default_bias_assessment(std::span<const JudgmentRecord> records) {
    std::size_t flagged = 0;
    std::size_t corrected = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].coherent) throw InvalidInput("record without 'coherent' flag");
        if (*records[i].coherent) continue;
        ++flagged;
        if (i + 1 < records.size() && records[i + 1].coherent.value_or(false)) ++corrected;
    }
    if (flagged == 0) throw Undefined("no bias flags to assess");
    return static_cast<double>(corrected) / static_cast<double>(flagged);
}

double default_ecological_validity(std::span<const JudgmentRecord> records) {
    // 2x2 table: a = yes&signal, b = yes&noise, c = no&signal, d = no&noise
    double a = 0, b = 0, c = 0, d = 0;
    for (const auto& r : records) {
        bool yes = r.response == Response::yes;
        bool sig = r.ground_truth == GroundTruth::signal;
        if (yes && sig) ++a;
        else if (yes) ++b;
        else if (sig) ++c;
        else ++d;
    }
    double denom = (a + b) * (c + d) * (a + c) * (b + d);
    if (denom == 0.0) throw Undefined("cue-implied or true state is constant; correlation undefined");
    return (a * d - b * c) / std::sqrt(denom);
}

CoherenceResult coherence_evaluate(std::span<const JudgmentRecord> records, const RecordScorer& bias_hook) {
    if (records.empty()) throw InvalidInput("no judgments");
    CoherenceResult out;
    auto coherent = count_if_flag(records, [](const JudgmentRecord& r) { return r.coherent; }, "coherent");
    out.coherence_score = static_cast<double>(coherent) / static_cast<double>(records.size());
    try {
        out.b_assessment = FieldValue::of(bias_hook(records));
    } catch (const Error& e) {
        out.b_assessment = FieldValue::fail(e.what());
    }
    return out;
}

LensResult lens_evaluate(std::span<const JudgmentRecord> records, const RecordScorer& validity_hook) {
    if (records.empty()) throw InvalidInput("no judgments");
    LensResult out;
    auto accurate = count_if_flag(records, [](const JudgmentRecord& r) { return r.accurate; }, "accurate");
    out.lens_score = static_cast<double>(accurate) / static_cast<double>(records.size());
    try {
        out.e_validity = FieldValue::of(validity_hook(records));
    } catch (const Error& e) {
        out.e_validity = FieldValue::fail(e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------

CctResult cct_evaluate(std::span<const double> times) {
    if (times.empty()) throw InvalidInput("no tests");
    CctResult out;
    double sum_s = 0, sum_n = 0;
    for (double t : times) {
        if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("test time must be positive and finite");
        CctTest test;
        test.time = t;
        test.intuitive = 1.0 / t;
        test.analytical = 1.0 / test.intuitive;
        test.spectrum = test.analytical - test.intuitive;
        test.normalized = (t * t - 1.0) / (t * t + 1.0);
        sum_s += test.spectrum;
        sum_n += test.normalized;
        out.tests.push_back(test);
    }
    out.cct_score = sum_s / static_cast<double>(times.size());
    out.normalized_score = sum_n / static_cast<double>(times.size());
    return out;
}

// ---------------------------------------------------------------------------

double heuristic_triggering_score(double tp, double tn, double fp, double fn) {
    double total = tp + tn + fp + fn;
    if (!(total > 0.0)) throw Undefined("heuristic has all-zero outcome counts");
    return (tp + tn - fp - fn) / total;
}

AlignmentResult heuristic_alignment(std::span<const HeuristicOutcome> outcomes) {
    if (outcomes.empty()) throw InvalidInput("no heuristic outcomes");
    struct Sums {
        double tp = 0, tn = 0, fp = 0, fn = 0;
        std::size_t tests = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, Sums> sums;
    for (const auto& o : outcomes) {
        if (o.tp < 0 || o.tn < 0 || o.fp < 0 || o.fn < 0) throw InvalidInput("negative outcome count");
        auto [it, inserted] = sums.try_emplace(o.heuristic_id);
        if (inserted) order.push_back(o.heuristic_id);
        auto& s = it->second;
        s.tp += static_cast<double>(o.tp);
        s.tn += static_cast<double>(o.tn);
        s.fp += static_cast<double>(o.fp);
        s.fn += static_cast<double>(o.fn);
        ++s.tests;
    }

    AlignmentResult out;
    double total = 0;
    for (const auto& id : order) {
        const auto& s = sums[id];
        const double n = static_cast<double>(s.tests);
        double hts;
        try {
            hts = heuristic_triggering_score(s.tp / n, s.tn / n, s.fp / n, s.fn / n);
        } catch (const Undefined&) {
            throw Undefined("heuristic '" + id + "' has all-zero outcome counts");
        }
        out.hts.emplace_back(id, hts);
        total += hts;
    }
    out.heuristic_count = order.size();
    out.as = total / static_cast<double>(order.size());
    return out;
}

// ---------------------------------------------------------------------------

ClassificationMetrics classification_metrics(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn,
                                             std::span<const double> rewards) {
    if (tp < 0 || tn < 0 || fp < 0 || fn < 0) throw InvalidInput("negative confusion count");
    const double TP = static_cast<double>(tp), TN = static_cast<double>(tn);
    const double FP = static_cast<double>(fp), FN = static_cast<double>(fn);
    ClassificationMetrics m;

    double total = TP + TN + FP + FN;
    m.accuracy = total > 0 ? FieldValue::of((TP + TN) / total) : FieldValue::fail("no predictions");
    m.precision = TP + FP > 0 ? FieldValue::of(TP / (TP + FP)) : FieldValue::fail("TP + FP = 0");
    m.recall = TP + FN > 0 ? FieldValue::of(TP / (TP + FN)) : FieldValue::fail("TP + FN = 0");
    if (m.precision.ok() && m.recall.ok()) {
        double p = *m.precision, r = *m.recall;
        m.f1 = p + r > 0 ? FieldValue::of(2.0 * p * r / (p + r)) : FieldValue::fail("precision + recall = 0");
    } else {
        m.f1 = FieldValue::fail("precision or recall undefined");
    }
    m.cumulative_reward = rewards.empty() ? FieldValue::fail("no rewards")
                                          : FieldValue::of(std::accumulate(rewards.begin(), rewards.end(), 0.0));
    return m;
}

}  // namespace haibench::judgment
