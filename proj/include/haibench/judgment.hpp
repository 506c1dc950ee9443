#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "haibench/error.hpp"
#include "haibench/events.hpp"

namespace haibench::judgment {

// ---------------------------------------------------------------------------
// Policy capturing: D = sum_j W_j * C_j

struct CueModel {
    std::vector<double> weights;
    std::vector<std::string> labels;
    double residual_norm = 0.0;  // ||D - C W||_2 over the fitted observations
};

struct CueObservation {
    std::vector<double> cues;
    double decision = 0.0;
};

double policy_capture_predict(const CueModel& model, std::span<const double> cues);

// Least-squares cue weights. Needs at least dim+1 observations and a design
// matrix of full column rank.
CueModel policy_capture_fit(std::span<const CueObservation> observations, std::vector<std::string> labels = {});

// ---------------------------------------------------------------------------
// Signal detection

enum class RateCorrection { none, loglinear };

struct SdtCounts {
    std::int64_t hits = 0;
    std::int64_t misses = 0;
    std::int64_t false_alarms = 0;
    std::int64_t correct_rejections = 0;
};

struct SdtRates {
    double hit = 0, fa = 0, cr = 0, miss = 0;
};

struct SdtResult {
    double score = 0;    // (H + CR) / N
    double d_prime = 0;  // Z(hit) - Z(fa)
    double c = 0;        // -(Z(hit) + Z(fa)) / 2
    SdtRates rates;      // uncorrected
    SdtCounts counts;
};

SdtCounts sdt_count(std::span<const JudgmentRecord> records);
SdtResult sdt_from_counts(const SdtCounts& counts, RateCorrection correction = RateCorrection::loglinear);
SdtResult sdt_evaluate(std::span<const JudgmentRecord> records, RateCorrection correction = RateCorrection::loglinear);

// ---------------------------------------------------------------------------
// Naturalistic decision making

struct NdmResult {
    double ndm_score = 0;
    std::vector<double> speeds;  // 1/T per timed decision, s^-1
};

NdmResult ndm_evaluate(std::span<const JudgmentRecord> records);

// ---------------------------------------------------------------------------
// Coherence and lens model. The secondary quantity of each is computed by a
// pluggable scorer over the same records.

using RecordScorer = std::function<double(std::span<const JudgmentRecord>)>;

// Incoherent judgments count as bias flags; a flag is corrected when the next
// judgment is coherent. Returns corrected / flagged.
double default_bias_assessment(std::span<const JudgmentRecord> records);

// Phi correlation between the cue-implied state (response) and the true state.
double default_ecological_validity(std::span<const JudgmentRecord> records);

struct CoherenceResult {
    double coherence_score = 0;
    FieldValue b_assessment;
};

struct LensResult {
    double lens_score = 0;
    FieldValue e_validity;
};

CoherenceResult coherence_evaluate(std::span<const JudgmentRecord> records,
                                   const RecordScorer& bias_hook = default_bias_assessment);
LensResult lens_evaluate(std::span<const JudgmentRecord> records,
                         const RecordScorer& validity_hook = default_ecological_validity);

// ---------------------------------------------------------------------------
// Cognitive continuum

struct CctTest {
    double time = 0;        // T_t, seconds
    double intuitive = 0;   // I_t = 1/T_t
    double analytical = 0;  // A_t = 1/I_t
    double spectrum = 0;    // S_t = A_t - I_t
    double normalized = 0;  // (T_t^2 - 1)/(T_t^2 + 1), in (-1, 1)
};

struct CctResult {
    std::vector<CctTest> tests;
    double cct_score = 0;         // mean S_t
    double normalized_score = 0;  // mean normalized
};

CctResult cct_evaluate(std::span<const double> times);

// ---------------------------------------------------------------------------
// Cognitive alignment

struct AlignmentResult {
    std::vector<std::pair<std::string, double>> hts;  // in first-seen order
    double as = 0;                                    // also reported as NHTI
    std::size_t heuristic_count = 0;
};

double heuristic_triggering_score(double tp, double tn, double fp, double fn);
AlignmentResult heuristic_alignment(std::span<const HeuristicOutcome> outcomes);

// ---------------------------------------------------------------------------
// Classification and reward

struct ClassificationMetrics {
    FieldValue accuracy;
    FieldValue precision;
    FieldValue recall;
    FieldValue f1;
    FieldValue cumulative_reward;
};

ClassificationMetrics classification_metrics(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn,
                                             std::span<const double> rewards = {});

}  // namespace haibench::judgment
