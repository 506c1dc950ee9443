// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "haibench/benchmark.hpp"
#include "haibench/causal.hpp"
#include "haibench/judgment.hpp"
#include "haibench/normal.hpp"
#include "haibench/sim.hpp"
#include "haibench/system.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace haibench;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %-22s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double expectation(const std::vector<double>& dist) {
    double e = 0;
    for (std::size_t v = 0; v < dist.size(); ++v) e += static_cast<double>(v) * dist[v];
    return e;
}

// ---------------------------------------------------------------------------

void sdt_criterion() {
    const double target = 0.9917;
    const double oracle_d = oracle::normal_quantile(0.69) - oracle::normal_quantile(0.31);
    judgment::SdtResult r;
    const double secs = seconds([&] {
        std::mt19937_64 rng(20240501);
        std::bernoulli_distribution hit(0.69), fa(0.31);
        std::vector<JudgmentRecord> records;
        records.reserve(10000);
        for (int i = 0; i < 10000; ++i) {
            JudgmentRecord j;
            j.ground_truth = i % 2 == 0 ? GroundTruth::signal : GroundTruth::noise;
            const bool yes = j.ground_truth == GroundTruth::signal ? hit(rng) : fa(rng);
            j.response = yes ? Response::yes : Response::no;
            records.push_back(j);
        }
        r = judgment::sdt_evaluate(records);
    });
    const bool ok = std::fabs(r.d_prime - target) <= 0.05 && std::fabs(oracle_d - target) <= 5e-5 && secs < 1.0;
    report(ok, "sdt-dprime", fmt("d'=%.4f oracle=%.4f target=%.4f tol=0.05 time=%.3fs (<1s)", r.d_prime, oracle_d, target, secs));
}

void z_criterion() {
    double worst = 0, at = 0;
    for (int k = 1; k <= 999; ++k) {
        const double p = k / 1000.0;
        const double d = std::fabs(normal_quantile(p) - oracle::normal_quantile(p));
        if (d > worst) worst = d, at = p;
    }
    report(worst <= 1e-9, "z-accuracy", fmt("max |Z-oracle|=%.3e at p=%.3f over 999 grid points (tol 1e-9)", worst, at));
}

void backdoor_criterion() {
    std::mt19937_64 rng(1001);
    double worst = 0;
    int models = 0;
    const double secs = seconds([&] {
        std::uniform_int_distribution<std::size_t> size(2, 5);
        for (; models < 1200; ++models) {
            const std::size_t n = size(rng);
            auto g = oracle::random_dag(rng, n, 0.5);
            auto net = oracle::random_network(rng, g, 3);
            auto model = support::to_model(net);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::size_t x = pick(rng), y = pick(rng);
            while (y == x) y = pick(rng);
            if (x > y) std::swap(x, y);
            std::set<std::size_t> z(g.parents[x].begin(), g.parents[x].end());
            for (std::size_t xv = 0; xv < net.card[x]; ++xv) {
                auto got = causal::backdoor_adjust(
                    model, {support::node_name(x), xv, support::node_name(y), support::names(z), std::nullopt});
                auto want = net.interventional(x, xv, y);
                for (std::size_t k = 0; k < want.size(); ++k) worst = std::max(worst, std::fabs(got[k] - want[k]));
            }
        }
    });
    report(worst <= 1e-12 && secs < 10.0, "backdoor-mutilation",
           fmt("%d models (<=5 nodes, <=3 states) max diff=%.3e (tol 1e-12) time=%.2fs (<10s)", models, worst, secs));
}

void dsep_mediation_criterion() {
    std::mt19937_64 rng(606);
    int dags = 0, agree = 0;
    std::uniform_int_distribution<std::size_t> size(2, 6);
    std::uniform_int_distribution<int> role(0, 3);
    while (dags < 1000) {
        const std::size_t n = size(rng);
        auto g = oracle::random_dag(rng, n, 0.4);
        std::set<std::size_t> a, b, z;
        for (std::size_t v = 0; v < n; ++v) {
            int r = role(rng);
            if (r == 0) a.insert(v);
            else if (r == 1) b.insert(v);
            else if (r == 2) z.insert(v);
        }
        if (a.empty() || b.empty()) continue;
        ++dags;
        const bool got = causal::d_separated(support::to_dag(g), support::names(a), support::names(b), support::names(z));
        if (got == oracle::d_separated(g, a, b, z)) ++agree;
    }

    oracle::Graph med;
    med.n = 4;  // W, X, M, Y
    med.parents = {{}, {0}, {0, 1}, {0, 1, 2}};
    double worst = 0;
    int models = 0;
    for (; models < 200; ++models) {
        auto net = oracle::random_network(rng, med, 3, 0.05, {1});
        auto eff = causal::mediation_effects(support::to_model(net), "V1", "V2", "V3", {"V0"});
        const double ate = expectation(net.interventional(1, 1, 3)) - expectation(net.interventional(1, 0, 3));
        worst = std::max(worst, std::fabs(eff.nde + eff.nie - ate));
    }
    report(agree == dags && worst <= 1e-12, "dsep-mediation",
           fmt("d-sep agrees on %d/%d DAGs (<=6 nodes); |NDE+NIE-ATE| max=%.3e over %d models (tol 1e-12)", agree, dags,
               worst, models));
}

void advisor_criterion() {
    sim::ReliabilitySchedule sched{0.8, std::nullopt, 77};
    const sim::ScenarioParams params;
    int correct = 0;
    for (std::int64_t t = 1; t <= 10000; ++t) {
        auto s = sim::generate_scenario(params, sim::derive_seed(5, static_cast<std::uint64_t>(t)));
        correct += sim::advise(s, sim::AutomationLevel::high_decision, sched, t).correct ? 1 : 0;
    }
    const double rate = correct / 10000.0;

    bool exact = true;
    std::string ks;
    for (std::int64_t k : {1, 2, 7, 20, 333}) {
        for (double r : {1.0, 0.8}) {
            sim::ReliabilitySchedule ff{r, k, 99};
            std::int64_t first = 0;
            for (std::int64_t t = 1; t <= 400 && !first; ++t) {
                auto s = sim::generate_scenario(params, sim::derive_seed(6, static_cast<std::uint64_t>(t)));
                if (!sim::advise(s, sim::AutomationLevel::medium_decision, ff, t).correct) first = t;
            }
            exact = exact && first == k;
        }
        ks += (ks.empty() ? "" : ",") + std::to_string(k);
    }
    report(rate >= 0.79 && rate <= 0.81 && exact, "advisor-calibration",
           fmt("rate 0.8 -> %.4f over 10000 trials (in [0.79, 0.81]); first failure exact for k in {%s}: %s", rate,
               ks.c_str(), exact ? "yes" : "no"));
}

void tradeoff_criterion(const fs::path& tmp) {
    auto config = harness::load_config(fs::path(HAIBENCH_SOURCE_DIR) / "configs" / "default.json");
    config.sessions_per_cell = 100;
    config.levels = {std::nullopt, sim::AutomationLevel::high_decision};
    config.schedules = {{"reliable", 1.0, std::nullopt}, {"r80", 0.8, std::nullopt}, {"r60", 0.6, std::nullopt}};
    std::vector<sim::AgentSpec> agents;
    for (const auto& a : config.agents)
        if (a.kind == sim::AgentKind::compliant || a.kind == sim::AgentKind::manual) agents.push_back(a);
    config.agents = agents;
    config.causal.clear();
    auto summary = harness::run_benchmark(config, tmp / "tradeoff");

    std::map<std::string, Json> cells;
    for (const auto& c : summary.at("cells")) cells[c.at("cell").at("name").get<std::string>()] = c.at("aggregate");
    auto mean = [&](const std::string& cell, const std::string& field) {
        return cells.at(cell).at(field).at("mean").get<double>();
    };
    const double manual_acc_r80 = mean("none__r80__manual", "accuracy");
    const double manual_acc_r60 = mean("none__r60__manual", "accuracy");
    const double comp_acc_r80 = mean("high_decision__r80__compliant", "accuracy");
    const double comp_acc_r60 = mean("high_decision__r60__compliant", "accuracy");
    const double manual_rt = mean("none__reliable__manual", "rt.mean_ms");
    const double comp_rt = mean("high_decision__reliable__compliant", "rt.mean_ms");
    const bool ok = comp_acc_r80 < manual_acc_r80 && comp_acc_r60 < manual_acc_r60 && comp_rt < manual_rt;
    report(ok, "automation-tradeoff",
           fmt("100 matched sessions: accuracy compliant/high r80 %.4f < manual %.4f, r60 %.4f < manual %.4f; "
               "RT compliant/high reliable %.0f ms < manual %.0f ms",
               comp_acc_r80, manual_acc_r80, comp_acc_r60, manual_acc_r60, comp_rt, manual_rt));
}

SystemInventory random_inventory(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(0, 14), group(0, 3);
    std::bernoulli_distribution coin(0.5), rare(0.2);
    SystemInventory inv;
    const int nf = count(rng), nb = count(rng);
    for (int i = 0; i < nf; ++i) {
        FrontEndComponent f{"f" + std::to_string(i), std::nullopt};
        if (coin(rng)) f.chunk_group = "g" + std::to_string(group(rng));
        inv.front_end.push_back(f);
    }
    for (int i = 0; i < nb; ++i) {
        BackEndInteraction b;
        b.id = "b" + std::to_string(i);
        b.provides_feedback = coin(rng);
        b.critical = coin(rng);
        b.overlooked = coin(rng);
        if (i > 0 && rare(rng)) b.duplicate_of = "b" + std::to_string(std::uniform_int_distribution<int>(0, i - 1)(rng));
        inv.back_end.push_back(b);
    }
    return inv;
}

void fuzz_criterion() {
    std::mt19937_64 rng(4242);
    std::int64_t violations = 0, checks = 0;
    auto expect = [&](bool cond) {
        ++checks;
        if (!cond) ++violations;
    };
    auto in01 = [](const FieldValue& v) { return !v.ok() || (*v >= 0.0 && *v <= 1.0); };
    double worst_scale = 0;
    std::uniform_int_distribution<int> cnt(0, 50);
    std::uniform_real_distribution<double> w(0.01, 10.0);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 10000; ++i) {
        auto inv = random_inventory(rng);
        validate_inventory(inv);
        auto ib = system::interaction_balance(inv);
        auto am = system::attention_metrics(inv);
        expect(in01(ib.fe));
        expect(in01(am.ase));
        expect(!ib.cib.ok() || *ib.cib >= 0);
        expect(ib.op >= 0 && ib.ir >= 0 && am.war >= 0 && am.ni >= 0);
        expect(am.war * am.ni == 0);
        expect(system::critical_risk(inv) >= 1.0);

        const double hts = judgment::heuristic_triggering_score(cnt(rng), cnt(rng), cnt(rng), cnt(rng));
        expect(!std::isfinite(hts) || (hts >= -1.0 && hts <= 1.0));

        system::WeightedFailureInput in;
        const int items = 1 + cnt(rng) % 20;
        for (int k = 0; k < items; ++k) in.items.push_back({w(rng), coin(rng)});
        in.flavor = static_cast<system::FailureFlavor>(i % 3);
        const auto base = system::weighted_failure_score(in);
        expect(base.raw >= 0.0 && base.raw <= 1.0);
        for (double k : {0.5, 3.0, 10.0}) {
            auto scaled = in;
            for (auto& it : scaled.items) it.weight *= k;
            worst_scale = std::max(worst_scale, std::fabs(system::weighted_failure_score(scaled).raw - base.raw));
        }
    }
    const bool ok = violations == 0 && worst_scale <= 1e-12;
    report(ok, "metric-bounds-fuzz",
           fmt("10000 inventories/inputs, %lld range checks, %lld violations; scale invariance k in {0.5,3,10} max drift=%.2e",
               static_cast<long long>(checks), static_cast<long long>(violations), worst_scale));
}

void regression_criterion() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst_truth = 0, worst_oracle = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 2 + trial % 5;
        std::vector<double> weights(dim);
        for (auto& v : weights) v = u(rng);
        std::vector<judgment::CueObservation> obs;
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (std::size_t r = 0; r < dim * 4; ++r) {
            judgment::CueObservation o;
            for (std::size_t j = 0; j < dim; ++j) o.cues.push_back(u(rng));
            for (std::size_t j = 0; j < dim; ++j) o.decision += weights[j] * o.cues[j];
            x.push_back(o.cues);
            y.push_back(o.decision);
            obs.push_back(o);
        }
        auto fit = judgment::policy_capture_fit(obs);
        auto ref = oracle::least_squares(x, y);
        for (std::size_t j = 0; j < dim; ++j) {
            worst_truth = std::max(worst_truth, std::fabs(fit.weights[j] - weights[j]));
            worst_oracle = std::max(worst_oracle, std::fabs(fit.weights[j] - ref[j]));
        }
    }
    report(worst_truth <= 1e-8 && worst_oracle <= 1e-8, "regression-recovery",
           fmt("200 noiseless fits: max |w-true|=%.2e, max |w-oracle|=%.2e (tol 1e-8)", worst_truth, worst_oracle));
}

void determinism_criterion(const fs::path& tmp) {
    auto config = harness::load_config(fs::path(HAIBENCH_SOURCE_DIR) / "configs" / "default.json");
    const auto a = tmp / "det-a", b = tmp / "det-b";
    const double ta = seconds([&] { harness::run_benchmark(config, a); });
    const double tb = seconds([&] { harness::run_benchmark(config, b); });
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto other = b / fs::relative(e.path(), a);
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) ++files_b;
    const bool ok = differ == 0 && files == files_b && files > 0 && ta < 60.0 && tb < 60.0;
    report(ok, "determinism",
           fmt("default suite x2: %zu files, %zu differ; run times %.2fs and %.2fs (<60s)", files, differ, ta, tb));
}

}  // namespace

int main() {
    support::TempDir tmp("acceptance");
    auto guarded = [](const char* name, auto&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            report(false, name, std::string("threw: ") + e.what());
        }
    };
    guarded("sdt-dprime", sdt_criterion);
    guarded("z-accuracy", z_criterion);
    guarded("backdoor-mutilation", backdoor_criterion);
    guarded("dsep-mediation", dsep_mediation_criterion);
    guarded("advisor-calibration", advisor_criterion);
    guarded("automation-tradeoff", [&] { tradeoff_criterion(tmp.path); });
    guarded("metric-bounds-fuzz", fuzz_criterion);
    guarded("regression-recovery", regression_criterion);
    guarded("determinism", [&] { determinism_criterion(tmp.path); });
    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
