#include <doctest.h>

#include <random>

#include "haibench/causal.hpp"
#include "haibench/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace haibench;
using namespace haibench::causal;

namespace {

Dag confounder() { return Dag({"Z", "X", "Y"}, {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}}); }
Dag mediator() { return Dag({"X", "M", "Y"}, {{"X", "M"}, {"M", "Y"}, {"X", "Y"}}); }

// Removes every edge out of `x` in an oracle graph.
oracle::Graph cut_outgoing(oracle::Graph g, std::size_t x) {
    for (auto& ps : g.parents) ps.erase(std::remove(ps.begin(), ps.end(), x), ps.end());
    return g;
}

bool oracle_admissible(const oracle::Graph& g, std::size_t x, std::size_t y, const std::set<std::size_t>& z) {
    auto desc = g.descendants_of(x);
    for (auto v : z)
        if (desc[v]) return false;
    return oracle::d_separated(cut_outgoing(g, x), {x}, {y}, z);
}

double expectation(const std::vector<double>& dist) {
    double e = 0;
    for (std::size_t v = 0; v < dist.size(); ++v) e += static_cast<double>(v) * dist[v];
    return e;
}

}  // namespace

TEST_CASE("dag validation") {
    auto ok = validate_dag(Dag({"X", "Y"}, {{"X", "Y"}}));
    CHECK(ok.ok);
    auto cyc = validate_dag(Dag({"X", "Y"}, {{"X", "Y"}, {"Y", "X"}}));
    CHECK_FALSE(cyc.ok);
    CHECK(cyc.cycle == std::vector<std::string>{"X", "Y"});
    auto fig = validate_dag(confounder());
    CHECK(fig.order == std::vector<std::string>{"Z", "X", "Y"});
    CHECK_THROWS_AS(topological_order(Dag({"X", "Y"}, {{"X", "Y"}, {"Y", "X"}})), InvalidInput);
    CHECK_THROWS_AS(Dag({"X", "X"}, {}), InvalidInput);
    CHECK_THROWS_AS(Dag({"X"}, {{"X", "Q"}}), InvalidInput);
}

TEST_CASE("d-separation rules") {
    Dag chain({"X", "M", "Y"}, {{"X", "M"}, {"M", "Y"}});
    CHECK(d_separated(chain, {"X"}, {"Y"}, {"M"}));
    CHECK_FALSE(d_separated(chain, {"X"}, {"Y"}, {}));
    Dag coll({"X", "C", "Y", "D"}, {{"X", "C"}, {"Y", "C"}, {"C", "D"}});
    CHECK(d_separated(coll, {"X"}, {"Y"}, {}));
    CHECK_FALSE(d_separated(coll, {"X"}, {"Y"}, {"C"}));
    CHECK_FALSE(d_separated(coll, {"X"}, {"Y"}, {"D"}));
    CHECK_THROWS_AS(d_separated(coll, {"X"}, {"X"}, {}), InvalidInput);
}

TEST_CASE("d-separation agrees with path enumeration") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + trial % 5;
        auto g = oracle::random_dag(rng, n, 0.45);
        auto dag = support::to_dag(g);
        std::uniform_int_distribution<int> role(0, 3);
        std::set<std::size_t> a, b, z;
        for (std::size_t v = 0; v < n; ++v) {
            int r = role(rng);
            if (r == 0) a.insert(v);
            else if (r == 1) b.insert(v);
            else if (r == 2) z.insert(v);
        }
        if (a.empty() || b.empty()) continue;
        CHECK(d_separated(dag, support::names(a), support::names(b), support::names(z)) == oracle::d_separated(g, a, b, z));
    }
}

TEST_CASE("back-door admissibility") {
    CHECK(backdoor_admissible(confounder(), "X", "Y", {"Z"}));
    CHECK_FALSE(backdoor_admissible(confounder(), "X", "Y", {}));
    CHECK_FALSE(backdoor_admissible(mediator(), "X", "Y", {"M"}));
    CHECK(backdoor_admissible(mediator(), "X", "Y", {}));
    CHECK_THROWS_AS(backdoor_admissible(confounder(), "X", "Y", {"X"}), InvalidInput);
}

TEST_CASE("back-door adjustment by hand") {
    Dag d = confounder();
    std::vector<Cpt> cpts(3);
    cpts[0].rows = {{0.5, 0.5}};
    cpts[1].rows = {{0.7, 0.3}, {0.1, 0.9}};
    // Y rows over (Z, X): only the X=1 rows matter for do(X=1).
    cpts[2].rows = {{0.9, 0.1}, {0.8, 0.2}, {0.6, 0.4}, {0.2, 0.8}};
    DiscreteModel m(d, {2, 2, 2}, cpts);
    auto p = backdoor_adjust(m, {"X", 1, "Y", {"Z"}, std::nullopt});
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(backdoor_adjust(m, {"X", 1, "Y", {}, std::nullopt}), InvalidInput);

    // No back-door path: empty adjustment equals conditioning.
    Dag simple({"X", "Y"}, {{"X", "Y"}});
    DiscreteModel s(simple, {2, 2}, {Cpt{{{0.4, 0.6}}}, Cpt{{{0.7, 0.3}, {0.25, 0.75}}}});
    CHECK(backdoor_adjust(s, {"X", 1, "Y", {}, std::nullopt})[1] == doctest::Approx(0.75));
}

TEST_CASE("back-door adjustment agrees with the mutilated model") {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto g = oracle::random_dag(rng, 4, 0.5);
        auto net = oracle::random_network(rng, g, 3);
        auto model = support::to_model(net);
        const std::size_t x = trial % 3, y = 3;
        for (unsigned mask = 0; mask < 16; ++mask) {
            std::set<std::size_t> z;
            for (std::size_t v = 0; v < 4; ++v)
                if ((mask >> v & 1) && v != x && v != y) z.insert(v);
            if (z.size() != static_cast<std::size_t>(__builtin_popcount(mask))) continue;
            const bool adm = backdoor_admissible(model.dag(), support::node_name(x), support::node_name(y), support::names(z));
            CHECK(adm == oracle_admissible(g, x, y, z));
            if (!adm) continue;
            for (std::size_t xv = 0; xv < net.card[x]; ++xv) {
                auto got = backdoor_adjust(model, {support::node_name(x), xv, support::node_name(y), support::names(z), std::nullopt});
                auto want = net.interventional(x, xv, y);
                for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::fabs(got[k] - want[k]) < 1e-12);
            }
            ++checked;
        }
    }
    CHECK(checked > 200);
}

TEST_CASE("ate") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = oracle::random_dag(rng, 4, 0.5);
        auto net = oracle::random_network(rng, g, 3, 0.05, {1});
        auto model = support::to_model(net);
        std::set<std::size_t> pa(g.parents[1].begin(), g.parents[1].end());
        if (pa.count(3)) continue;
        const double got = ate(model, "V1", "V3", support::names(pa));
        const double want = expectation(net.interventional(1, 1, 3)) - expectation(net.interventional(1, 0, 3));
        CHECK(std::fabs(got - want) < 1e-12);
    }
    // Symmetric in X and no path to Y.
    Dag d({"X", "Y"}, {{"X", "Y"}});
    DiscreteModel sym(d, {2, 2}, {Cpt{{{0.5, 0.5}}}, Cpt{{{0.3, 0.7}, {0.3, 0.7}}}});
    CHECK(std::fabs(ate(sym, "X", "Y", {})) < 1e-15);
    Dag apart({"X", "Y"}, {});
    DiscreteModel none(apart, {2, 2}, {Cpt{{{0.2, 0.8}}}, Cpt{{{0.6, 0.4}}}});
    CHECK(ate(none, "X", "Y", {}) == 0.0);
}

TEST_CASE("mediation effects") {
    std::mt19937_64 rng(909);
    oracle::Graph g;
    g.n = 4;  // W, X, M, Y
    g.parents = {{}, {0}, {0, 1}, {0, 1, 2}};
    for (int trial = 0; trial < 200; ++trial) {
        auto net = oracle::random_network(rng, g, 3, 0.05, {1});
        auto model = support::to_model(net);
        auto eff = mediation_effects(model, "V1", "V2", "V3", {"V0"});
        CHECK(std::fabs(eff.nde + eff.nie - eff.te) < 1e-12);

        // Direct formula from the CPTs.
        double nde = 0;
        for (std::size_t w = 0; w < net.card[0]; ++w)
            for (std::size_t m = 0; m < net.card[2]; ++m) {
                double pm0 = net.cpt[2][w * 2 + 0][m];
                double e1 = 0, e0 = 0;
                for (std::size_t y = 0; y < net.card[3]; ++y) {
                    e1 += y * net.cpt[3][(w * 2 + 1) * net.card[2] + m][y];
                    e0 += y * net.cpt[3][(w * 2 + 0) * net.card[2] + m][y];
                }
                nde += net.cpt[0][0][w] * (e1 - e0) * pm0;
            }
        CHECK(std::fabs(eff.nde - nde) < 1e-12);
    }
}

TEST_CASE("mediation edge cases") {
    // No X -> Y edge: purely indirect.
    Dag d({"X", "M", "Y"}, {{"X", "M"}, {"M", "Y"}});
    DiscreteModel m(d, {2, 2, 2}, {Cpt{{{0.5, 0.5}}}, Cpt{{{0.8, 0.2}, {0.3, 0.7}}}, Cpt{{{0.9, 0.1}, {0.4, 0.6}}}});
    auto e = mediation_effects(m, "X", "M", "Y");
    CHECK(std::fabs(e.nde) < 1e-15);
    CHECK(e.nie == doctest::Approx(e.te));
    // M independent of X: no indirect part.
    Dag d2({"X", "M", "Y"}, {{"M", "Y"}, {"X", "Y"}});
    DiscreteModel m2(d2, {2, 2, 2},
                     {Cpt{{{0.5, 0.5}}}, Cpt{{{0.6, 0.4}}}, Cpt{{{0.9, 0.1}, {0.5, 0.5}, {0.4, 0.6}, {0.2, 0.8}}}});
    auto e2 = mediation_effects(m2, "X", "M", "Y");
    CHECK(std::fabs(e2.nie) < 1e-15);
    // Confounded mediator without adjustment.
    Dag conf({"U", "X", "M", "Y"}, {{"U", "M"}, {"U", "Y"}, {"X", "M"}, {"M", "Y"}});
    DiscreteModel mc(conf, {2, 2, 2, 2},
                     {Cpt{{{0.5, 0.5}}}, Cpt{{{0.5, 0.5}}}, Cpt{{{0.5, 0.5}, {0.4, 0.6}, {0.3, 0.7}, {0.2, 0.8}}},
                      Cpt{{{0.5, 0.5}, {0.4, 0.6}, {0.3, 0.7}, {0.2, 0.8}}}});
    CHECK_THROWS_AS(mediation_effects(mc, "X", "M", "Y"), InvalidInput);
    CHECK_NOTHROW(mediation_effects(mc, "X", "M", "Y", {"U"}));
}

TEST_CASE("rule 1 applicability") {
    // In the confounder graph, removing edges into X leaves Z -> Y, so Y and Z
    // stay dependent given X.
    CHECK_FALSE(rule1_applicable(confounder(), {"X"}, {"Y"}, {"Z"}, {}));
    CHECK(rule1_applicable(confounder(), {"X"}, {"Y"}, {"Z"}, {}) ==
          d_separated(confounder().without_incoming({"X"}), {"Y"}, {"Z"}, {"X"}));
    Dag direct({"X", "Z", "Y"}, {{"X", "Y"}, {"Z", "Y"}});
    CHECK_FALSE(rule1_applicable(direct, {"X"}, {"Y"}, {"Z"}, {}));
    Dag apart({"X", "Z", "Y"}, {{"X", "Y"}});
    CHECK(rule1_applicable(apart, {"X"}, {"Y"}, {"Z"}, {}));
    // Z only reaches Y through X.
    Dag through({"Z", "X", "Y"}, {{"Z", "X"}, {"X", "Y"}});
    CHECK(rule1_applicable(through, {"X"}, {"Y"}, {"Z"}, {}));
}

TEST_CASE("model validation and estimation") {
    Dag d({"X", "Y"}, {{"X", "Y"}});
    CHECK_THROWS_AS(DiscreteModel(d, {2, 2}, {Cpt{{{0.5, 0.6}}}, Cpt{{{0.5, 0.5}, {0.5, 0.5}}}}), InvalidInput);
    CHECK_THROWS_AS(DiscreteModel(d, {2, 2}, {Cpt{{{0.5, 0.5}}}, Cpt{{{0.5, 0.5}}}}), InvalidInput);

    std::vector<std::vector<std::size_t>> rows = {{0, 0}, {0, 1}, {1, 1}, {1, 1}};
    auto m = estimate_model(d, {2, 2}, rows);
    CHECK(m.cpt(0).rows[0][1] == doctest::Approx(0.5));
    CHECK(m.cpt(1).rows[1][1] == doctest::Approx(1.0));
    auto smooth = estimate_model(d, {2, 2}, rows, 1.0);
    CHECK(smooth.cpt(1).rows[1][1] == doctest::Approx(3.0 / 4.0));
    CHECK_THROWS_AS(estimate_model(d, {2, 2}, {{0, 0}}), Undefined);
}

TEST_CASE("positivity violations are reported") {
    Dag d = confounder();
    std::vector<Cpt> cpts(3);
    cpts[0].rows = {{0.5, 0.5}};
    cpts[1].rows = {{1.0, 0.0}, {0.1, 0.9}};
    cpts[2].rows = {{0.9, 0.1}, {0.8, 0.2}, {0.6, 0.4}, {0.2, 0.8}};
    DiscreteModel m(d, {2, 2, 2}, cpts);
    CHECK_THROWS_AS(backdoor_adjust(m, {"X", 1, "Y", {"Z"}, std::nullopt}), Undefined);
}

TEST_CASE("model json round trip and queries") {
    Json j = Json::parse(R"({
      "nodes": [{"name": "Z", "states": 2}, {"name": "X", "states": 2}, {"name": "Y", "states": 2}],
      "edges": [["Z", "X"], ["Z", "Y"], ["X", "Y"]],
      "cpts": {
        "Z": {"parents": [], "rows": [[0.5, 0.5]]},
        "X": {"parents": ["Z"], "rows": [[0.7, 0.3], [0.1, 0.9]]},
        "Y": {"parents": ["X", "Z"], "rows": [[0.9, 0.1], [0.6, 0.4], [0.8, 0.2], [0.2, 0.8]]}
      }})");
    auto m = model_from_json(j);
    // Rows given over (X, Z) are reordered into the graph's (Z, X) order.
    CHECK(m.cpt(2).rows[1] == std::vector<double>{0.8, 0.2});
    auto again = model_from_json(model_to_json(m));
    CHECK(again.joint() == m.joint());

    Json queries = Json::parse(R"([
      {"type": "backdoor", "x": "X", "y": "Y", "adjust": ["Z"]},
      {"type": "admissible", "x": "X", "y": "Y", "adjust": []},
      {"type": "rule1", "x": ["X"], "y": ["Y"], "z": ["Z"]},
      {"type": "dsep", "a": "Z", "b": "Y", "given": ["X"]},
      {"type": "wat"}
    ])");
    auto out = run_queries(m, queries);
    CHECK(out[0]["distribution"][1].get<double>() == doctest::Approx(0.5));
    CHECK(out[1]["admissible"] == false);
    CHECK(out[2]["applicable"] == false);
    CHECK(out[3]["separated"] == false);
    CHECK(out[4].contains("error"));

    Json bad = j;
    bad["cpts"]["Y"]["parents"] = {"X"};
    CHECK_THROWS_AS(model_from_json(bad), InvalidInput);
}

TEST_CASE("rule 1 agrees with path enumeration in the mutilated graph") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + trial % 4;
        auto g = oracle::random_dag(rng, n, 0.45);
        std::uniform_int_distribution<int> role(0, 4);
        std::set<std::size_t> x, y, z, w;
        for (std::size_t v = 0; v < n; ++v) {
            switch (role(rng)) {
                case 0: x.insert(v); break;
                case 1: y.insert(v); break;
                case 2: z.insert(v); break;
                case 3: w.insert(v); break;
                default: break;
            }
        }
        if (y.empty() || z.empty()) continue;
        auto cut = g;
        for (auto v : x) cut.parents[v].clear();
        std::set<std::size_t> given = x;
        given.insert(w.begin(), w.end());
        CHECK(rule1_applicable(support::to_dag(g), support::names(x), support::names(y), support::names(z),
                               support::names(w)) == oracle::d_separated(cut, y, z, given));
    }
}
