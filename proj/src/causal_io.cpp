#include <algorithm>

#include "haibench/causal.hpp"
#include "haibench/error.hpp"

// Model file:
//   {"nodes": [{"name": "Z", "states": 2}, ...],
//    "edges": [["Z", "X"], ...],
//    "cpts": {"X": {"parents": ["Z"], "rows": [[0.7, 0.3], [0.2, 0.8]]}, ...}}
// or, instead of "cpts", observational data to estimate them from:
//    "data": [[0, 1, 1], ...], "smoothing": 1
// CPT rows are listed in mixed radix over the given parent order, first
// parent most significant.

namespace haibench::causal {

namespace {

NodeSet node_set(const Json& j, const char* field) {
    NodeSet out;
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return out;
    if (it->is_string()) return {it->get<std::string>()};
    for (const auto& v : *it) out.insert(v.get<std::string>());
    return out;
}

// Reorders rows listed over `file_parents` into the Dag's parent order.
std::vector<std::vector<double>> reorder_rows(const Dag& d, std::size_t node, const std::vector<std::size_t>& card,
                                              const std::vector<std::size_t>& file_parents,
                                              const std::vector<std::vector<double>>& rows) {
    const auto& dag_parents = d.parents(node);
    if (file_parents.size() != dag_parents.size() ||
        !std::is_permutation(file_parents.begin(), file_parents.end(), dag_parents.begin()))
        throw InvalidInput("CPT parents of '" + d.name(node) + "' do not match the graph");
    std::size_t configs = 1;
    for (auto p : dag_parents) configs *= card[p];
    if (rows.size() != configs)
        throw InvalidInput("CPT of '" + d.name(node) + "' has " + std::to_string(rows.size()) + " rows, expected " +
                           std::to_string(configs));
    std::vector<std::vector<double>> out(configs);
    std::vector<std::size_t> value(d.size(), 0);
    for (std::size_t r = 0; r < configs; ++r) {
        std::size_t rest = r;
        for (std::size_t k = file_parents.size(); k-- > 0;) {
            value[file_parents[k]] = rest % card[file_parents[k]];
            rest /= card[file_parents[k]];
        }
        std::size_t target = 0;
        for (auto p : dag_parents) target = target * card[p] + value[p];
        out[target] = rows[r];
    }
    return out;
}

}  // namespace

Dag dag_from_json(const Json& j) {
    std::vector<std::string> names;
    for (const auto& n : j.at("nodes")) names.push_back(n.is_string() ? n.get<std::string>() : n.at("name").get<std::string>());
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.value("edges", Json::array())) {
        if (!e.is_array() || e.size() != 2) throw InvalidInput("edge must be a [from, to] pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return Dag(std::move(names), edges);
}

DiscreteModel model_from_json(const Json& j) {
    Dag dag = dag_from_json(j);
    std::vector<std::size_t> card;
    for (const auto& n : j.at("nodes")) card.push_back(n.is_object() ? n.value("states", std::size_t{2}) : 2);

    if (j.contains("data")) {
        std::vector<std::vector<std::size_t>> rows;
        for (const auto& r : j.at("data")) rows.push_back(r.get<std::vector<std::size_t>>());
        return estimate_model(dag, card, rows, j.value("smoothing", 0.0));
    }

    std::vector<Cpt> cpts(dag.size());
    const auto& tables = j.at("cpts");
    for (std::size_t v = 0; v < dag.size(); ++v) {
        auto it = tables.find(dag.name(v));
        if (it == tables.end()) throw InvalidInput("missing CPT for '" + dag.name(v) + "'");
        std::vector<std::size_t> parents;
        for (const auto& p : it->value("parents", Json::array())) parents.push_back(dag.index(p.get<std::string>()));
        auto rows = it->at("rows").get<std::vector<std::vector<double>>>();
        cpts[v].rows = reorder_rows(dag, v, card, parents, rows);
    }
    return DiscreteModel(std::move(dag), std::move(card), std::move(cpts));
}

Json model_to_json(const DiscreteModel& m) {
    const auto& d = m.dag();
    Json nodes = Json::array();
    for (std::size_t v = 0; v < d.size(); ++v) nodes.push_back({{"name", d.name(v)}, {"states", m.cardinality(v)}});
    Json edges = Json::array();
    for (const auto& [f, t] : d.edges()) edges.push_back({f, t});
    Json cpts = Json::object();
    for (std::size_t v = 0; v < d.size(); ++v) {
        std::vector<std::string> parents;
        for (auto p : d.parents(v)) parents.push_back(d.name(p));
        cpts[d.name(v)] = {{"parents", parents}, {"rows", m.cpt(v).rows}};
    }
    return {{"nodes", nodes}, {"edges", edges}, {"cpts", cpts}};
}

Json run_query(const DiscreteModel& m, const Json& q) {
    Json out = q;
    try {
        const auto type = q.at("type").get<std::string>();
        const auto& d = m.dag();
        if (type == "validate") {
            auto check = validate_dag(d);
            out["ok"] = check.ok;
            out["order"] = check.order;
            if (!check.ok) out["cycle"] = check.cycle;
        } else if (type == "dsep") {
            out["separated"] = d_separated(d, node_set(q, "a"), node_set(q, "b"), node_set(q, "given"));
        } else if (type == "admissible") {
            out["admissible"] = backdoor_admissible(d, q.at("x").get<std::string>(), q.at("y").get<std::string>(),
                                                    node_set(q, "adjust"));
        } else if (type == "backdoor") {
            InterventionQuery iq{q.at("x").get<std::string>(), q.value("x_value", std::size_t{1}),
                                 q.at("y").get<std::string>(), node_set(q, "adjust"), std::nullopt};
            out["distribution"] = backdoor_adjust(m, iq);
        } else if (type == "ate") {
            out["ate"] = ate(m, q.at("x").get<std::string>(), q.at("y").get<std::string>(), node_set(q, "adjust"));
        } else if (type == "mediation") {
            auto eff = mediation_effects(m, q.at("x").get<std::string>(), q.at("m").get<std::string>(),
                                         q.at("y").get<std::string>(), node_set(q, "adjust"));
            out["nde"] = eff.nde;
            out["nie"] = eff.nie;
            out["te"] = eff.te;
        } else if (type == "rule1") {
            out["applicable"] = rule1_applicable(d, node_set(q, "x"), node_set(q, "y"), node_set(q, "z"), node_set(q, "w"));
        } else {
            throw InvalidInput("unknown query type '" + type + "'");
        }
    } catch (const Error& e) {
        out["error"] = e.what();
    } catch (const Json::exception& e) {
        out["error"] = std::string("malformed query: ") + e.what();
    }
    return out;
}

Json run_queries(const DiscreteModel& m, const Json& queries) {
    Json list = queries.is_array() ? queries : queries.contains("queries") ? queries.at("queries") : Json::array({queries});
    Json out = Json::array();
    for (const auto& q : list) out.push_back(run_query(m, q));
    return out;
}

}  // namespace haibench::causal
