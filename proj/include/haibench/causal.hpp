#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "haibench/events.hpp"

namespace haibench::causal {

using NodeSet = std::set<std::string>;

// Directed graph over named nodes. Construction checks names and edge
// endpoints; acyclicity is checked by validate_dag (and by every operation
// that needs it).
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::size_t index(const std::string& name) const;
    bool contains(const std::string& name) const;

    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
    std::vector<std::pair<std::string, std::string>> edges() const;

    // Descendants of the given nodes, the nodes themselves included.
    std::vector<bool> descendants(const std::vector<std::size_t>& from) const;
    std::vector<bool> ancestors(const std::vector<std::size_t>& from) const;

    // Copies with every edge into / out of the named nodes removed.
    Dag without_incoming(const NodeSet& nodes) const;
    Dag without_outgoing(const NodeSet& nodes) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
};

struct DagCheck {
    bool ok = false;
    std::vector<std::string> order;  // topological, when ok
    std::vector<std::string> cycle;  // one cycle, when not ok
};

DagCheck validate_dag(const Dag& d);
// Throws InvalidInput with the cycle when d is not acyclic.
std::vector<std::size_t> topological_order(const Dag& d);

// True iff every path between A and B is blocked by Z.
bool d_separated(const Dag& d, const NodeSet& a, const NodeSet& b, const NodeSet& z);

// No member of Z descends from X, and Z d-separates X from Y once X's
// outgoing edges are removed.
bool backdoor_admissible(const Dag& d, const std::string& x, const std::string& y, const NodeSet& z);

// Y independent of Z given X and W in the graph with edges into X removed.
bool rule1_applicable(const Dag& d, const NodeSet& x, const NodeSet& y, const NodeSet& z, const NodeSet& w);

// ---------------------------------------------------------------------------

// Conditional table of one node. Rows are indexed by the parent
// configuration in mixed radix over Dag::parents order, first parent most
// significant; each row is a distribution over the node's states.
struct Cpt {
    std::vector<std::vector<double>> rows;
};

class DiscreteModel {
public:
    DiscreteModel(Dag dag, std::vector<std::size_t> cardinality, std::vector<Cpt> cpts);

    const Dag& dag() const { return dag_; }
    std::size_t cardinality(std::size_t node) const { return card_.at(node); }
    const std::vector<std::size_t>& cardinalities() const { return card_; }
    const Cpt& cpt(std::size_t node) const { return cpts_.at(node); }

    // P(node = value | parents), reading parent values from a full
    // assignment indexed by node.
    double prob(std::size_t node, std::size_t value, const std::vector<std::size_t>& assignment) const;

    // Full joint over every node, configurations in mixed radix with node 0
    // most significant.
    std::vector<double> joint() const;

private:
    Dag dag_;
    std::vector<std::size_t> card_;
    std::vector<Cpt> cpts_;
};

// Frequency estimate of every CPT from complete categorical rows (values in
// node order). With smoothing > 0, adds that pseudo-count to every cell.
DiscreteModel estimate_model(const Dag& dag, std::vector<std::size_t> cardinality,
                             const std::vector<std::vector<std::size_t>>& rows, double smoothing = 0.0);

struct InterventionQuery {
    std::string x;
    std::size_t x_value = 1;
    std::string y;
    NodeSet adjustment_set;
    std::optional<std::string> mediator;
};

// P(Y | do(X = x)) = sum_z P(Y | X = x, Z = z) P(Z = z)
std::vector<double> backdoor_adjust(const DiscreteModel& m, const InterventionQuery& q);

// E[Y | do(X=1)] - E[Y | do(X=0)] with Y coded by state index.
double ate(const DiscreteModel& m, const std::string& x, const std::string& y, const NodeSet& z);

struct MediationEffects {
    double nde = 0;
    double nie = 0;
    double te = 0;
};

// Natural direct and indirect effects of a binary X through M on Y,
// identified under no unobserved confounding given `adjust`.
MediationEffects mediation_effects(const DiscreteModel& m, const std::string& x, const std::string& mediator,
                                   const std::string& y, const NodeSet& adjust = {});

// ---------------------------------------------------------------------------
// Text format

DiscreteModel model_from_json(const Json& j);
Json model_to_json(const DiscreteModel& m);
Dag dag_from_json(const Json& j);

// Evaluates one query object ({"type": "backdoor" | "ate" | "mediation" |
// "rule1" | "dsep" | "admissible" | "validate", ...}); errors become an
// "error" field.
Json run_query(const DiscreteModel& m, const Json& query);
Json run_queries(const DiscreteModel& m, const Json& queries);

}  // namespace haibench::causal
