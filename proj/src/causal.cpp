#include "haibench/causal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>

#include "haibench/error.hpp"

namespace haibench::causal {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr std::size_t kMaxJoint = std::size_t{1} << 24;

std::vector<std::size_t> indices(const Dag& d, const NodeSet& nodes) {
    std::vector<std::size_t> out;
    for (const auto& n : nodes) out.push_back(d.index(n));
    return out;
}

void require_disjoint(std::initializer_list<const NodeSet*> sets) {
    NodeSet seen;
    for (const auto* s : sets)
        for (const auto& n : *s)
            if (!seen.insert(n).second) throw InvalidInput("node '" + n + "' appears in more than one set");
}

// Marginal of the joint over `nodes`, mixed radix with nodes[0] most
// significant.
std::vector<double> marginal(const DiscreteModel& m, const std::vector<double>& joint,
                             const std::vector<std::size_t>& nodes) {
    const auto& card = m.cardinalities();
    const std::size_t n = card.size();
    std::size_t size = 1;
    for (auto v : nodes) size *= card[v];
    std::vector<double> out(size, 0.0);
    std::vector<std::size_t> value(n, 0);
    for (std::size_t idx = 0; idx < joint.size(); ++idx) {
        // decode idx, node 0 most significant
        std::size_t rest = idx;
        for (std::size_t i = n; i-- > 0;) {
            value[i] = rest % card[i];
            rest /= card[i];
        }
        std::size_t k = 0;
        for (auto v : nodes) k = k * card[v] + value[v];
        out[k] += joint[idx];
    }
    return out;
}

std::size_t radix_size(const DiscreteModel& m, const std::vector<std::size_t>& nodes) {
    std::size_t size = 1;
    for (auto v : nodes) size *= m.cardinality(v);
    return size;
}

}  // namespace

// ---------------------------------------------------------------------------

Dag::Dag(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges)
    : names_(std::move(nodes)), parents_(names_.size()), children_(names_.size()) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].empty()) throw InvalidInput("empty node name");
        for (std::size_t j = 0; j < i; ++j)
            if (names_[i] == names_[j]) throw InvalidInput("duplicate node name '" + names_[i] + "'");
    }
    for (const auto& [from, to] : edges) {
        auto f = index(from);
        auto t = index(to);
        if (std::find(parents_[t].begin(), parents_[t].end(), f) != parents_[t].end())
            throw InvalidInput("duplicate edge " + from + " -> " + to);
        parents_[t].push_back(f);
        children_[f].push_back(t);
    }
}

std::size_t Dag::index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InvalidInput("unknown node '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

bool Dag::contains(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::vector<std::pair<std::string, std::string>> Dag::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t t = 0; t < size(); ++t)
        for (auto f : parents_[t]) out.emplace_back(names_[f], names_[t]);
    return out;
}

std::vector<bool> Dag::descendants(const std::vector<std::size_t>& from) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack(from.begin(), from.end());
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = true;
        for (auto c : children_[v]) stack.push_back(c);
    }
    return seen;
}

std::vector<bool> Dag::ancestors(const std::vector<std::size_t>& from) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack(from.begin(), from.end());
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (seen[v]) continue;
        seen[v] = true;
        for (auto p : parents_[v]) stack.push_back(p);
    }
    return seen;
}

Dag Dag::without_incoming(const NodeSet& nodes) const {
    std::vector<std::pair<std::string, std::string>> kept;
    for (const auto& e : edges())
        if (!nodes.count(e.second)) kept.push_back(e);
    return Dag(names_, kept);
}

Dag Dag::without_outgoing(const NodeSet& nodes) const {
    std::vector<std::pair<std::string, std::string>> kept;
    for (const auto& e : edges())
        if (!nodes.count(e.first)) kept.push_back(e);
    return Dag(names_, kept);
}

// ---------------------------------------------------------------------------

DagCheck validate_dag(const Dag& d) {
    const auto n = d.size();
    std::vector<std::size_t> indegree(n);
    for (std::size_t v = 0; v < n; ++v) indegree[v] = d.parents(v).size();
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push(v);

    DagCheck out;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        out.order.push_back(d.name(v));
        for (auto c : d.children(v))
            if (--indegree[c] == 0) ready.push(c);
    }
    if (out.order.size() == n) {
        out.ok = true;
        return out;
    }
    out.order.clear();

    // Every node left with positive indegree lies on or downstream of a
    // cycle; a DFS from the lowest such node finds one.
    enum class Color { white, grey, black };
    std::vector<Color> color(n, Color::white);
    std::vector<std::size_t> stack;
    std::function<bool(std::size_t)> dfs = [&](std::size_t v) {
        color[v] = Color::grey;
        stack.push_back(v);
        for (auto c : d.children(v)) {
            if (color[c] == Color::grey) {
                auto it = std::find(stack.begin(), stack.end(), c);
                for (; it != stack.end(); ++it) out.cycle.push_back(d.name(*it));
                return true;
            }
            if (color[c] == Color::white && dfs(c)) return true;
        }
        stack.pop_back();
        color[v] = Color::black;
        return false;
    };
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] > 0 && color[v] == Color::white && dfs(v)) break;
    return out;
}

std::vector<std::size_t> topological_order(const Dag& d) {
    auto check = validate_dag(d);
    if (!check.ok) {
        std::string msg = "graph has a cycle:";
        for (const auto& n : check.cycle) msg += " " + n;
        throw InvalidInput(msg);
    }
    std::vector<std::size_t> out;
    for (const auto& n : check.order) out.push_back(d.index(n));
    return out;
}

bool d_separated(const Dag& d, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
    require_disjoint({&a, &b, &z});
    topological_order(d);
    const auto n = d.size();
    std::vector<bool> observed(n, false);
    for (auto v : indices(d, z)) observed[v] = true;
    const auto z_ancestors = d.ancestors(indices(d, z));
    std::vector<bool> target(n, false);
    for (auto v : indices(d, b)) target[v] = true;

    // Reachability over (node, direction): `up` means the trail arrived from
    // a child, `down` from a parent.
    enum Dir { up = 0, down = 1 };
    std::vector<std::array<bool, 2>> visited(n, {false, false});
    std::deque<std::pair<std::size_t, Dir>> queue;
    for (auto v : indices(d, a)) queue.emplace_back(v, up);

    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = true;
        if (!observed[v] && target[v]) return false;

        if (dir == up && !observed[v]) {
            for (auto p : d.parents(v)) queue.emplace_back(p, up);
            for (auto c : d.children(v)) queue.emplace_back(c, down);
        } else if (dir == down) {
            if (!observed[v])
                for (auto c : d.children(v)) queue.emplace_back(c, down);
            if (z_ancestors[v])
                for (auto p : d.parents(v)) queue.emplace_back(p, up);
        }
    }
    return true;
}

bool backdoor_admissible(const Dag& d, const std::string& x, const std::string& y, const NodeSet& z) {
    if (x == y) throw InvalidInput("treatment and outcome must differ");
    if (z.count(x) || z.count(y)) throw InvalidInput("adjustment set contains the treatment or outcome");
    const auto desc = d.descendants({d.index(x)});
    for (const auto& n : z)
        if (desc[d.index(n)]) return false;
    return d_separated(d.without_outgoing({x}), {x}, {y}, z);
}

bool rule1_applicable(const Dag& d, const NodeSet& x, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
    require_disjoint({&x, &y, &z, &w});
    NodeSet given = x;
    given.insert(w.begin(), w.end());
    return d_separated(d.without_incoming(x), y, z, given);
}

// ---------------------------------------------------------------------------

DiscreteModel::DiscreteModel(Dag dag, std::vector<std::size_t> cardinality, std::vector<Cpt> cpts)
    : dag_(std::move(dag)), card_(std::move(cardinality)), cpts_(std::move(cpts)) {
    topological_order(dag_);
    if (card_.size() != dag_.size() || cpts_.size() != dag_.size())
        throw InvalidInput("model needs one cardinality and one CPT per node");
    for (std::size_t v = 0; v < dag_.size(); ++v)
        if (card_[v] < 1) throw InvalidInput("node '" + dag_.name(v) + "' has no states");
    for (std::size_t v = 0; v < dag_.size(); ++v) {
        std::size_t configs = 1;
        for (auto p : dag_.parents(v)) configs *= card_[p];
        const auto& rows = cpts_[v].rows;
        if (rows.size() != configs)
            throw InvalidInput("CPT of '" + dag_.name(v) + "' has " + std::to_string(rows.size()) + " rows, expected " +
                               std::to_string(configs));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != card_[v])
                throw InvalidInput("CPT row " + std::to_string(r) + " of '" + dag_.name(v) + "' has the wrong width");
            double sum = 0;
            for (double p : rows[r]) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw InvalidInput("CPT of '" + dag_.name(v) + "' has an invalid probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowTolerance)
                throw InvalidInput("CPT row " + std::to_string(r) + " of '" + dag_.name(v) + "' does not sum to 1");
        }
    }
    std::size_t joint = 1;
    for (auto c : card_) {
        if (joint > kMaxJoint / c) throw InvalidInput("joint distribution too large to enumerate");
        joint *= c;
    }
}

double DiscreteModel::prob(std::size_t node, std::size_t value, const std::vector<std::size_t>& assignment) const {
    std::size_t row = 0;
    for (auto p : dag_.parents(node)) row = row * card_[p] + assignment.at(p);
    return cpts_.at(node).rows.at(row).at(value);
}

std::vector<double> DiscreteModel::joint() const {
    const auto n = dag_.size();
    std::size_t size = 1;
    for (auto c : card_) size *= c;
    std::vector<double> out(size, 0.0);
    std::vector<std::size_t> value(n, 0);
    for (std::size_t idx = 0; idx < size; ++idx) {
        double p = 1.0;
        for (std::size_t v = 0; v < n && p > 0.0; ++v) p *= prob(v, value[v], value);
        out[idx] = p;
        // increment, last node least significant
        for (std::size_t i = n; i-- > 0;) {
            if (++value[i] < card_[i]) break;
            value[i] = 0;
        }
    }
    return out;
}

DiscreteModel estimate_model(const Dag& dag, std::vector<std::size_t> cardinality,
                             const std::vector<std::vector<std::size_t>>& rows, double smoothing) {
    if (!(smoothing >= 0.0)) throw InvalidInput("smoothing must be nonnegative");
    if (cardinality.size() != dag.size()) throw InvalidInput("one cardinality per node required");
    std::vector<Cpt> cpts(dag.size());
    for (std::size_t v = 0; v < dag.size(); ++v) {
        std::size_t configs = 1;
        for (auto p : dag.parents(v)) configs *= cardinality[p];
        cpts[v].rows.assign(configs, std::vector<double>(cardinality[v], smoothing));
    }
    for (const auto& row : rows) {
        if (row.size() != dag.size()) throw InvalidInput("data row has the wrong number of values");
        for (std::size_t v = 0; v < dag.size(); ++v)
            if (row[v] >= cardinality[v]) throw InvalidInput("data value out of range for '" + dag.name(v) + "'");
        for (std::size_t v = 0; v < dag.size(); ++v) {
            std::size_t config = 0;
            for (auto p : dag.parents(v)) config = config * cardinality[p] + row[p];
            cpts[v].rows[config][row[v]] += 1.0;
        }
    }
    for (std::size_t v = 0; v < dag.size(); ++v) {
        for (auto& r : cpts[v].rows) {
            double total = 0;
            for (double c : r) total += c;
            if (total == 0.0)
                throw Undefined("parent configuration of '" + dag.name(v) + "' never observed; enable smoothing");
            for (double& c : r) c /= total;
        }
    }
    return DiscreteModel(dag, std::move(cardinality), std::move(cpts));
}

// ---------------------------------------------------------------------------

std::vector<double> backdoor_adjust(const DiscreteModel& m, const InterventionQuery& q) {
    const auto& d = m.dag();
    const auto x = d.index(q.x);
    const auto y = d.index(q.y);
    if (q.x_value >= m.cardinality(x)) throw InvalidInput("treatment value out of range");
    if (!backdoor_admissible(d, q.x, q.y, q.adjustment_set))
        throw InvalidInput("adjustment set does not satisfy the back-door criterion");

    auto nodes = indices(d, q.adjustment_set);
    const std::size_t z_size = radix_size(m, nodes);
    const std::size_t cx = m.cardinality(x), cy = m.cardinality(y);
    nodes.push_back(x);
    nodes.push_back(y);
    const auto table = marginal(m, m.joint(), nodes);

    std::vector<double> out(cy, 0.0);
    for (std::size_t z = 0; z < z_size; ++z) {
        const std::size_t base = z * cx * cy;
        double pz = 0;
        for (std::size_t k = 0; k < cx * cy; ++k) pz += table[base + k];
        if (pz == 0.0) continue;
        double pxz = 0;
        for (std::size_t yv = 0; yv < cy; ++yv) pxz += table[base + q.x_value * cy + yv];
        if (pxz == 0.0)
            throw Undefined("positivity violation: P(" + q.x + "=" + std::to_string(q.x_value) +
                            ", Z=z) = 0 in a stratum with P(Z=z) > 0");
        for (std::size_t yv = 0; yv < cy; ++yv) out[yv] += table[base + q.x_value * cy + yv] / pxz * pz;
    }
    return out;
}

double ate(const DiscreteModel& m, const std::string& x, const std::string& y, const NodeSet& z) {
    if (m.cardinality(m.dag().index(x)) < 2) throw InvalidInput("treatment needs at least two states");
    auto expectation = [&](std::size_t xv) {
        auto dist = backdoor_adjust(m, {x, xv, y, z, std::nullopt});
        double e = 0;
        for (std::size_t v = 0; v < dist.size(); ++v) e += static_cast<double>(v) * dist[v];
        return e;
    };
    return expectation(1) - expectation(0);
}

MediationEffects mediation_effects(const DiscreteModel& m, const std::string& x, const std::string& mediator,
                                   const std::string& y, const NodeSet& adjust) {
    const auto& d = m.dag();
    const auto xi = d.index(x), mi = d.index(mediator), yi = d.index(y);
    if (m.cardinality(xi) != 2) throw InvalidInput("mediation needs a binary treatment; '" + x + "' is nonbinary");
    NodeSet roles{x, mediator, y};
    if (roles.size() != 3) throw InvalidInput("treatment, mediator and outcome must differ");
    for (const auto& w : adjust)
        if (roles.count(w)) throw InvalidInput("adjustment set contains a mediation role");
    NodeSet with_x = adjust;
    with_x.insert(x);
    if (!backdoor_admissible(d, x, y, adjust) || !backdoor_admissible(d, x, mediator, adjust) ||
        !backdoor_admissible(d, mediator, y, with_x))
        throw InvalidInput("mediator or outcome is confounded given the adjustment set");

    auto nodes = indices(d, adjust);
    const std::size_t w_size = radix_size(m, nodes);
    const std::size_t cm = m.cardinality(mi), cy = m.cardinality(yi);
    nodes.insert(nodes.end(), {xi, mi, yi});
    const auto table = marginal(m, m.joint(), nodes);
    auto cell = [&](std::size_t w, std::size_t xv, std::size_t mv, std::size_t yv) {
        return table[((w * 2 + xv) * cm + mv) * cy + yv];
    };

    MediationEffects out;
    for (std::size_t w = 0; w < w_size; ++w) {
        double pw = 0;
        for (std::size_t xv = 0; xv < 2; ++xv)
            for (std::size_t mv = 0; mv < cm; ++mv)
                for (std::size_t yv = 0; yv < cy; ++yv) pw += cell(w, xv, mv, yv);
        if (pw == 0.0) continue;

        // P(m | x, w) and E[Y | x, m, w]
        std::vector<double> pm[2], ey[2], pxm[2];
        for (std::size_t xv = 0; xv < 2; ++xv) {
            pm[xv].assign(cm, 0.0);
            ey[xv].assign(cm, 0.0);
            pxm[xv].assign(cm, 0.0);
            double px = 0;
            for (std::size_t mv = 0; mv < cm; ++mv) {
                double mass = 0, first = 0;
                for (std::size_t yv = 0; yv < cy; ++yv) {
                    mass += cell(w, xv, mv, yv);
                    first += static_cast<double>(yv) * cell(w, xv, mv, yv);
                }
                pxm[xv][mv] = mass;
                ey[xv][mv] = mass > 0 ? first / mass : 0.0;
                px += mass;
            }
            if (px == 0.0) throw Undefined("positivity violation: treatment value never occurs in a stratum");
            for (std::size_t mv = 0; mv < cm; ++mv) pm[xv][mv] = pxm[xv][mv] / px;
        }
        double nde = 0, nie = 0;
        for (std::size_t mv = 0; mv < cm; ++mv) {
            if (pm[0][mv] > 0 && pxm[1][mv] == 0.0)
                throw Undefined("positivity violation: mediator value unreachable under treatment");
            nde += (ey[1][mv] - ey[0][mv]) * pm[0][mv];
            nie += ey[1][mv] * (pm[1][mv] - pm[0][mv]);
        }
        out.nde += pw * nde;
        out.nie += pw * nie;
    }
    out.te = ate(m, x, y, adjust);
    return out;
}

}  // namespace haibench::causal
