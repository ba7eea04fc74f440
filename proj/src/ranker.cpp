#include "fpa/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpa/error.hpp"

namespace fpa {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // the smaller index stays root, so a root is always its group's best rank
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

RankedList rank_predicates(std::span<const std::string> ids, std::span<const double> coefficients) {
    if (ids.size() != coefficients.size())
        fail(ErrorCode::LengthMismatch, "predicate ids and coefficients differ in length");
    RankedList out;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (coefficients[j] != 0.0) out.entries.push_back({ids[j], std::abs(coefficients[j]), coefficients[j]});
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.predicate_id < b.predicate_id;
    });
    out.empty_model = out.entries.empty();
    return out;
}

RankedList rank_predicates(const FitResult& fit) { return rank_predicates(fit.predicate_ids, fit.coefficients); }

PredictorGroups group_predictors(const RankedList& ranked, const CoverageMatrix& matrix, double tau,
                                 Execution exec) {
    if (!(tau >= 0.0 && tau <= 1.0)) fail(ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
    PredictorGroups out;
    out.tau = tau;
    const std::size_t s = ranked.size();
    if (s == 0) return out;

    std::vector<std::size_t> columns(s);
    for (std::size_t r = 0; r < s; ++r) {
        auto idx = matrix.predicate_index(ranked.entries[r].predicate_id);
        if (!idx) fail(ErrorCode::UnknownPredicate, "ranked predicate '" + ranked.entries[r].predicate_id + "'");
        columns[r] = *idx;
    }
    std::vector<double> corr(s * s);
    kernels::column_correlation(exec, matrix.cells(), matrix.runs(), matrix.predicates(), columns, corr);

    DisjointSets sets(s);
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a + 1; b < s; ++b) {
            if (std::abs(corr[a * s + b]) >= tau) sets.unite(a, b);
        }
    }
    std::vector<std::size_t> group_of_root(s, s);
    for (std::size_t r = 0; r < s; ++r) {
        const std::size_t root = sets.find(r);
        if (group_of_root[root] == s) {
            group_of_root[root] = out.groups.size();
            out.groups.emplace_back();
        }
        out.groups[group_of_root[root]].push_back(ranked.entries[r].predicate_id);
    }
    return out;
}

TScoreResult t_score(const ProgramDependenceGraph& pdg, const std::set<std::string>& suspicious,
                     const std::set<std::string>& origins) {
    if (suspicious.empty() || origins.empty())
        fail(ErrorCode::InvalidArgument, "T-score needs suspicious and origin nodes");
    const std::size_t n = pdg.size();
    std::vector<bool> is_origin(n, false);
    for (const auto& o : origins) is_origin[pdg.index_of(o)] = true;

    std::vector<bool> seen(n, false);
    std::vector<std::size_t> frontier;
    for (const auto& s : suspicious) {
        const auto idx = pdg.index_of(s);
        if (!seen[idx]) {
            seen[idx] = true;
            frontier.push_back(idx);
        }
    }

    TScoreResult out;
    out.total = n;
    std::size_t dequeued = 0;
    bool found = false;
    // level-synchronous so nodes leave the queue in (depth, node id) order
    while (!frontier.empty() && !found) {
        std::sort(frontier.begin(), frontier.end());
        std::vector<std::size_t> next;
        for (std::size_t node : frontier) {
            ++dequeued;
            if (is_origin[node]) {
                found = true;
                break;
            }
            for (std::size_t nb : pdg.neighbors(node)) {
                if (!seen[nb]) {
                    seen[nb] = true;
                    next.push_back(nb);
                }
            }
        }
        frontier = std::move(next);
    }
    out.unreachable = !found;
    out.examined = found ? dequeued : n;
    out.score = 100.0 * static_cast<double>(out.examined) / static_cast<double>(n);
    return out;
}

PScoreResult p_score(const RankedList& ranked, const std::set<std::string>& fault_predicates) {
    PScoreResult out;
    out.list_size = ranked.size();
    if (ranked.empty()) {
        out.empty_list = true;
        out.not_in_list = true;
        return out;
    }
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (fault_predicates.contains(ranked.entries[r].predicate_id)) {
            out.index = r + 1;
            out.score = 100.0 * static_cast<double>(out.index) / static_cast<double>(ranked.size());
            return out;
        }
    }
    out.not_in_list = true;
    return out;
}

std::set<std::string> suspicious_nodes_from_ranking(const RankedList& ranked, const PredicateMap& map,
                                                    std::size_t top_k) {
    if (top_k == 0) fail(ErrorCode::InvalidArgument, "top_k must be positive");
    std::set<std::string> nodes;
    const std::size_t k = std::min(top_k, ranked.size());
    for (std::size_t r = 0; r < k; ++r) nodes.insert(map.at(ranked.entries[r].predicate_id).node_id);
    return nodes;
}

Evaluation evaluate(const FitResult& fit, const CoverageMatrix& matrix, const PredicateMap* map,
                    const ProgramDependenceGraph* pdg, const GroundTruth* truth, std::size_t top_k, double tau,
                    Execution exec) {
    Evaluation ev;
    ev.ranking = rank_predicates(fit);
    if (ev.ranking.empty_model) ev.flags.push_back("EmptyModel");
    ev.groups = group_predictors(ev.ranking, matrix, tau, exec);
    ev.top_k = top_k != 0 ? top_k : (ev.groups.groups.empty() ? 0 : ev.groups.groups.front().size());

    if (truth != nullptr) {
        ev.p = p_score(ev.ranking, truth->fault_predicates);
        if (ev.p->empty_list) ev.flags.push_back("EmptyRankedList");
        else if (ev.p->not_in_list) ev.flags.push_back("FaultPredicateNotInList");
    }
    if (map != nullptr && ev.top_k > 0) ev.suspicious_nodes = suspicious_nodes_from_ranking(ev.ranking, *map, ev.top_k);
    if (pdg != nullptr && truth != nullptr) {
        if (ev.suspicious_nodes.empty()) {
            // nothing reported: the whole graph has to be examined
            ev.t = TScoreResult{pdg->size(), pdg->size(), 100.0, true};
            ev.flags.push_back("NoSuspiciousNodes");
        } else {
            ev.t = t_score(*pdg, ev.suspicious_nodes, truth->faulty_nodes);
            if (ev.t->unreachable) ev.flags.push_back("OriginUnreachable");
        }
    }
    return ev;
}

Json to_json(const RankedList& ranked) {
    Json entries = Json::array();
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& e = ranked.entries[r];
        entries.push_back(
            {{"rank", r + 1}, {"predicate", e.predicate_id}, {"score", e.score}, {"coefficient", e.coefficient}});
    }
    return entries;
}

RankedList ranked_list_from_json(const Json& json) {
    try {
        const Json& entries = json.is_object() ? json.at("ranking") : json;
        std::vector<std::string> ids;
        std::vector<double> coefs;
        for (const auto& e : entries) {
            ids.push_back(e.at("predicate").get<std::string>());
            coefs.push_back(e.at("coefficient").get<double>());
        }
        return rank_predicates(ids, coefs);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedJson, std::string("ranking: ") + e.what());
    }
}

Json to_json(const Evaluation& ev) {
    Json groups = Json::array();
    for (const auto& g : ev.groups.groups) groups.push_back(g);
    Json nodes = Json::array();
    std::vector<std::string> sorted(ev.suspicious_nodes.begin(), ev.suspicious_nodes.end());
    std::sort(sorted.begin(), sorted.end(), NodeIdLess{});
    for (const auto& n : sorted) nodes.push_back(node_id_json(n));

    Json out{{"ranking", to_json(ev.ranking)},
             {"groups", std::move(groups)},
             {"group_threshold", ev.groups.tau},
             {"top_k", ev.top_k},
             {"suspicious_nodes", std::move(nodes)}};
    if (ev.t) {
        out["t_score"] = ev.t->score;
        out["t_score_detail"] = {{"examined", ev.t->examined}, {"total", ev.t->total}, {"unreachable", ev.t->unreachable}};
    } else {
        out["t_score"] = nullptr;
    }
    if (ev.p) {
        out["p_score"] = ev.p->score;
        out["p_score_detail"] = {{"index", ev.p->index}, {"list_size", ev.p->list_size}, {"not_in_list", ev.p->not_in_list}};
    } else {
        out["p_score"] = nullptr;
    }
    out["flags"] = ev.flags;
    return out;
}

}  // namespace fpa
