#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fpa/enet.hpp"
#include "fpa/io.hpp"
#include "fpa/kernels.hpp"
#include "fpa/model.hpp"

namespace fpa {

struct RankedEntry {
    std::string predicate_id;
    double score = 0.0;        // |b_j|
    double coefficient = 0.0;  // signed b_j
};

// Predicates with nonzero coefficients, by |b_j| descending then id.
struct RankedList {
    std::vector<RankedEntry> entries;
    bool empty_model = false;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

RankedList rank_predicates(std::span<const std::string> predicate_ids, std::span<const double> coefficients);
RankedList rank_predicates(const FitResult& fit);

inline constexpr double kDefaultGroupThreshold = 0.9;

struct PredictorGroups {
    std::vector<std::vector<std::string>> groups;  // members in rank order
    double tau = kDefaultGroupThreshold;
};

// Union-find over ranked predicates joined when |corr| >= tau; groups are
// ordered by their best-ranked member.
PredictorGroups group_predictors(const RankedList& ranked, const CoverageMatrix& matrix,
                                 double tau = kDefaultGroupThreshold, Execution exec = Execution::Parallel);

struct TScoreResult {
    std::size_t examined = 0;  // N_examined
    std::size_t total = 0;     // N
    double score = 0.0;        // 100 * examined / total
    bool unreachable = false;  // no origin reachable; scored as N
};

// Multi-source BFS over the undirected PDG from the suspicious nodes;
// counts dequeued nodes up to and including the first origin node.
TScoreResult t_score(const ProgramDependenceGraph& pdg, const std::set<std::string>& suspicious,
                     const std::set<std::string>& origins);

struct PScoreResult {
    std::size_t index = 0;  // 1-based position of the first fault predicate, 0 when absent
    std::size_t list_size = 0;
    double score = 100.0;
    bool not_in_list = false;
    bool empty_list = false;
};

PScoreResult p_score(const RankedList& ranked, const std::set<std::string>& fault_predicates);

// Statement nodes of the top_k ranked predicates (clamped to |L|).
std::set<std::string> suspicious_nodes_from_ranking(const RankedList& ranked, const PredicateMap& map,
                                                    std::size_t top_k);

struct Evaluation {
    RankedList ranking;
    PredictorGroups groups;
    std::size_t top_k = 0;
    std::set<std::string> suspicious_nodes;
    std::optional<TScoreResult> t;
    std::optional<PScoreResult> p;
    std::vector<std::string> flags;
};

// top_k = 0 selects the size of the top-ranked predictor group.
Evaluation evaluate(const FitResult& fit, const CoverageMatrix& matrix, const PredicateMap* map,
                    const ProgramDependenceGraph* pdg, const GroundTruth* truth, std::size_t top_k = 0,
                    double tau = kDefaultGroupThreshold, Execution exec = Execution::Parallel);

Json to_json(const RankedList& ranked);
RankedList ranked_list_from_json(const Json& json);
Json to_json(const Evaluation& evaluation);

}  // namespace fpa
