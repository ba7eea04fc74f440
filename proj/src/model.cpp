#include "fpa/model.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "fpa/error.hpp"

namespace fpa {

namespace {

void require_unique(const std::vector<std::string>& ids, ErrorCode code, const char* what) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (!seen.insert(id).second) fail(code, std::string("duplicate ") + what + " '" + id + "'");
    }
}

std::optional<long long> canonical_integer(const std::string& s) {
    if (s.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    // reject "007" and "+7" so distinct strings never compare equal
    if (std::to_string(value) != s) return std::nullopt;
    return value;
}

}  // namespace

std::string_view to_string(Outcome outcome) noexcept {
    return outcome == Outcome::Fail ? "fail" : "pass";
}

CoverageMatrix::CoverageMatrix(std::vector<std::string> run_ids,
                               std::vector<std::string> predicate_ids,
                               std::vector<std::uint8_t> cells)
    : run_ids_(std::move(run_ids)), predicate_ids_(std::move(predicate_ids)), cells_(std::move(cells)) {
    if (cells_.size() != run_ids_.size() * predicate_ids_.size())
        fail(ErrorCode::RaggedRow, "cell count does not match runs x predicates");
    require_unique(run_ids_, ErrorCode::DuplicateRunId, "run id");
    require_unique(predicate_ids_, ErrorCode::DuplicatePredicateId, "predicate id");
    for (auto& c : cells_) c = c != 0 ? 1 : 0;
}

std::optional<std::size_t> CoverageMatrix::predicate_index(const std::string& id) const {
    auto it = std::find(predicate_ids_.begin(), predicate_ids_.end(), id);
    if (it == predicate_ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - predicate_ids_.begin());
}

CoverageMatrix CoverageMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    std::vector<std::uint8_t> cells;
    ids.reserve(rows.size());
    cells.reserve(rows.size() * predicates());
    for (auto r : rows) {
        ids.push_back(run_ids_.at(r));
        auto src = row(r);
        cells.insert(cells.end(), src.begin(), src.end());
    }
    return CoverageMatrix(std::move(ids), predicate_ids_, std::move(cells));
}

OutcomeVector::OutcomeVector(std::vector<std::string> run_ids, std::vector<Outcome> labels)
    : run_ids_(std::move(run_ids)), labels_(std::move(labels)) {
    if (run_ids_.size() != labels_.size())
        fail(ErrorCode::LengthMismatch, "run ids and labels differ in length");
    require_unique(run_ids_, ErrorCode::DuplicateRunId, "run id");
}

std::size_t OutcomeVector::count(Outcome outcome) const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), outcome));
}

std::optional<std::size_t> OutcomeVector::index_of(const std::string& run_id) const {
    auto it = std::find(run_ids_.begin(), run_ids_.end(), run_id);
    if (it == run_ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - run_ids_.begin());
}

std::size_t Dataset::failing() const noexcept {
    return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), Outcome::Fail));
}

OutcomeVector Dataset::outcome_vector() const { return OutcomeVector(matrix.run_ids(), outcomes); }

std::vector<double> Dataset::response() const {
    std::vector<double> y(outcomes.size());
    std::transform(outcomes.begin(), outcomes.end(), y.begin(),
                   [](Outcome o) { return o == Outcome::Fail ? 1.0 : 0.0; });
    return y;
}

void PredicateMap::add(const std::string& predicate_id, PredicateLocation location) {
    if (!entries_.emplace(predicate_id, std::move(location)).second)
        fail(ErrorCode::DuplicatePredicateId, "predicate '" + predicate_id + "' mapped twice");
}

const PredicateLocation& PredicateMap::at(const std::string& predicate_id) const {
    if (const auto* loc = find(predicate_id)) return *loc;
    fail(ErrorCode::UnmappedPredicate, "predicate '" + predicate_id + "' has no location");
}

const PredicateLocation* PredicateMap::find(const std::string& predicate_id) const {
    auto it = entries_.find(predicate_id);
    return it == entries_.end() ? nullptr : &it->second;
}

void PredicateMap::validate_against(const CoverageMatrix& matrix,
                                    const ProgramDependenceGraph* pdg) const {
    for (const auto& id : matrix.predicate_ids()) {
        const auto& loc = at(id);
        if (pdg != nullptr && !pdg->contains(loc.node_id))
            fail(ErrorCode::UnknownNode,
                 "predicate '" + id + "' refers to node '" + loc.node_id + "' not in the PDG");
    }
}

bool NodeIdLess::operator()(const std::string& a, const std::string& b) const {
    auto ia = canonical_integer(a);
    auto ib = canonical_integer(b);
    if (ia && ib) return *ia < *ib;
    if (ia.has_value() != ib.has_value()) return ia.has_value();
    return a < b;
}

ProgramDependenceGraph::ProgramDependenceGraph(std::vector<std::string> nodes,
                                               std::vector<PdgEdge> edges) {
    std::sort(nodes.begin(), nodes.end(), NodeIdLess{});
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    nodes_ = std::move(nodes);

    std::unordered_map<std::string, std::size_t> index;
    index.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) index.emplace(nodes_[i], i);

    auto lookup = [&](const std::string& id) {
        auto it = index.find(id);
        if (it == index.end()) fail(ErrorCode::UnknownNode, "edge endpoint '" + id + "' is not a node");
        return it->second;
    };

    adjacency_.assign(nodes_.size(), {});
    auto edge_less = [](const PdgEdge& x, const PdgEdge& y) {
        NodeIdLess less;
        if (x.from != y.from) return less(x.from, y.from);
        if (x.to != y.to) return less(x.to, y.to);
        return x.kind < y.kind;
    };
    std::sort(edges.begin(), edges.end(), edge_less);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& e : edges) {
        auto u = lookup(e.from);
        auto v = lookup(e.to);
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    edges_ = std::move(edges);
}

bool ProgramDependenceGraph::contains(const std::string& node) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), node, NodeIdLess{});
}

std::size_t ProgramDependenceGraph::index_of(const std::string& node) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node, NodeIdLess{});
    if (it == nodes_.end() || *it != node) fail(ErrorCode::UnknownNode, "node '" + node + "' not in PDG");
    return static_cast<std::size_t>(it - nodes_.begin());
}

void GroundTruth::validate_against(const ProgramDependenceGraph& pdg, const CoverageMatrix& matrix) const {
    if (faulty_nodes.empty() || fault_predicates.empty())
        fail(ErrorCode::InvalidArgument, "ground truth needs at least one faulty node and one fault predicate");
    for (const auto& n : faulty_nodes) pdg.index_of(n);
    for (const auto& p : fault_predicates) {
        if (!matrix.predicate_index(p))
            fail(ErrorCode::UnknownPredicate, "fault predicate '" + p + "' not in coverage matrix");
    }
}

}  // namespace fpa
