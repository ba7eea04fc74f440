#pragma once

// Canonical value types shared by every stage of the localization pipeline.
// All types validate their invariants on construction and are immutable
// afterwards, so they can be shared read-only across threads.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fpa {

enum class Outcome : std::uint8_t { Pass = 0, Fail = 1 };

std::string_view to_string(Outcome outcome) noexcept;

// Binary runs x predicates matrix, row-major. A cell is 1 when the predicate
// was observed (covered / true) in that run.
class CoverageMatrix {
public:
    CoverageMatrix() = default;
    CoverageMatrix(std::vector<std::string> run_ids, std::vector<std::string> predicate_ids,
                   std::vector<std::uint8_t> cells);

    std::size_t runs() const noexcept { return run_ids_.size(); }
    std::size_t predicates() const noexcept { return predicate_ids_.size(); }

    std::uint8_t operator()(std::size_t run, std::size_t predicate) const noexcept {
        return cells_[run * predicate_ids_.size() + predicate];
    }
    std::span<const std::uint8_t> row(std::size_t run) const noexcept {
        return {cells_.data() + run * predicate_ids_.size(), predicate_ids_.size()};
    }

    const std::vector<std::string>& run_ids() const noexcept { return run_ids_; }
    const std::vector<std::string>& predicate_ids() const noexcept { return predicate_ids_; }
    const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

    std::optional<std::size_t> predicate_index(const std::string& id) const;

    CoverageMatrix select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const CoverageMatrix&, const CoverageMatrix&) = default;

private:
    std::vector<std::string> run_ids_;
    std::vector<std::string> predicate_ids_;
    std::vector<std::uint8_t> cells_;
};

// Per-run PASS/FAIL labels keyed by run id, in file order.
class OutcomeVector {
public:
    OutcomeVector() = default;
    OutcomeVector(std::vector<std::string> run_ids, std::vector<Outcome> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& run_ids() const noexcept { return run_ids_; }
    const std::vector<Outcome>& labels() const noexcept { return labels_; }
    Outcome operator[](std::size_t i) const noexcept { return labels_[i]; }

    std::size_t count(Outcome outcome) const noexcept;
    std::optional<std::size_t> index_of(const std::string& run_id) const;

    friend bool operator==(const OutcomeVector&, const OutcomeVector&) = default;

private:
    std::vector<std::string> run_ids_;
    std::vector<Outcome> labels_;
};

// A coverage matrix with outcomes aligned to its row order. Only produced by
// validate_dataset(), which guarantees at least one failing run.
struct Dataset {
    CoverageMatrix matrix;
    std::vector<Outcome> outcomes;

    std::size_t runs() const noexcept { return matrix.runs(); }
    std::size_t predicates() const noexcept { return matrix.predicates(); }
    std::size_t failing() const noexcept;
    std::size_t passing() const noexcept { return runs() - failing(); }

    OutcomeVector outcome_vector() const;
    // y_i = 1 for FAIL, 0 for PASS.
    std::vector<double> response() const;
};

struct PredicateLocation {
    std::string module_id;
    std::string node_id;
    long line = 0;

    friend bool operator==(const PredicateLocation&, const PredicateLocation&) = default;
};

class ProgramDependenceGraph;

class PredicateMap {
public:
    void add(const std::string& predicate_id, PredicateLocation location);

    const PredicateLocation& at(const std::string& predicate_id) const;
    const PredicateLocation* find(const std::string& predicate_id) const;
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<std::string, PredicateLocation>& entries() const noexcept { return entries_; }

    // Every predicate of `matrix` must be mapped; node ids must exist in `pdg`.
    void validate_against(const CoverageMatrix& matrix, const ProgramDependenceGraph* pdg) const;

    friend bool operator==(const PredicateMap&, const PredicateMap&) = default;

private:
    std::map<std::string, PredicateLocation> entries_;
};

// Orders node ids numerically when both are canonical integers, integers
// before other ids, and lexicographically otherwise.
struct NodeIdLess {
    bool operator()(const std::string& a, const std::string& b) const;
};

enum class EdgeKind : std::uint8_t { Control, Data };

struct PdgEdge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::Control;

    friend bool operator==(const PdgEdge&, const PdgEdge&) = default;
};

class ProgramDependenceGraph {
public:
    ProgramDependenceGraph() = default;
    ProgramDependenceGraph(std::vector<std::string> nodes, std::vector<PdgEdge> edges);

    std::size_t size() const noexcept { return nodes_.size(); }
    // Sorted by NodeIdLess; position is the node's dense index.
    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const std::vector<PdgEdge>& edges() const noexcept { return edges_; }

    bool contains(const std::string& node) const;
    std::size_t index_of(const std::string& node) const;  // throws UnknownNode
    // Undirected neighbourhood (edge kind ignored), ascending indices.
    std::span<const std::size_t> neighbors(std::size_t index) const noexcept {
        return {adjacency_[index].data(), adjacency_[index].size()};
    }

private:
    std::vector<std::string> nodes_;
    std::vector<PdgEdge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

struct GroundTruth {
    std::set<std::string> faulty_nodes;
    std::set<std::string> fault_predicates;

    void validate_against(const ProgramDependenceGraph& pdg, const CoverageMatrix& matrix) const;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace fpa
