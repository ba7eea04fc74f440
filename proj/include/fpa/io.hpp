#pragma once

// File formats:
//   coverage CSV       run_id,<pred>,<pred>,...   (numeric cells, nonzero -> 1)
//   outcomes CSV       run_id,outcome              (pass|fail, case-insensitive)
//   predicate map CSV  predicate_id,module_id,node_id,line
//   PDG JSON           {"nodes":[...],"edges":[{"from":..,"to":..,"kind":"control"|"data"}]}
//   ground truth JSON  {"faulty_nodes":[...],"fault_predicates":[...]}

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fpa/model.hpp"

namespace fpa {

using Json = nlohmann::ordered_json;

namespace csv {

// Splits one line on commas, trimming surrounding whitespace. Quoting is not
// supported; identifiers are expected to be comma-free.
std::vector<std::string> split(std::string_view line);

// Reads the next non-blank line (CR stripped). Returns false at EOF.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no);

}  // namespace csv

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

CoverageMatrix parse_coverage(std::istream& in, const std::string& source = "<stream>");
CoverageMatrix load_coverage(const std::filesystem::path& path);
void write_coverage(std::ostream& out, const CoverageMatrix& matrix);

OutcomeVector parse_outcomes(std::istream& in, const std::string& source = "<stream>");
OutcomeVector load_outcomes(const std::filesystem::path& path);
void write_outcomes(std::ostream& out, const OutcomeVector& outcomes);

// Aligns outcomes to the matrix row order.
Dataset validate_dataset(const CoverageMatrix& matrix, const OutcomeVector& outcomes);

PredicateMap parse_predicate_map(std::istream& in, const std::string& source = "<stream>");
PredicateMap load_predicate_map(const std::filesystem::path& path);
void write_predicate_map(std::ostream& out, const PredicateMap& map);

ProgramDependenceGraph pdg_from_json(const Json& json);
Json to_json(const ProgramDependenceGraph& pdg);
ProgramDependenceGraph load_pdg(const std::filesystem::path& path);

GroundTruth ground_truth_from_json(const Json& json);
Json to_json(const GroundTruth& truth);
GroundTruth load_ground_truth(const std::filesystem::path& path);

Json load_json(const std::filesystem::path& path);
// Two-space indented dump with a trailing newline.
std::string dump_json(const Json& json);

// JSON value for a node id: a number when the id is a canonical integer.
Json node_id_json(const std::string& id);
std::string node_id_from_json(const Json& value);

}  // namespace fpa
