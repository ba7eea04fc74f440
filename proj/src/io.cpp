#include "fpa/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fpa/error.hpp"

namespace fpa {

namespace csv {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
        while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
        fields.emplace_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
}

}  // namespace csv

namespace {

std::string where(const std::string& source, std::size_t line_no) {
    return source + ":" + std::to_string(line_no) + ": ";
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool parse_number(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* first = text.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << contents;
}

CoverageMatrix parse_coverage(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_line(in, line, line_no))
        fail(ErrorCode::MalformedHeader, source + ": empty coverage file");
    auto header = csv::split(line);
    if (header.size() < 2 || lower(header[0]) != "run_id")
        fail(ErrorCode::MalformedHeader, where(source, line_no) + "expected 'run_id,<predicate>,...'");
    std::vector<std::string> predicates(header.begin() + 1, header.end());
    for (const auto& p : predicates) {
        if (p.empty()) fail(ErrorCode::MalformedHeader, where(source, line_no) + "empty predicate id");
    }

    std::vector<std::string> runs;
    std::vector<std::uint8_t> cells;
    while (csv::next_line(in, line, line_no)) {
        auto fields = csv::split(line);
        if (fields.size() != header.size())
            fail(ErrorCode::RaggedRow, where(source, line_no) + std::to_string(fields.size() - 1) +
                                           " cells under a " + std::to_string(predicates.size()) +
                                           "-predicate header");
        runs.push_back(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            double value = 0.0;
            if (!parse_number(fields[j], value))
                fail(ErrorCode::NonNumericCell, where(source, line_no) + "cell '" + fields[j] + "'");
            cells.push_back(value != 0.0 ? 1 : 0);
        }
    }
    return CoverageMatrix(std::move(runs), std::move(predicates), std::move(cells));
}

CoverageMatrix load_coverage(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_coverage(in, path.string());
}

void write_coverage(std::ostream& out, const CoverageMatrix& matrix) {
    out << "run_id";
    for (const auto& p : matrix.predicate_ids()) out << ',' << p;
    out << '\n';
    for (std::size_t i = 0; i < matrix.runs(); ++i) {
        out << matrix.run_ids()[i];
        for (auto c : matrix.row(i)) out << ',' << (c ? '1' : '0');
        out << '\n';
    }
}

OutcomeVector parse_outcomes(std::istream& in, const std::string& source) {
    std::vector<std::string> runs;
    std::vector<Outcome> labels;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (csv::next_line(in, line, line_no)) {
        auto fields = csv::split(line);
        if (fields.size() != 2)
            fail(ErrorCode::RaggedRow, where(source, line_no) + "expected 'run_id,outcome'");
        auto token = lower(fields[1]);
        if (first && lower(fields[0]) == "run_id" && token == "outcome") {
            first = false;
            continue;
        }
        first = false;
        if (token == "pass") {
            labels.push_back(Outcome::Pass);
        } else if (token == "fail") {
            labels.push_back(Outcome::Fail);
        } else {
            fail(ErrorCode::UnknownOutcomeToken, where(source, line_no) + "'" + fields[1] + "'");
        }
        runs.push_back(fields[0]);
    }
    try {
        return OutcomeVector(std::move(runs), std::move(labels));
    } catch (const Error& e) {
        fail(e.code(), source + ": " + e.detail());
    }
}

OutcomeVector load_outcomes(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_outcomes(in, path.string());
}

void write_outcomes(std::ostream& out, const OutcomeVector& outcomes) {
    out << "run_id,outcome\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        out << outcomes.run_ids()[i] << ',' << to_string(outcomes[i]) << '\n';
}

Dataset validate_dataset(const CoverageMatrix& matrix, const OutcomeVector& outcomes) {
    std::unordered_map<std::string, Outcome> by_run;
    for (std::size_t i = 0; i < outcomes.size(); ++i) by_run.emplace(outcomes.run_ids()[i], outcomes[i]);

    std::vector<std::string> missing;
    std::vector<Outcome> aligned;
    aligned.reserve(matrix.runs());
    for (const auto& run : matrix.run_ids()) {
        auto it = by_run.find(run);
        if (it == by_run.end()) {
            missing.push_back(run);
            continue;
        }
        aligned.push_back(it->second);
    }
    if (!missing.empty() || outcomes.size() != matrix.runs()) {
        std::string msg = "coverage and outcomes cover different runs";
        if (!missing.empty()) msg += "; no outcome for '" + missing.front() + "'";
        if (missing.size() > 1) msg += " and " + std::to_string(missing.size() - 1) + " more";
        fail(ErrorCode::RunSetMismatch, msg);
    }
    Dataset ds{matrix, std::move(aligned)};
    if (ds.failing() == 0) fail(ErrorCode::NoFailingRuns, "all runs pass; there is no failure to localize");
    return ds;
}

PredicateMap parse_predicate_map(std::istream& in, const std::string& source) {
    PredicateMap map;
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_line(in, line, line_no)) return map;
    auto header = csv::split(line);
    if (header.size() != 4 || lower(header[0]) != "predicate_id")
        fail(ErrorCode::MalformedHeader, where(source, line_no) + "expected 'predicate_id,module_id,node_id,line'");
    while (csv::next_line(in, line, line_no)) {
        auto f = csv::split(line);
        if (f.size() != 4) fail(ErrorCode::RaggedRow, where(source, line_no) + "expected 4 fields");
        long line_value = 0;
        auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), line_value);
        if (ec != std::errc() || ptr != f[3].data() + f[3].size())
            fail(ErrorCode::NonNumericCell, where(source, line_no) + "line '" + f[3] + "'");
        map.add(f[0], PredicateLocation{f[1], f[2], line_value});
    }
    return map;
}

PredicateMap load_predicate_map(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_predicate_map(in, path.string());
}

void write_predicate_map(std::ostream& out, const PredicateMap& map) {
    out << "predicate_id,module_id,node_id,line\n";
    for (const auto& [id, loc] : map.entries())
        out << id << ',' << loc.module_id << ',' << loc.node_id << ',' << loc.line << '\n';
}

Json node_id_json(const std::string& id) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), v);
    if (!id.empty() && ec == std::errc() && ptr == id.data() + id.size() && std::to_string(v) == id)
        return Json(v);
    return Json(id);
}

std::string node_id_from_json(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    fail(ErrorCode::MalformedJson, "node ids must be strings or integers, got " + value.dump());
}

ProgramDependenceGraph pdg_from_json(const Json& json) {
    if (!json.is_object() || !json.contains("nodes") || !json["nodes"].is_array())
        fail(ErrorCode::MalformedJson, "PDG must be an object with a 'nodes' array");
    std::vector<std::string> nodes;
    for (const auto& n : json["nodes"]) nodes.push_back(node_id_from_json(n));
    std::vector<PdgEdge> edges;
    if (json.contains("edges")) {
        if (!json["edges"].is_array()) fail(ErrorCode::MalformedJson, "'edges' must be an array");
        for (const auto& e : json["edges"]) {
            if (!e.is_object() || !e.contains("from") || !e.contains("to"))
                fail(ErrorCode::MalformedJson, "edge needs 'from' and 'to': " + e.dump());
            EdgeKind kind = EdgeKind::Control;
            if (e.contains("kind")) {
                auto k = lower(e["kind"].get<std::string>());
                if (k == "data") {
                    kind = EdgeKind::Data;
                } else if (k != "control") {
                    fail(ErrorCode::MalformedJson, "edge kind must be 'control' or 'data': " + e.dump());
                }
            }
            edges.push_back({node_id_from_json(e["from"]), node_id_from_json(e["to"]), kind});
        }
    }
    return ProgramDependenceGraph(std::move(nodes), std::move(edges));
}

Json to_json(const ProgramDependenceGraph& pdg) {
    Json nodes = Json::array();
    for (const auto& n : pdg.nodes()) nodes.push_back(node_id_json(n));
    Json edges = Json::array();
    for (const auto& e : pdg.edges()) {
        edges.push_back({{"from", node_id_json(e.from)},
                         {"to", node_id_json(e.to)},
                         {"kind", e.kind == EdgeKind::Data ? "data" : "control"}});
    }
    return Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

ProgramDependenceGraph load_pdg(const std::filesystem::path& path) { return pdg_from_json(load_json(path)); }

GroundTruth ground_truth_from_json(const Json& json) {
    if (!json.is_object()) fail(ErrorCode::MalformedJson, "ground truth must be a JSON object");
    GroundTruth truth;
    for (const char* key : {"faulty_nodes", "fault_predicates"}) {
        if (!json.contains(key) || !json[key].is_array())
            fail(ErrorCode::MalformedJson, std::string("ground truth needs a '") + key + "' array");
    }
    for (const auto& n : json["faulty_nodes"]) truth.faulty_nodes.insert(node_id_from_json(n));
    for (const auto& p : json["fault_predicates"]) {
        if (!p.is_string()) fail(ErrorCode::MalformedJson, "fault predicate ids must be strings");
        truth.fault_predicates.insert(p.get<std::string>());
    }
    return truth;
}

Json to_json(const GroundTruth& truth) {
    // keep faulty nodes in graph order rather than std::string order
    std::vector<std::string> nodes(truth.faulty_nodes.begin(), truth.faulty_nodes.end());
    std::sort(nodes.begin(), nodes.end(), NodeIdLess{});
    Json faulty = Json::array();
    for (const auto& n : nodes) faulty.push_back(node_id_json(n));
    Json preds = Json::array();
    for (const auto& p : truth.fault_predicates) preds.push_back(p);
    return Json{{"faulty_nodes", std::move(faulty)}, {"fault_predicates", std::move(preds)}};
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    return ground_truth_from_json(load_json(path));
}

Json load_json(const std::filesystem::path& path) {
    auto text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedJson, path.string() + ": " + e.what());
    }
}

std::string dump_json(const Json& json) { return json.dump(2) + "\n"; }

}  // namespace fpa
