#include "fpa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "fpa/error.hpp"
#include "fpa/io.hpp"

namespace fpa {

namespace {

enum class TokenKind { Operator, Operand, Ignored };

struct Token {
    std::string text;
    TokenKind kind;
    std::size_t line;
};

const std::unordered_set<std::string_view>& operator_keywords() {
    static const std::unordered_set<std::string_view> words{
        "if", "else", "while", "for", "do", "switch", "case", "default",
        "return", "break", "continue", "goto", "sizeof"};
    return words;
}

const std::unordered_set<std::string_view>& declaration_keywords() {
    static const std::unordered_set<std::string_view> words{
        "auto",   "bool",    "char",   "const",    "double",   "enum",     "extern",
        "float",  "inline",  "int",    "long",     "register", "restrict", "short",
        "signed", "static",  "struct", "typedef",  "union",    "unsigned", "void",
        "volatile", "_Bool", "_Complex"};
    return words;
}

constexpr std::array<std::string_view, 24> kMultiCharOperators{
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "##"};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    std::size_t i = 0;
    bool line_start = true;  // only whitespace seen since the last newline
    const std::size_t n = src.size();

    while (i < n) {
        const char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            line_start = true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            i += 2;
            while (i < n && !(src[i] == '*' && i + 1 < n && src[i + 1] == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            i = std::min(n, i + 2);
            continue;
        }
        if (c == '#' && line_start) {
            // preprocessor directive, honouring backslash continuations
            while (i < n && src[i] != '\n') {
                if (src[i] == '\\' && i + 1 < n && src[i + 1] == '\n') {
                    ++line;
                    i += 2;
                    continue;
                }
                ++i;
            }
            continue;
        }
        line_start = false;

        const std::size_t start = i;
        const std::size_t start_line = line;
        if (is_ident_start(c)) {
            while (i < n && is_ident_char(src[i])) ++i;
            std::string word(src.substr(start, i - start));
            if (declaration_keywords().contains(word)) continue;
            const auto kind = operator_keywords().contains(word) ? TokenKind::Operator : TokenKind::Operand;
            tokens.push_back({std::move(word), kind, start_line});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            while (i < n) {
                const char d = src[i];
                if ((d == '+' || d == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E' || src[i - 1] == 'p' ||
                                               src[i - 1] == 'P')) {
                    ++i;
                } else if (is_ident_char(d) || d == '.') {
                    ++i;
                } else {
                    break;
                }
            }
            tokens.push_back({std::string(src.substr(start, i - start)), TokenKind::Operand, start_line});
            continue;
        }
        if (c == '"' || c == '\'') {
            ++i;
            while (i < n && src[i] != c) {
                if (src[i] == '\\' && i + 1 < n) ++i;
                if (src[i] == '\n') ++line;
                ++i;
            }
            i = std::min(n, i + 1);
            tokens.push_back({std::string(src.substr(start, i - start)), TokenKind::Operand, start_line});
            continue;
        }
        if (c == ';' || c == '{' || c == '}' || c == '(' || c == ')' || c == ',') {
            tokens.push_back({std::string(1, c), TokenKind::Ignored, start_line});
            ++i;
            continue;
        }
        std::string_view op;
        for (auto candidate : kMultiCharOperators) {
            if (src.substr(i, candidate.size()) == candidate) {
                op = candidate;
                break;
            }
        }
        if (op.empty()) op = src.substr(i, 1);
        i += op.size();
        tokens.push_back({std::string(op), TokenKind::Operator, start_line});
    }
    return tokens;
}

bool is_punct(const Token& t, char c) { return t.kind == TokenKind::Ignored && t.text[0] == c; }

std::size_t matching_brace(const std::vector<Token>& tokens, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < tokens.size(); ++i) {
        if (is_punct(tokens[i], '{')) ++depth;
        if (is_punct(tokens[i], '}') && --depth == 0) return i;
    }
    fail(ErrorCode::UnbalancedBraces, "line " + std::to_string(tokens[open].line) + ": '{' is never closed");
}

std::string function_name(const std::vector<Token>& tokens, std::size_t close_paren, std::size_t lower_bound) {
    int depth = 0;
    for (std::size_t i = close_paren + 1; i-- > lower_bound;) {
        if (is_punct(tokens[i], ')')) ++depth;
        if (is_punct(tokens[i], '(') && --depth == 0) {
            if (i > lower_bound && tokens[i - 1].kind == TokenKind::Operand && is_ident_start(tokens[i - 1].text[0]))
                return tokens[i - 1].text;
            break;
        }
    }
    return "anonymous@" + std::to_string(tokens[close_paren].line);
}

ModuleMetricsRecord measure(const std::vector<Token>& tokens, std::size_t decl_begin, std::size_t open,
                            std::size_t close) {
    ModuleMetricsRecord rec;
    std::set<std::string> operators, operands;
    long decisions = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
        const auto& t = tokens[i];
        if (t.kind == TokenKind::Operator) {
            ++rec.total_operators;
            operators.insert(t.text);
            if (t.text == "if" || t.text == "while" || t.text == "for" || t.text == "case" || t.text == "&&" ||
                t.text == "||" || t.text == "?")
                ++decisions;
        } else if (t.kind == TokenKind::Operand) {
            ++rec.total_operands;
            operands.insert(t.text);
        }
    }
    rec.distinct_operators = static_cast<long>(operators.size());
    rec.distinct_operands = static_cast<long>(operands.size());
    rec.cyclomatic = 1 + decisions;

    std::set<std::size_t> lines;
    for (std::size_t i = decl_begin; i <= close; ++i) lines.insert(tokens[i].line);
    rec.loc = static_cast<long>(lines.size());
    return rec;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void ModuleMetricsRecord::validate() const {
    auto bad = [&](const std::string& why) { fail(ErrorCode::InvalidArgument, "module '" + module_id + "': " + why); };
    if (loc < 0 || distinct_operators < 0 || distinct_operands < 0 || total_operators < 0 || total_operands < 0 ||
        cyclomatic < 0)
        bad("counts must be non-negative");
    if (distinct_operators > total_operators) bad("n1 exceeds N1");
    if (distinct_operands > total_operands) bad("n2 exceeds N2");
    if (total_operators + total_operands > 0 && cyclomatic < 1) bad("cyclomatic must be >= 1");
}

std::array<double, kMetricCount> DerivedMetrics::values() const {
    return {loc, length, vocabulary, volume, difficulty, level, effort, time, bugs, content, cyclomatic};
}

const std::array<std::string_view, kMetricCount>& metric_names() {
    static const std::array<std::string_view, kMetricCount> names{
        "loc", "length", "vocabulary", "volume", "difficulty", "level",
        "effort", "time", "bugs", "content", "cyclomatic"};
    return names;
}

DerivedMetrics derive_halstead(const ModuleMetricsRecord& r) {
    DerivedMetrics d;
    d.loc = static_cast<double>(r.loc);
    d.cyclomatic = static_cast<double>(r.cyclomatic);
    d.length = static_cast<double>(r.total_operators + r.total_operands);
    d.vocabulary = static_cast<double>(r.distinct_operators + r.distinct_operands);
    if (d.vocabulary < 2.0 || r.distinct_operands == 0) return d;

    d.volume = d.length * std::log2(d.vocabulary);
    d.difficulty = (static_cast<double>(r.distinct_operators) / 2.0) *
                   (static_cast<double>(r.total_operands) / static_cast<double>(r.distinct_operands));
    d.level = d.difficulty > 0.0 ? 1.0 / d.difficulty : 0.0;
    d.effort = d.difficulty * d.volume;
    d.time = d.effort / 18.0;
    d.bugs = d.volume / 3000.0;
    d.content = d.level * d.volume;
    return d;
}

std::vector<ModuleMetricsRecord> extract_metrics(std::string_view source) {
    const auto tokens = tokenize(source);
    std::vector<ModuleMetricsRecord> records;
    std::map<std::string, int> seen;

    std::size_t decl_begin = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const auto& t = tokens[i];
        if (is_punct(t, '}'))
            fail(ErrorCode::UnbalancedBraces, "line " + std::to_string(t.line) + ": unmatched '}'");
        if (is_punct(t, ';')) {
            decl_begin = ++i;
            continue;
        }
        if (!is_punct(t, '{')) {
            ++i;
            continue;
        }
        const std::size_t close = matching_brace(tokens, i);
        if (i > decl_begin && is_punct(tokens[i - 1], ')')) {
            bool empty = true;
            for (std::size_t b = i + 1; b < close && empty; ++b) empty = tokens[b].kind == TokenKind::Ignored;
            auto name = function_name(tokens, i - 1, decl_begin);
            if (empty)
                fail(ErrorCode::EmptyModule,
                     "line " + std::to_string(tokens[i].line) + ": function '" + name + "' has an empty body");
            auto rec = measure(tokens, decl_begin, i, close);
            const int dup = ++seen[name];
            rec.module_id = dup == 1 ? name : name + "#" + std::to_string(dup);
            records.push_back(std::move(rec));
        }
        // struct bodies and initializers are skipped whole
        i = close + 1;
        decl_begin = i;
    }
    return records;
}

std::vector<ModuleMetricsRecord> parse_metrics_csv(std::istream& in, const std::string& source) {
    std::vector<ModuleMetricsRecord> out;
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_line(in, line, line_no)) return out;
    const auto header = csv::split(line);
    const std::array<std::string_view, 7> expected{"module_id", "loc", "n1", "n2", "N1", "N2", "cyclomatic"};
    if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin()))
        fail(ErrorCode::MalformedHeader, source + ": expected 'module_id,loc,n1,n2,N1,N2,cyclomatic'");
    std::set<std::string> ids;
    while (csv::next_line(in, line, line_no)) {
        auto f = csv::split(line);
        if (f.size() != header.size())
            fail(ErrorCode::RaggedRow, source + ":" + std::to_string(line_no) + ": wrong field count");
        ModuleMetricsRecord rec;
        rec.module_id = f[0];
        long* slots[] = {&rec.loc, &rec.distinct_operators, &rec.distinct_operands, &rec.total_operators,
                         &rec.total_operands, &rec.cyclomatic};
        for (std::size_t k = 0; k < 6; ++k) {
            const auto& cell = f[k + 1];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), *slots[k]);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                fail(ErrorCode::NonNumericCell, source + ":" + std::to_string(line_no) + ": '" + cell + "'");
        }
        if (!ids.insert(rec.module_id).second)
            fail(ErrorCode::InvalidArgument, source + ": duplicate module '" + rec.module_id + "'");
        rec.validate();
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ModuleMetricsRecord> load_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    return parse_metrics_csv(in, path.string());
}

void write_metrics_csv(std::ostream& out, const std::vector<ModuleMetricsRecord>& records, bool with_derived) {
    out << "module_id,loc,n1,n2,N1,N2,cyclomatic";
    if (with_derived) {
        for (std::size_t k = 1; k + 1 < kMetricCount; ++k) out << ',' << metric_names()[k];
    }
    out << '\n';
    for (const auto& r : records) {
        out << r.module_id << ',' << r.loc << ',' << r.distinct_operators << ',' << r.distinct_operands << ','
            << r.total_operators << ',' << r.total_operands << ',' << r.cyclomatic;
        if (with_derived) {
            const auto values = derive_halstead(r).values();
            for (std::size_t k = 1; k + 1 < kMetricCount; ++k) out << ',' << format_double(values[k]);
        }
        out << '\n';
    }
}

}  // namespace fpa
