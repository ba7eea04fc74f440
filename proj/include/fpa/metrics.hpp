#pragma once

// Lexical extraction of size and complexity metrics from C-like source.
//
// Token classification (fixed, no preprocessor):
//   operators  punctuation/operator tokens (`=`, `+`, `->`, `[`, `]`, ...) and
//              statement keywords (if, else, while, for, do, switch, case,
//              default, return, break, continue, goto, sizeof)
//   operands   identifiers, numeric/string/char literals
//   ignored    `;` `{` `}` `(` `)` `,`, declaration keywords (int, struct,
//              const, static, ...), comments and preprocessor lines
//
// A module is a function definition: a top-level `{` whose preceding token is
// `)`. Halstead counts cover the body between the braces; loc counts
// non-blank, non-comment lines from the start of the declaration to the
// closing brace; cyclomatic = 1 + #(if, while, for, case, &&, ||, ?).

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fpa {

struct ModuleMetricsRecord {
    std::string module_id;
    long loc = 0;
    long distinct_operators = 0;  // n1
    long distinct_operands = 0;   // n2
    long total_operators = 0;     // N1
    long total_operands = 0;      // N2
    long cyclomatic = 1;

    void validate() const;  // throws InvalidArgument

    friend bool operator==(const ModuleMetricsRecord&, const ModuleMetricsRecord&) = default;
};

inline constexpr std::size_t kMetricCount = 11;

// The eleven static metrics in a fixed order (see metric_names()).
struct DerivedMetrics {
    double loc = 0;
    double length = 0;      // N = N1 + N2
    double vocabulary = 0;  // n = n1 + n2
    double volume = 0;      // N log2 n
    double difficulty = 0;  // (n1 / 2) (N2 / n2)
    double level = 0;       // 1 / D
    double effort = 0;      // D V
    double time = 0;        // E / 18
    double bugs = 0;        // V / 3000
    double content = 0;     // L V
    double cyclomatic = 0;

    std::array<double, kMetricCount> values() const;
};

const std::array<std::string_view, kMetricCount>& metric_names();

// Records with n < 2 or n2 = 0 get all volume-derived metrics (and level) set
// to zero; level is also zero whenever difficulty is zero.
DerivedMetrics derive_halstead(const ModuleMetricsRecord& record);

std::vector<ModuleMetricsRecord> extract_metrics(std::string_view source);

// CSV: module_id,loc,n1,n2,N1,N2,cyclomatic. Extra columns are ignored on read.
std::vector<ModuleMetricsRecord> parse_metrics_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<ModuleMetricsRecord> load_metrics_csv(const std::filesystem::path& path);
// `with_derived` appends the nine Halstead columns after cyclomatic.
void write_metrics_csv(std::ostream& out, const std::vector<ModuleMetricsRecord>& records,
                       bool with_derived = false);

}  // namespace fpa
