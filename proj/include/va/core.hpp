#pragma once

// Shared domain types for verbal-autopsy cause assignment: the physician
// conditional-probability matrix, per-death symptom indicators, CSMF
// vectors, letter-grade decoding, and consistency checks on the matrix.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace va {

using CauseIndex = std::uint32_t;

// ---------------------------------------------------------------------------
// Letter grades
// ---------------------------------------------------------------------------

struct LetterGrade {
    std::string_view label;
    double value;
};

inline constexpr std::size_t kGradeCount = 15;

// Grades in rank order, most to least likely. Repeated letters of the
// original scale are split into "+", plain and "-" sub-grades.
inline constexpr std::array<LetterGrade, kGradeCount> kGrades{{
    {"I", 1.0},     {"A+", 0.8},    {"A", 0.5},      {"A-", 0.2},    {"B+", 0.1},
    {"B", 0.05},    {"B-", 0.02},   {"C+", 0.01},    {"C", 0.005},   {"C-", 0.002},
    {"D+", 0.001},  {"D", 0.0005},  {"D-", 0.0001},  {"E", 0.00001}, {"N", 0.0},
}};

// Accepts ASCII '-' or U+2212 for the minus sub-grade; surrounding
// whitespace is ignored. Throws UnknownLabelError.
double decode_letter(std::string_view label);

// Rank (0 = "I") of a label, or of a value exactly equal to a grade value.
std::size_t grade_index(std::string_view label);
std::optional<std::size_t> grade_index_of_value(double value);

// Inverse of decode_letter for exact grade values. Throws InvariantError.
std::string_view encode_letter(double value);

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

// K x N matrix of Pr(symptom k | cause n). Rows are symptoms.
class CondProbMatrix {
public:
    CondProbMatrix() = default;
    // Throws InvariantError when an entry leaves [0,1], N < 2, names repeat,
    // or shapes disagree. K = 0 is allowed for programmatic construction.
    CondProbMatrix(std::vector<double> entries, std::vector<std::string> symptom_names,
                   std::vector<std::string> cause_names);

    std::size_t symptoms() const noexcept { return symptom_names_.size(); }
    std::size_t causes() const noexcept { return cause_names_.size(); }

    double operator()(std::size_t k, std::size_t n) const { return entries_[k * causes() + n]; }
    std::span<const double> row(std::size_t k) const {
        return {entries_.data() + k * causes(), causes()};
    }
    std::span<const double> entries() const noexcept { return entries_; }

    const std::vector<std::string>& symptom_names() const noexcept { return symptom_names_; }
    const std::vector<std::string>& cause_names() const noexcept { return cause_names_; }

    std::optional<std::size_t> symptom_index(std::string_view name) const;

    bool operator==(const CondProbMatrix&) const = default;

private:
    std::vector<double> entries_;
    std::vector<std::string> symptom_names_;
    std::vector<std::string> cause_names_;
};

inline constexpr std::int8_t kMissing = -1;

// J x K indicator matrix; entries are 0, 1 or kMissing.
class SymptomMatrix {
public:
    SymptomMatrix() = default;
    SymptomMatrix(std::vector<std::int8_t> entries, std::vector<std::string> death_ids,
                  std::vector<std::string> symptom_names);

    std::size_t deaths() const noexcept { return death_ids_.size(); }
    std::size_t symptoms() const noexcept { return symptom_names_.size(); }

    std::int8_t operator()(std::size_t j, std::size_t k) const { return entries_[j * symptoms() + k]; }
    std::span<const std::int8_t> row(std::size_t j) const {
        return {entries_.data() + j * symptoms(), symptoms()};
    }
    std::span<const std::int8_t> entries() const noexcept { return entries_; }

    const std::vector<std::string>& death_ids() const noexcept { return death_ids_; }
    const std::vector<std::string>& symptom_names() const noexcept { return symptom_names_; }

    std::size_t missing_count(std::size_t j) const;

    // Same data with columns reordered to match `names`. Throws
    // DimensionError when the name sets differ.
    SymptomMatrix aligned_to(const std::vector<std::string>& names) const;

    bool operator==(const SymptomMatrix&) const = default;

private:
    std::vector<std::int8_t> entries_;
    std::vector<std::string> death_ids_;
    std::vector<std::string> symptom_names_;
};

// Cause-specific mortality fractions: a point on the probability simplex.
class Csmf {
public:
    static constexpr double kSimplexTolerance = 1e-9;

    Csmf() = default;
    // Throws InvariantError if any fraction is negative or non-finite, the
    // sum is off 1 by more than kSimplexTolerance, or sizes disagree.
    Csmf(std::vector<double> fractions, std::vector<std::string> cause_names);

    static Csmf uniform(std::vector<std::string> cause_names);
    // Scales non-negative weights onto the simplex.
    static Csmf normalized(std::vector<double> weights, std::vector<std::string> cause_names);

    std::size_t size() const noexcept { return fractions_.size(); }
    double operator[](std::size_t n) const { return fractions_[n]; }
    std::span<const double> fractions() const noexcept { return fractions_; }
    const std::vector<std::string>& cause_names() const noexcept { return cause_names_; }

    bool operator==(const Csmf&) const = default;

private:
    std::vector<double> fractions_;
    std::vector<std::string> cause_names_;
};

// ---------------------------------------------------------------------------
// Consistency constraints on P
// ---------------------------------------------------------------------------

struct Constraint {
    enum class Kind { sum_equals, less_eq };
    Kind kind = Kind::sum_equals;
    // sum_equals: sum of lhs == rhs. less_eq: lhs[0] <= rhs.
    std::vector<std::string> lhs;
    std::string rhs;
    // Cause columns the constraint applies to; empty means all.
    std::vector<std::string> causes;

    std::string to_string() const;
};

using ConstraintSet = std::vector<Constraint>;

struct Violation {
    std::size_t constraint_index = 0;
    std::string constraint;
    std::string cause;
    std::vector<double> observed;  // lhs values followed by rhs value
    double residual = 0.0;         // |sum - rhs| or (lhs - rhs)
};

inline constexpr double kDefaultValidationTolerance = 1e-9;

// Checks every constraint against every cause in its scope. SumEquals is
// violated when |sum(lhs) - rhs| > tol, LessEq when lhs > rhs + tol.
// Throws UnknownSymptomError for names absent from p.
std::vector<Violation> validate_cond_prob_matrix(const CondProbMatrix& p, const ConstraintSet& constraints,
                                                 double tol = kDefaultValidationTolerance);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

enum class ProbEncoding { letters, numeric };

// Delimited text (comma or tab, detected from the header line). First row
// holds a corner cell then cause names; each further row is a symptom name
// followed by N cells. Throws ParseError (with line/column) or
// InvariantError.
CondProbMatrix load_cond_prob_matrix(std::istream& in, ProbEncoding mode);
CondProbMatrix load_cond_prob_matrix_file(const std::string& path, ProbEncoding mode);
// Numeric mode, shortest round-trip decimal representation, comma-delimited.
void write_cond_prob_matrix(std::ostream& out, const CondProbMatrix& p);

// First row: corner cell then symptom names. Rows: death ID then cells in
// {0, 1, .}; "." marks a missing answer.
SymptomMatrix load_symptom_matrix(std::istream& in);
SymptomMatrix load_symptom_matrix_file(const std::string& path);
void write_symptom_matrix(std::ostream& out, const SymptomMatrix& s);

// Two columns: cause name, fraction. An optional header row is skipped.
Csmf load_csmf(std::istream& in);
Csmf load_csmf_file(const std::string& path);
void write_csmf(std::ostream& out, const Csmf& f);

// One constraint per line: "SUM a b = d" or "LEQ a d". Blank lines and
// lines starting with '#' are ignored.
ConstraintSet load_constraints(std::istream& in);
ConstraintSet load_constraints_file(const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace va
