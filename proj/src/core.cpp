#include "va/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "text_io.hpp"
#include "va/errors.hpp"

namespace va {

using detail::read_table;
using detail::trim;

// ---------------------------------------------------------------------------
// Letter grades

namespace {

std::string normalize_label(std::string_view label) {
    std::string out(trim(label));
    // U+2212 MINUS SIGN in UTF-8
    static constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";
    if (const auto pos = out.find(kUnicodeMinus); pos != std::string::npos)
        out.replace(pos, kUnicodeMinus.size(), "-");
    return out;
}

}  // namespace

std::size_t grade_index(std::string_view label) {
    const std::string key = normalize_label(label);
    for (std::size_t i = 0; i < kGrades.size(); ++i)
        if (kGrades[i].label == key) return i;
    throw UnknownLabelError(std::string(label));
}

double decode_letter(std::string_view label) { return kGrades[grade_index(label)].value; }

std::optional<std::size_t> grade_index_of_value(double value) {
    for (std::size_t i = 0; i < kGrades.size(); ++i)
        if (kGrades[i].value == value) return i;
    return std::nullopt;
}

std::string_view encode_letter(double value) {
    if (const auto idx = grade_index_of_value(value)) return kGrades[*idx].label;
    throw InvariantError("value " + format_double(value) + " is not a grade value");
}

// ---------------------------------------------------------------------------
// Number formatting

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
        throw ParseError("not a number: '" + std::string(text) + "'");
    return v;
}

// ---------------------------------------------------------------------------
// Types

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
    std::set<std::string_view> seen;
    for (const auto& n : names) {
        if (n.empty()) throw InvariantError(std::string("empty ") + what + " name");
        if (!seen.insert(n).second) throw InvariantError(std::string("duplicate ") + what + " name '" + n + "'");
    }
}

}  // namespace

CondProbMatrix::CondProbMatrix(std::vector<double> entries, std::vector<std::string> symptom_names,
                               std::vector<std::string> cause_names)
    : entries_(std::move(entries)),
      symptom_names_(std::move(symptom_names)),
      cause_names_(std::move(cause_names)) {
    if (cause_names_.size() < 2) throw InvariantError("conditional probability matrix needs at least 2 causes");
    if (entries_.size() != symptom_names_.size() * cause_names_.size())
        throw InvariantError("conditional probability matrix: entry count does not match K x N");
    require_unique(symptom_names_, "symptom");
    require_unique(cause_names_, "cause");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const double v = entries_[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw InvariantError("probability " + format_double(v) + " out of [0,1] at symptom '" +
                                 symptom_names_[i / causes()] + "', cause '" + cause_names_[i % causes()] + "'");
    }
}

std::optional<std::size_t> CondProbMatrix::symptom_index(std::string_view name) const {
    const auto it = std::find(symptom_names_.begin(), symptom_names_.end(), name);
    if (it == symptom_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - symptom_names_.begin());
}

SymptomMatrix::SymptomMatrix(std::vector<std::int8_t> entries, std::vector<std::string> death_ids,
                             std::vector<std::string> symptom_names)
    : entries_(std::move(entries)), death_ids_(std::move(death_ids)), symptom_names_(std::move(symptom_names)) {
    if (entries_.size() != death_ids_.size() * symptom_names_.size())
        throw InvariantError("symptom matrix: entry count does not match J x K");
    require_unique(death_ids_, "death ID");
    require_unique(symptom_names_, "symptom");
    for (auto v : entries_)
        if (v != 0 && v != 1 && v != kMissing) throw InvariantError("symptom entries must be 0, 1 or missing");
}

std::size_t SymptomMatrix::missing_count(std::size_t j) const {
    const auto r = row(j);
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), kMissing));
}

SymptomMatrix SymptomMatrix::aligned_to(const std::vector<std::string>& names) const {
    if (names == symptom_names_) return *this;
    if (names.size() != symptom_names_.size())
        throw DimensionError("symptom matrix has " + std::to_string(symptom_names_.size()) +
                             " symptoms, expected " + std::to_string(names.size()));
    std::unordered_map<std::string_view, std::size_t> position;
    for (std::size_t k = 0; k < symptom_names_.size(); ++k) position.emplace(symptom_names_[k], k);
    std::vector<std::size_t> source(names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto it = position.find(names[k]);
        if (it == position.end()) throw DimensionError("symptom '" + names[k] + "' missing from symptom matrix");
        source[k] = it->second;
    }
    std::vector<std::int8_t> out(entries_.size());
    const std::size_t kk = symptoms();
    for (std::size_t j = 0; j < deaths(); ++j)
        for (std::size_t k = 0; k < kk; ++k) out[j * kk + k] = entries_[j * kk + source[k]];
    return SymptomMatrix(std::move(out), death_ids_, names);
}

Csmf::Csmf(std::vector<double> fractions, std::vector<std::string> cause_names)
    : fractions_(std::move(fractions)), cause_names_(std::move(cause_names)) {
    if (fractions_.size() != cause_names_.size()) throw InvariantError("CSMF: fraction/name count mismatch");
    if (fractions_.empty()) throw InvariantError("CSMF: no causes");
    require_unique(cause_names_, "cause");
    double total = 0.0;
    for (double f : fractions_) {
        if (!std::isfinite(f) || f < 0.0) throw InvariantError("CSMF: negative or non-finite fraction");
        total += f;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
        throw InvariantError("CSMF: fractions sum to " + format_double(total) + ", not 1");
}

Csmf Csmf::uniform(std::vector<std::string> cause_names) {
    const std::size_t n = cause_names.size();
    return Csmf(std::vector<double>(n, 1.0 / static_cast<double>(n)), std::move(cause_names));
}

Csmf Csmf::normalized(std::vector<double> weights, std::vector<std::string> cause_names) {
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw InvariantError("CSMF weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvariantError("CSMF weights sum to zero");
    for (double& w : weights) w /= total;
    return Csmf(std::move(weights), std::move(cause_names));
}

// ---------------------------------------------------------------------------
// Constraints

std::string Constraint::to_string() const {
    std::string out = kind == Kind::sum_equals ? "SUM" : "LEQ";
    for (const auto& s : lhs) out += " " + s;
    out += kind == Kind::sum_equals ? " = " : " ";
    out += rhs;
    return out;
}

std::vector<Violation> validate_cond_prob_matrix(const CondProbMatrix& p, const ConstraintSet& constraints,
                                                 double tol) {
    auto lookup = [&](const std::string& name) {
        const auto k = p.symptom_index(name);
        if (!k) throw UnknownSymptomError("constraint references unknown symptom '" + name + "'");
        return *k;
    };
    auto cause_lookup = [&](const std::string& name) {
        const auto& names = p.cause_names();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw UnknownSymptomError("constraint references unknown cause '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    };

    std::vector<Violation> report;
    for (std::size_t c = 0; c < constraints.size(); ++c) {
        const auto& con = constraints[c];
        if (con.lhs.empty()) throw InvariantError("constraint with empty left-hand side");
        if (con.kind == Constraint::Kind::less_eq && con.lhs.size() != 1)
            throw InvariantError("LEQ constraint takes exactly one left-hand symptom");
        std::vector<std::size_t> lhs_idx;
        for (const auto& s : con.lhs) lhs_idx.push_back(lookup(s));
        const std::size_t rhs_idx = lookup(con.rhs);

        std::vector<std::size_t> scope;
        if (con.causes.empty()) {
            for (std::size_t n = 0; n < p.causes(); ++n) scope.push_back(n);
        } else {
            for (const auto& name : con.causes) scope.push_back(cause_lookup(name));
        }

        for (const std::size_t n : scope) {
            Violation v;
            double lhs_total = 0.0;
            for (const auto k : lhs_idx) {
                v.observed.push_back(p(k, n));
                lhs_total += p(k, n);
            }
            const double rhs = p(rhs_idx, n);
            v.observed.push_back(rhs);
            bool violated = false;
            if (con.kind == Constraint::Kind::sum_equals) {
                v.residual = std::abs(lhs_total - rhs);
                violated = v.residual > tol;
            } else {
                v.residual = lhs_total - rhs;
                violated = v.residual > tol;
            }
            if (!violated) continue;
            v.constraint_index = c;
            v.constraint = con.to_string();
            v.cause = p.cause_names()[n];
            report.push_back(std::move(v));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::string location(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

template <class F>
auto open_and(const std::string& path, F&& load) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return load(in);
}

}  // namespace

CondProbMatrix load_cond_prob_matrix(std::istream& in, ProbEncoding mode) {
    const auto rows = read_table(in);
    if (rows.empty()) throw ParseError("conditional probability file is empty");
    const auto& header = rows.front();
    if (header.cells.size() < 3)
        throw ParseError("conditional probability header needs a corner cell and at least 2 causes (" +
                         location(header.line, 1) + ")");
    std::vector<std::string> causes(header.cells.begin() + 1, header.cells.end());
    const std::size_t n_causes = causes.size();
    if (rows.size() < 2) throw ParseError("conditional probability file has no symptom rows");

    std::vector<std::string> symptoms;
    std::vector<double> entries;
    entries.reserve((rows.size() - 1) * n_causes);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.cells.size() != n_causes + 1)
            throw ParseError("expected " + std::to_string(n_causes + 1) + " cells, found " +
                             std::to_string(row.cells.size()) + " (" + location(row.line, 1) + ")");
        symptoms.push_back(row.cells[0]);
        for (std::size_t c = 1; c < row.cells.size(); ++c) {
            const auto& cell = row.cells[c];
            double v = 0.0;
            try {
                v = mode == ProbEncoding::letters ? decode_letter(cell) : parse_double(cell);
            } catch (const UnknownLabelError& e) {
                throw UnknownLabelError(e.label(), location(row.line, c + 1));
            } catch (const ParseError& e) {
                throw ParseError(std::string(e.what()) + " (" + location(row.line, c + 1) + ")");
            }
            if (!(v >= 0.0 && v <= 1.0))
                throw InvariantError("probability " + cell + " out of [0,1] (" + location(row.line, c + 1) + ")");
            entries.push_back(v);
        }
    }
    return CondProbMatrix(std::move(entries), std::move(symptoms), std::move(causes));
}

CondProbMatrix load_cond_prob_matrix_file(const std::string& path, ProbEncoding mode) {
    return open_and(path, [&](std::istream& in) { return load_cond_prob_matrix(in, mode); });
}

void write_cond_prob_matrix(std::ostream& out, const CondProbMatrix& p) {
    out << "symptom";
    for (const auto& c : p.cause_names()) out << ',' << c;
    out << '\n';
    for (std::size_t k = 0; k < p.symptoms(); ++k) {
        out << p.symptom_names()[k];
        for (double v : p.row(k)) out << ',' << format_double(v);
        out << '\n';
    }
}

SymptomMatrix load_symptom_matrix(std::istream& in) {
    const auto rows = read_table(in);
    if (rows.empty()) throw ParseError("symptom file is empty");
    const auto& header = rows.front();
    std::vector<std::string> symptoms(header.cells.begin() + 1, header.cells.end());
    const std::size_t k_count = symptoms.size();
    if (rows.size() < 2) throw ParseError("symptom file has no death rows");

    std::vector<std::string> ids;
    std::vector<std::int8_t> entries;
    entries.reserve((rows.size() - 1) * k_count);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.cells.size() != k_count + 1)
            throw ParseError("expected " + std::to_string(k_count + 1) + " cells, found " +
                             std::to_string(row.cells.size()) + " (" + location(row.line, 1) + ")");
        ids.push_back(row.cells[0]);
        for (std::size_t c = 1; c < row.cells.size(); ++c) {
            const auto& cell = row.cells[c];
            if (cell == "1") entries.push_back(1);
            else if (cell == "0") entries.push_back(0);
            else if (cell == ".") entries.push_back(kMissing);
            else throw ParseError("symptom cell '" + cell + "' is not 0, 1 or . (" + location(row.line, c + 1) + ")");
        }
    }
    return SymptomMatrix(std::move(entries), std::move(ids), std::move(symptoms));
}

SymptomMatrix load_symptom_matrix_file(const std::string& path) {
    return open_and(path, [](std::istream& in) { return load_symptom_matrix(in); });
}

void write_symptom_matrix(std::ostream& out, const SymptomMatrix& s) {
    out << "id";
    for (const auto& name : s.symptom_names()) out << ',' << name;
    out << '\n';
    for (std::size_t j = 0; j < s.deaths(); ++j) {
        out << s.death_ids()[j];
        for (auto v : s.row(j)) out << ',' << (v == kMissing ? "." : v == 1 ? "1" : "0");
        out << '\n';
    }
}

Csmf load_csmf(std::istream& in) {
    const auto rows = read_table(in);
    if (rows.empty()) throw ParseError("CSMF file is empty");
    std::vector<std::string> names;
    std::vector<double> fractions;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.cells.size() != 2)
            throw ParseError("CSMF rows need 2 cells (" + location(row.line, 1) + ")");
        double v = 0.0;
        try {
            v = parse_double(row.cells[1]);
        } catch (const ParseError& e) {
            if (r == 0) continue;  // header
            throw ParseError(std::string(e.what()) + " (" + location(row.line, 2) + ")");
        }
        names.push_back(row.cells[0]);
        fractions.push_back(v);
    }
    if (names.empty()) throw ParseError("CSMF file has no rows");
    return Csmf(std::move(fractions), std::move(names));
}

Csmf load_csmf_file(const std::string& path) {
    return open_and(path, [](std::istream& in) { return load_csmf(in); });
}

void write_csmf(std::ostream& out, const Csmf& f) {
    out << "cause,fraction\n";
    for (std::size_t n = 0; n < f.size(); ++n) out << f.cause_names()[n] << ',' << format_double(f[n]) << '\n';
}

ConstraintSet load_constraints(std::istream& in) {
    ConstraintSet out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        std::istringstream words{std::string(text)};
        std::vector<std::string> tok;
        for (std::string w; words >> w;) tok.push_back(w);
        const auto bad = [&](const std::string& why) {
            return ParseError("constraint " + why + " (line " + std::to_string(line_no) + ")");
        };
        Constraint c;
        if (tok[0] == "SUM") {
            c.kind = Constraint::Kind::sum_equals;
            const auto eq = std::find(tok.begin(), tok.end(), "=");
            if (eq == tok.end() || eq == tok.begin() + 1 || eq + 2 != tok.end())
                throw bad("must read 'SUM a b ... = d'");
            c.lhs.assign(tok.begin() + 1, eq);
            c.rhs = *(eq + 1);
        } else if (tok[0] == "LEQ") {
            if (tok.size() != 3) throw bad("must read 'LEQ a d'");
            c.kind = Constraint::Kind::less_eq;
            c.lhs = {tok[1]};
            c.rhs = tok[2];
        } else {
            throw bad("keyword '" + tok[0] + "' is not SUM or LEQ");
        }
        out.push_back(std::move(c));
    }
    return out;
}

ConstraintSet load_constraints_file(const std::string& path) {
    return open_and(path, [](std::istream& in) { return load_constraints(in); });
}

}  // namespace va
