#include "va/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "text_io.hpp"
#include "va/errors.hpp"

namespace va {

namespace {

constexpr std::uint64_t kStreamP = 1;
constexpr std::uint64_t kStreamCsmf = 2;
constexpr std::uint64_t kStreamDeaths = 3;
constexpr std::uint64_t kStreamSymptoms = 4;
constexpr std::uint64_t kStreamErrors = 5;

void check_rate(double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvariantError(std::string(name) + " must lie in [0, 1]");
}

std::vector<std::string> numbered(const char* prefix, std::size_t count) {
    const int width = static_cast<int>(std::to_string(count).size());
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) {
        std::string digits = std::to_string(i);
        out.push_back(prefix + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    }
    return out;
}

std::vector<double> parse_list(std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(',', start);
        const auto cell = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.push_back(parse_double(cell));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::size_t parse_count(std::string_view text) {
    const double v = parse_double(text);
    if (v < 0 || v != std::floor(v)) throw ParseError("not a non-negative integer: '" + std::string(text) + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::fair: return "fair";
        case Scenario::rescaled: return "rescaled";
        case Scenario::reporting_errors: return "reporting_errors";
    }
    return "fair";
}

Scenario parse_scenario(std::string_view name) {
    if (name == "fair") return Scenario::fair;
    if (name == "rescaled") return Scenario::rescaled;
    if (name == "reporting_errors" || name == "reporting-errors") return Scenario::reporting_errors;
    throw InvariantError("unknown scenario '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
    if (deaths < 1) throw InvariantError("need at least one death");
    if (causes < 2) throw InvariantError("need at least two causes");
    check_rate(false_negative_rate, "false_negative_rate");
    check_rate(false_positive_rate, "false_positive_rate");
    if (!(rescale_lo > 0.0 && rescale_hi < 1.0 && rescale_lo < rescale_hi))
        throw InvariantError("rescale range must satisfy 0 < lo < hi < 1");
    double total = 0.0;
    for (double w : grade_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvariantError("grade weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw InvariantError("grade weights are all zero");
    if (true_csmf) {
        if (true_csmf->size() != causes) throw InvariantError("true_csmf length differs from causes");
        Csmf(*true_csmf, default_cause_names(causes));  // simplex check
    }
}

ScenarioConfig load_scenario_config(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value' (line " + std::to_string(line_no) + ")");
        const std::string key(detail::trim(text.substr(0, eq)));
        const std::string value(detail::trim(text.substr(eq + 1)));
        try {
            if (key == "scenario") cfg.scenario = parse_scenario(value);
            else if (key == "deaths") cfg.deaths = parse_count(value);
            else if (key == "causes") cfg.causes = parse_count(value);
            else if (key == "symptoms") cfg.symptoms = parse_count(value);
            else if (key == "true_csmf") {
                if (value == "random") cfg.true_csmf.reset();
                else cfg.true_csmf = parse_list(value);
            } else if (key == "grade_weights") {
                const auto w = parse_list(value);
                if (w.size() != kGradeCount) throw ParseError("grade_weights needs 15 values");
                std::copy(w.begin(), w.end(), cfg.grade_weights.begin());
            } else if (key == "rescale_lo") cfg.rescale_lo = parse_double(value);
            else if (key == "rescale_hi") cfg.rescale_hi = parse_double(value);
            else if (key == "false_negative_rate") cfg.false_negative_rate = parse_double(value);
            else if (key == "false_positive_rate") cfg.false_positive_rate = parse_double(value);
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
            else throw ParseError("unknown key '" + key + "'");
        } catch (const Error& e) {
            throw ParseError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
        } catch (const std::logic_error&) {
            throw ParseError("bad value for '" + key + "' (line " + std::to_string(line_no) + ")");
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return load_scenario_config(in);
}

void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg) {
    auto list = [](auto&& values) {
        std::string s;
        for (double v : values) s += (s.empty() ? "" : ",") + format_double(v);
        return s;
    };
    out << "scenario = " << to_string(cfg.scenario) << '\n'
        << "deaths = " << cfg.deaths << '\n'
        << "causes = " << cfg.causes << '\n'
        << "symptoms = " << cfg.symptoms << '\n'
        << "true_csmf = " << (cfg.true_csmf ? list(*cfg.true_csmf) : "random") << '\n'
        << "grade_weights = " << list(cfg.grade_weights) << '\n'
        << "rescale_lo = " << format_double(cfg.rescale_lo) << '\n'
        << "rescale_hi = " << format_double(cfg.rescale_hi) << '\n'
        << "false_negative_rate = " << format_double(cfg.false_negative_rate) << '\n'
        << "false_positive_rate = " << format_double(cfg.false_positive_rate) << '\n'
        << "seed = " << cfg.seed << '\n';
}

std::vector<std::string> default_cause_names(std::size_t n) { return numbered("c", n); }
std::vector<std::string> default_symptom_names(std::size_t k) { return numbered("s", k); }
std::vector<std::string> default_death_ids(std::size_t j) { return numbered("d", j); }

GradeWeights empirical_grade_weights(const CondProbMatrix& p) {
    GradeWeights w{};
    for (double v : p.entries()) {
        const auto idx = grade_index_of_value(v);
        if (!idx) throw InvariantError("matrix entry " + format_double(v) + " is not a grade value");
        w[*idx] += 1.0;
    }
    const double total = static_cast<double>(p.entries().size());
    if (total == 0) throw InvariantError("matrix has no entries");
    for (double& x : w) x /= total;
    return w;
}

CondProbMatrix generate_p(std::size_t symptoms, std::size_t causes, const GradeWeights& weights, Rng& rng) {
    double total = 0.0;
    for (double x : weights) {
        if (!(x >= 0.0)) throw InvariantError("grade weights must be non-negative");
        total += x;
    }
    if (!(total > 0.0)) throw InvariantError("grade weights are all zero");
    std::vector<double> entries(symptoms * causes);
    for (double& e : entries) e = kGrades[categorical(weights, total, rng)].value;
    return CondProbMatrix(std::move(entries), default_symptom_names(symptoms), default_cause_names(causes));
}

std::vector<CauseIndex> generate_deaths(std::size_t deaths, const Csmf& csmf, Rng& rng) {
    std::vector<CauseIndex> out(deaths);
    for (auto& y : out) y = static_cast<CauseIndex>(categorical(csmf.fractions(), 1.0, rng));
    return out;
}

SymptomMatrix generate_symptoms(std::span<const CauseIndex> causes, const CondProbMatrix& p, Rng& rng) {
    const std::size_t kk = p.symptoms();
    std::vector<std::int8_t> entries(causes.size() * kk);
    for (std::size_t j = 0; j < causes.size(); ++j) {
        if (causes[j] >= p.causes()) throw InvariantError("cause label out of range");
        for (std::size_t k = 0; k < kk; ++k) entries[j * kk + k] = bernoulli(p(k, causes[j]), rng) ? 1 : 0;
    }
    return SymptomMatrix(std::move(entries), default_death_ids(causes.size()), p.symptom_names());
}

CondProbMatrix rescale_p(const CondProbMatrix& p, double lo, double hi) {
    if (!(lo < hi)) throw InvariantError("rescale range needs lo < hi");
    const auto e = p.entries();
    if (e.empty()) throw InvariantError("cannot rescale an empty matrix");
    const auto [min_it, max_it] = std::minmax_element(e.begin(), e.end());
    const double min = *min_it;
    const double max = *max_it;
    if (!(max > min)) throw InvariantError("cannot rescale a constant matrix");
    std::vector<double> out(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = lo + (e[i] - min) * (hi - lo) / (max - min);
    return CondProbMatrix(std::move(out), p.symptom_names(), p.cause_names());
}

SymptomMatrix inject_reporting_errors(const SymptomMatrix& s, double fn_rate, double fp_rate, Rng& rng) {
    check_rate(fn_rate, "false negative rate");
    check_rate(fp_rate, "false positive rate");
    std::vector<std::int8_t> out(s.entries().begin(), s.entries().end());
    for (auto& v : out) {
        if (v == 1 && bernoulli(fn_rate, rng)) v = 0;
        else if (v == 0 && bernoulli(fp_rate, rng)) v = 1;
    }
    return SymptomMatrix(std::move(out), s.death_ids(), s.symptom_names());
}

SimulatedDataset make_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    auto p_rng = make_rng(cfg.seed, kStreamP);
    auto csmf_rng = make_rng(cfg.seed, kStreamCsmf);
    auto death_rng = make_rng(cfg.seed, kStreamDeaths);
    auto symptom_rng = make_rng(cfg.seed, kStreamSymptoms);
    auto error_rng = make_rng(cfg.seed, kStreamErrors);

    SimulatedDataset data{.symptoms = {},
                          .true_causes = {},
                          .true_csmf = {},
                          .empirical_csmf = {},
                          .p_true = generate_p(cfg.symptoms, cfg.causes, cfg.grade_weights, p_rng),
                          .p_given_to_methods = {}};
    const auto names = default_cause_names(cfg.causes);
    if (cfg.true_csmf) {
        data.true_csmf = Csmf(*cfg.true_csmf, names);
    } else {
        const std::vector<double> ones(cfg.causes, 1.0);
        data.true_csmf = Csmf::normalized(dirichlet(ones, csmf_rng), names);
    }
    data.p_given_to_methods =
        cfg.scenario == Scenario::rescaled ? rescale_p(data.p_true, cfg.rescale_lo, cfg.rescale_hi) : data.p_true;
    data.true_causes = generate_deaths(cfg.deaths, data.true_csmf, death_rng);
    std::vector<double> counts(cfg.causes, 0.0);
    for (const auto c : data.true_causes) counts[c] += 1.0;
    data.empirical_csmf = Csmf::normalized(std::move(counts), names);
    data.symptoms = generate_symptoms(data.true_causes, data.p_given_to_methods, symptom_rng);
    if (cfg.scenario == Scenario::reporting_errors)
        data.symptoms =
            inject_reporting_errors(data.symptoms, cfg.false_negative_rate, cfg.false_positive_rate, error_rng);
    return data;
}

void write_dataset(const std::string& dir, const SimulatedDataset& data) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
        return out;
    };
    {
        auto out = open("symptoms.csv");
        write_symptom_matrix(out, data.symptoms);
    }
    {
        auto out = open("truth.csv");
        out << "id,cause\n";
        const auto& names = data.p_true.cause_names();
        for (std::size_t j = 0; j < data.true_causes.size(); ++j)
            out << data.symptoms.death_ids()[j] << ',' << names[data.true_causes[j]] << '\n';
    }
    {
        auto out = open("true_csmf.csv");
        write_csmf(out, data.true_csmf);
    }
    {
        auto out = open("p_true.csv");
        write_cond_prob_matrix(out, data.p_true);
    }
    {
        auto out = open("p_given.csv");
        write_cond_prob_matrix(out, data.p_given_to_methods);
    }
}

}  // namespace va
