#pragma once

// Synthetic verbal-autopsy data: draw a conditional-probability matrix from
// the grade scale, draw deaths from a CSMF, then draw each death's symptoms
// as independent Bernoulli variables given its cause. Scenario variants
// rescale the matrix into a narrow band or corrupt the reported symptoms.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "va/core.hpp"
#include "va/random.hpp"

namespace va {

enum class Scenario { fair, rescaled, reporting_errors };

std::string_view to_string(Scenario s);
// Throws InvariantError for unknown names.
Scenario parse_scenario(std::string_view name);

using GradeWeights = std::array<double, kGradeCount>;

inline GradeWeights uniform_grade_weights() {
    GradeWeights w;
    w.fill(1.0);
    return w;
}

struct ScenarioConfig {
    Scenario scenario = Scenario::fair;
    std::size_t deaths = 800;
    std::size_t causes = 35;
    std::size_t symptoms = 150;
    // Unset means a fresh Dirichlet(1) draw per dataset.
    std::optional<std::vector<double>> true_csmf;
    GradeWeights grade_weights = uniform_grade_weights();
    double rescale_lo = 0.25;
    double rescale_hi = 0.75;
    double false_negative_rate = 0.15;
    double false_positive_rate = 0.10;
    std::uint64_t seed = 1;

    // Throws InvariantError.
    void validate() const;
};

// "key = value" lines, '#' comments. Keys: scenario, deaths, causes,
// symptoms, true_csmf (comma list or "random"), grade_weights (15 values),
// rescale_lo, rescale_hi, false_negative_rate, false_positive_rate, seed.
// Throws ParseError / InvariantError.
ScenarioConfig load_scenario_config(std::istream& in);
ScenarioConfig load_scenario_config_file(const std::string& path);
void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg);

struct SimulatedDataset {
    SymptomMatrix symptoms;
    std::vector<CauseIndex> true_causes;
    // Distribution the causes were drawn from.
    Csmf true_csmf;
    // Realized cause composition of true_causes (counts / J).
    Csmf empirical_csmf;
    // The step-one draw from the grade scale.
    CondProbMatrix p_true;
    // What the methods are given; the rescaled matrix in that scenario,
    // p_true otherwise. Symptoms are always generated from this matrix.
    CondProbMatrix p_given_to_methods;
};

std::vector<std::string> default_cause_names(std::size_t n);
std::vector<std::string> default_symptom_names(std::size_t k);
std::vector<std::string> default_death_ids(std::size_t j);

// Empirical grade frequencies of a matrix whose entries are all grade
// values. Throws InvariantError otherwise.
GradeWeights empirical_grade_weights(const CondProbMatrix& p);

CondProbMatrix generate_p(std::size_t symptoms, std::size_t causes, const GradeWeights& weights, Rng& rng);

std::vector<CauseIndex> generate_deaths(std::size_t deaths, const Csmf& csmf, Rng& rng);

SymptomMatrix generate_symptoms(std::span<const CauseIndex> causes, const CondProbMatrix& p, Rng& rng);

// Affine map sending min(p) to lo and max(p) to hi. Throws InvariantError
// for a constant matrix or lo >= hi.
CondProbMatrix rescale_p(const CondProbMatrix& p, double lo, double hi);

// Flips each 1 to 0 with probability fn_rate and each 0 to 1 with
// probability fp_rate; missing cells are untouched.
SymptomMatrix inject_reporting_errors(const SymptomMatrix& s, double fn_rate, double fp_rate, Rng& rng);

// Deterministic in cfg. Each step draws from its own substream of cfg.seed.
SimulatedDataset make_scenario(const ScenarioConfig& cfg);

// Writes symptoms.csv, truth.csv, true_csmf.csv, p_true.csv and
// p_given.csv into `dir`.
void write_dataset(const std::string& dir, const SimulatedDataset& data);

}  // namespace va
