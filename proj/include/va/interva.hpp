#pragma once

// Deterministic InterVA cause assignment. Each death's propensity for a
// cause is the prior fraction times the product of Pr(s_k | c_n) over the
// symptoms reported present; propensities are normalized per death and
// averaged into a CSMF. All products are taken in log space.

#include <span>
#include <string>
#include <vector>

#include "va/core.hpp"

namespace va {

struct IntervaResult {
    // J x N, row-major; rows of excluded deaths are all zero.
    std::vector<double> per_death_probs;
    std::size_t deaths = 0;
    std::size_t causes = 0;
    Csmf csmf;
    // True for deaths whose propensity is zero for every cause. These are
    // left out of the CSMF.
    std::vector<bool> propensity_underflow_flags;
    std::vector<std::size_t> missing_counts;

    std::span<const double> row(std::size_t j) const { return {per_death_probs.data() + j * causes, causes}; }
    std::size_t excluded_count() const;
};

// log f'_n + sum over present symptoms of log Pr(s_k | c_n). A zero
// probability for a present symptom gives -inf. Missing answers count as
// absent. Throws DimensionError.
std::vector<double> interva_propensities(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                         const Csmf& f_prime);

// Max-shifted exponentiation and normalization. Throws UndefinedDeathError
// when every entry is -inf.
std::vector<double> interva_normalize(std::span<const double> log_propensities);

// Symptom columns are matched to p by name. Throws DimensionError; throws
// UndefinedDeathError only if every death is undefined.
IntervaResult run_interva(const SymptomMatrix& s, const CondProbMatrix& p, const Csmf& f_prime);

}  // namespace va
