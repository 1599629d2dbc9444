#include "va/interva.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "va/errors.hpp"

namespace va {

std::size_t IntervaResult::excluded_count() const {
    return static_cast<std::size_t>(
        std::count(propensity_underflow_flags.begin(), propensity_underflow_flags.end(), true));
}

namespace {

void check_prior(const CondProbMatrix& p, const Csmf& f_prime) {
    if (f_prime.size() != p.causes())
        throw DimensionError("prior has " + std::to_string(f_prime.size()) + " causes, matrix has " +
                             std::to_string(p.causes()));
}

}  // namespace

std::vector<double> interva_propensities(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                         const Csmf& f_prime) {
    if (symptoms.size() != p.symptoms())
        throw DimensionError("symptom row has " + std::to_string(symptoms.size()) + " entries, matrix has " +
                             std::to_string(p.symptoms()) + " symptoms");
    check_prior(p, f_prime);
    const std::size_t n_causes = p.causes();
    std::vector<double> out(n_causes);
    for (std::size_t n = 0; n < n_causes; ++n) out[n] = std::log(f_prime[n]);
    for (std::size_t k = 0; k < symptoms.size(); ++k) {
        if (symptoms[k] != 1) continue;
        const auto row = p.row(k);
        for (std::size_t n = 0; n < n_causes; ++n) out[n] += std::log(row[n]);
    }
    return out;
}

std::vector<double> interva_normalize(std::span<const double> log_propensities) {
    if (log_propensities.empty()) throw DimensionError("no causes to normalize over");
    const double top = *std::max_element(log_propensities.begin(), log_propensities.end());
    if (top == -std::numeric_limits<double>::infinity())
        throw UndefinedDeathError("death has zero propensity for every cause");
    std::vector<double> out(log_propensities.size());
    double total = 0.0;
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = std::exp(log_propensities[n] - top);
        total += out[n];
    }
    for (double& v : out) v /= total;
    return out;
}

IntervaResult run_interva(const SymptomMatrix& s_in, const CondProbMatrix& p, const Csmf& f_prime) {
    check_prior(p, f_prime);
    const SymptomMatrix s = s_in.aligned_to(p.symptom_names());
    IntervaResult result;
    result.deaths = s.deaths();
    result.causes = p.causes();
    result.per_death_probs.assign(result.deaths * result.causes, 0.0);
    result.propensity_underflow_flags.assign(result.deaths, false);
    result.missing_counts.resize(result.deaths);

    std::vector<double> totals(result.causes, 0.0);
    std::size_t included = 0;
    for (std::size_t j = 0; j < s.deaths(); ++j) {
        result.missing_counts[j] = s.missing_count(j);
        const auto logp = interva_propensities(s.row(j), p, f_prime);
        std::vector<double> probs;
        try {
            probs = interva_normalize(logp);
        } catch (const UndefinedDeathError&) {
            result.propensity_underflow_flags[j] = true;
            continue;
        }
        std::copy(probs.begin(), probs.end(), result.per_death_probs.begin() + static_cast<std::ptrdiff_t>(j * result.causes));
        for (std::size_t n = 0; n < result.causes; ++n) totals[n] += probs[n];
        ++included;
    }
    if (included == 0) throw UndefinedDeathError("every death has zero propensity for every cause");
    for (double& t : totals) t /= static_cast<double>(included);
    result.csmf = Csmf(std::move(totals), p.cause_names());
    return result;
}

}  // namespace va
