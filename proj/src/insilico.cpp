#include "va/insilico.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "va/errors.hpp"
#include "va/parallel.hpp"

namespace va {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log p and log(1 - p) after clamping, K x N each.
struct LogProbTables {
    std::size_t causes = 0;
    std::vector<double> log_present;
    std::vector<double> log_absent;

    LogProbTables(const CondProbMatrix& p, double epsilon) : causes(p.causes()) {
        const auto entries = p.entries();
        log_present.resize(entries.size());
        log_absent.resize(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const double q = std::clamp(entries[i], epsilon, 1.0 - epsilon);
            log_present[i] = std::log(q);
            log_absent[i] = std::log1p(-q);
        }
    }

    void accumulate(std::span<const std::int8_t> symptoms, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < symptoms.size(); ++k) {
            const double* row = (symptoms[k] == 1 ? log_present.data() : log_absent.data()) + k * causes;
            for (std::size_t n = 0; n < causes; ++n) out[n] += row[n];
        }
    }
};

void check_epsilon(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvariantError("probability clamp epsilon must lie in [0, 0.5)");
}

void check_row(std::span<const std::int8_t> symptoms, const CondProbMatrix& p) {
    if (symptoms.size() != p.symptoms())
        throw DimensionError("symptom row has " + std::to_string(symptoms.size()) + " entries, matrix has " +
                             std::to_string(p.symptoms()) + " symptoms");
}

void check_csmf(const Csmf& f, const CondProbMatrix& p) {
    if (f.size() != p.causes())
        throw DimensionError("CSMF has " + std::to_string(f.size()) + " causes, matrix has " +
                             std::to_string(p.causes()));
}

// Normalizes log weights in place into probabilities; false if all -inf.
bool normalize_log(std::span<double> v) {
    const double top = *std::max_element(v.begin(), v.end());
    if (top == kNegInf || std::isnan(top)) return false;
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - top);
        total += x;
    }
    for (double& x : v) x /= total;
    return true;
}

// Per-death likelihood weights exp(loglik - max), J x N. Shared by all
// chains; the max shift cancels in L_j.
std::vector<double> death_weights(const SymptomMatrix& s, const CondProbMatrix& p, double epsilon) {
    const LogProbTables tables(p, epsilon);
    const std::size_t n_causes = p.causes();
    std::vector<double> w(s.deaths() * n_causes);
    for (std::size_t j = 0; j < s.deaths(); ++j) {
        std::span<double> row(w.data() + j * n_causes, n_causes);
        tables.accumulate(s.row(j), row);
        const double top = *std::max_element(row.begin(), row.end());
        if (top == kNegInf)
            throw UndefinedDeathError("death '" + s.death_ids()[j] + "' has zero likelihood under every cause");
        for (double& x : row) x = std::exp(x - top);
    }
    return w;
}

PosteriorChain run_chain(std::span<const double> weights, std::size_t deaths, const GibbsConfig& cfg,
                         std::size_t chain_id) {
    const std::size_t n_causes = cfg.alpha.size();
    PosteriorChain chain;
    chain.chain_id = chain_id;
    chain.deaths = deaths;
    chain.causes = n_causes;
    chain.config = cfg;
    const std::size_t keep = cfg.retained_per_chain();
    chain.f_draws.reserve(keep * n_causes);
    chain.y_draws.reserve(keep * deaths);
    chain.l_mean.assign(deaths * n_causes, 0.0);

    Rng rng = make_rng(cfg.seed, kChainStream, chain_id);
    std::vector<double> f(cfg.f_init->fractions().begin(), cfg.f_init->fractions().end());
    std::vector<CauseIndex> y(deaths);
    std::vector<double> shape(n_causes);
    std::vector<double> buf(n_causes);

    for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
        // Y | F
        std::fill(shape.begin(), shape.end(), 0.0);
        for (std::size_t j = 0; j < deaths; ++j) {
            const double* w = weights.data() + j * n_causes;
            double total = 0.0;
            for (std::size_t n = 0; n < n_causes; ++n) {
                buf[n] = f[n] * w[n];
                total += buf[n];
            }
            if (!(total > 0.0)) throw NumericError("zero total likelihood while sampling causes");
            const auto n = categorical(buf, total, rng);
            y[j] = static_cast<CauseIndex>(n);
            shape[n] += 1.0;
        }
        // F | Y
        for (std::size_t n = 0; n < n_causes; ++n) shape[n] += cfg.alpha[n];
        dirichlet(shape, rng, f);

        if (it < cfg.burn_in || (it - cfg.burn_in) % cfg.thin != 0) continue;
        chain.f_draws.insert(chain.f_draws.end(), f.begin(), f.end());
        chain.y_draws.insert(chain.y_draws.end(), y.begin(), y.end());
        for (std::size_t j = 0; j < deaths; ++j) {
            const double* w = weights.data() + j * n_causes;
            double total = 0.0;
            for (std::size_t n = 0; n < n_causes; ++n) total += f[n] * w[n];
            double* acc = chain.l_mean.data() + j * n_causes;
            for (std::size_t n = 0; n < n_causes; ++n) acc[n] += f[n] * w[n] / total;
        }
    }
    const double kept = static_cast<double>(chain.draws());
    if (kept > 0)
        for (double& v : chain.l_mean) v /= kept;
    return chain;
}

double normal_quantile(double q) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void GibbsConfig::validate(std::size_t n_causes) const {
    if (n_chains < 1) throw InvariantError("need at least one chain");
    if (n_iterations < 1) throw InvariantError("need at least one iteration");
    if (burn_in >= n_iterations) throw InvariantError("burn-in must be smaller than the iteration count");
    if (thin < 1) throw InvariantError("thinning stride must be at least 1");
    if (!alpha.empty() && alpha.size() != n_causes)
        throw DimensionError("alpha has " + std::to_string(alpha.size()) + " entries, expected " +
                             std::to_string(n_causes));
    for (double a : alpha)
        if (!(a > 0.0) || !std::isfinite(a)) throw InvariantError("alpha entries must be positive");
    if (f_init && f_init->size() != n_causes) throw DimensionError("initial CSMF has the wrong number of causes");
    check_epsilon(prob_clamp_epsilon);
}

GibbsConfig GibbsConfig::resolved(const std::vector<std::string>& cause_names) const {
    validate(cause_names.size());
    GibbsConfig out = *this;
    if (out.alpha.empty()) out.alpha.assign(cause_names.size(), 1.0);
    if (!out.f_init) out.f_init = Csmf::normalized(out.alpha, cause_names);
    out.threads = std::max<std::size_t>(1, out.threads);
    return out;
}

std::size_t GibbsConfig::retained_per_chain() const {
    if (burn_in >= n_iterations || thin == 0) return 0;
    return (n_iterations - burn_in + thin - 1) / thin;
}

// ---------------------------------------------------------------------------
// Conditional distributions

std::vector<double> symptom_log_likelihoods(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                            double epsilon) {
    check_row(symptoms, p);
    check_epsilon(epsilon);
    std::vector<double> out(p.causes(), 0.0);
    for (std::size_t k = 0; k < symptoms.size(); ++k) {
        const auto row = p.row(k);
        for (std::size_t n = 0; n < out.size(); ++n) {
            const double q = std::clamp(row[n], epsilon, 1.0 - epsilon);
            out[n] += symptoms[k] == 1 ? std::log(q) : std::log1p(-q);
        }
    }
    return out;
}

std::vector<double> death_cause_likelihoods(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                            const Csmf& f, double epsilon) {
    check_csmf(f, p);
    auto out = symptom_log_likelihoods(symptoms, p, epsilon);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += std::log(f[n]);
    if (!normalize_log(out)) throw UndefinedDeathError("every cause has zero likelihood for this death");
    return out;
}

std::vector<CauseIndex> sample_causes(const SymptomMatrix& s_in, const CondProbMatrix& p, const Csmf& f, Rng& rng,
                                      double epsilon) {
    const SymptomMatrix s = s_in.aligned_to(p.symptom_names());
    std::vector<CauseIndex> out(s.deaths());
    for (std::size_t j = 0; j < s.deaths(); ++j) {
        std::vector<double> l;
        try {
            l = death_cause_likelihoods(s.row(j), p, f, epsilon);
        } catch (const UndefinedDeathError&) {
            throw UndefinedDeathError("death '" + s.death_ids()[j] + "' has zero likelihood under every cause");
        }
        out[j] = static_cast<CauseIndex>(categorical(l, 1.0, rng));
    }
    return out;
}

Csmf sample_csmf(std::span<const CauseIndex> y, std::span<const double> alpha,
                 const std::vector<std::string>& cause_names, Rng& rng) {
    if (alpha.size() != cause_names.size()) throw DimensionError("alpha and cause names differ in length");
    for (double a : alpha)
        if (!(a > 0.0)) throw InvariantError("alpha entries must be positive");
    std::vector<double> shape(alpha.begin(), alpha.end());
    for (const auto c : y) {
        if (c >= shape.size()) throw InvariantError("cause label out of range");
        shape[c] += 1.0;
    }
    auto f = dirichlet(shape, rng);
    return Csmf(std::move(f), cause_names);
}

// ---------------------------------------------------------------------------
// Sampler

std::vector<PosteriorChain> run_gibbs(const SymptomMatrix& s_in, const CondProbMatrix& p, const GibbsConfig& cfg_in) {
    const GibbsConfig cfg = cfg_in.resolved(p.cause_names());
    const SymptomMatrix s = s_in.aligned_to(p.symptom_names());
    const auto weights = death_weights(s, p, cfg.prob_clamp_epsilon);

    std::vector<PosteriorChain> chains(cfg.n_chains);
    parallel_for(cfg.n_chains, cfg.threads,
                 [&](std::size_t c) { chains[c] = run_chain(weights, s.deaths(), cfg, c); });
    return chains;
}

double potential_scale_reduction(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();

    std::vector<double> means(m);
    double within = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += chains[c][i];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (chains[c][i] - mean) * (chains[c][i] - mean);
        within += ss / static_cast<double>(n - 1);
        means[c] = mean;
    }
    within /= static_cast<double>(m);
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= static_cast<double>(m);
    double between = 0.0;
    for (double v : means) between += (v - grand) * (v - grand);
    between *= static_cast<double>(n) / static_cast<double>(m - 1);

    if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    const double pooled = (nd - 1.0) / nd * within + between / nd;
    return std::sqrt(pooled / within);
}

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyChainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval binomial_interval(std::size_t successes, std::size_t trials, double level) {
    if (trials == 0) return {0.0, 1.0};
    const double z = normal_quantile(0.5 + level / 2.0);
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n);
    return {std::max(0.0, phat - half), std::min(1.0, phat + half)};
}

std::vector<CauseIndex> PosteriorSummary::top_causes() const {
    std::vector<CauseIndex> out(deaths);
    for (std::size_t j = 0; j < deaths; ++j) {
        const auto r = death_row(j);
        out[j] = static_cast<CauseIndex>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

PosteriorSummary summarize(std::span<const PosteriorChain> chains, double level) {
    if (chains.empty()) throw EmptyChainError("no chains to summarize");
    if (!(level > 0.0 && level < 1.0)) throw InvariantError("credible level must lie in (0, 1)");
    const std::size_t n_causes = chains.front().causes;
    const std::size_t deaths = chains.front().deaths;
    std::size_t total = 0;
    for (const auto& c : chains) {
        if (c.causes != n_causes || c.deaths != deaths) throw DimensionError("chains disagree in shape");
        if (c.draws() < 2) throw EmptyChainError("chain " + std::to_string(c.chain_id) + " has fewer than 2 draws");
        total += c.draws();
    }

    PosteriorSummary out;
    out.level = level;
    out.deaths = deaths;
    out.causes = n_causes;
    out.total_draws = total;

    const auto& names = chains.front().config.f_init ? chains.front().config.f_init->cause_names()
                                                     : std::vector<std::string>{};
    std::vector<std::string> cause_names = names;
    if (cause_names.size() != n_causes) {
        cause_names.clear();
        for (std::size_t n = 0; n < n_causes; ++n) cause_names.push_back("cause" + std::to_string(n + 1));
    }

    // CSMF
    std::vector<double> mean(n_causes, 0.0);
    std::vector<std::vector<double>> pooled(n_causes);
    std::vector<std::vector<std::vector<double>>> per_chain(n_causes, std::vector<std::vector<double>>(chains.size()));
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (std::size_t i = 0; i < chains[c].draws(); ++i) {
            const auto f = chains[c].f_draw(i);
            for (std::size_t n = 0; n < n_causes; ++n) {
                mean[n] += f[n];
                pooled[n].push_back(f[n]);
                per_chain[n][c].push_back(f[n]);
            }
        }
    }
    for (double& m : mean) m /= static_cast<double>(total);
    const double tail = (1.0 - level) / 2.0;
    out.csmf_intervals.resize(n_causes);
    for (std::size_t n = 0; n < n_causes; ++n) {
        auto& iv = out.csmf_intervals[n];
        iv.lower = std::min(sample_quantile(pooled[n], tail), mean[n]);
        iv.upper = std::max(sample_quantile(pooled[n], 1.0 - tail), mean[n]);
    }
    out.csmf_mean = Csmf(std::move(mean), std::move(cause_names));

    // Per-death
    std::vector<std::size_t> counts(deaths * n_causes, 0);
    out.per_death_probs_rb.assign(deaths * n_causes, 0.0);
    for (const auto& c : chains) {
        for (std::size_t i = 0; i < c.draws(); ++i) {
            const auto y = c.y_draw(i);
            for (std::size_t j = 0; j < deaths; ++j) ++counts[j * n_causes + y[j]];
        }
        const double share = static_cast<double>(c.draws()) / static_cast<double>(total);
        for (std::size_t i = 0; i < c.l_mean.size(); ++i) out.per_death_probs_rb[i] += share * c.l_mean[i];
    }
    out.per_death_probs.resize(counts.size());
    out.per_death_intervals.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out.per_death_probs[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
        out.per_death_intervals[i] = binomial_interval(counts[i], total, level);
    }

    // Diagnostics
    out.diagnostics_available = chains.size() >= 2;
    if (out.diagnostics_available) {
        out.psrf.resize(n_causes);
        out.converged = true;
        for (std::size_t n = 0; n < n_causes; ++n) {
            out.psrf[n] = potential_scale_reduction(per_chain[n]);
            if (!(out.psrf[n] < kPsrfThreshold)) out.converged = false;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single death

SingleDeathResult single_death_assign(std::span<const std::int8_t> symptoms, const CondProbMatrix& p, const Csmf& f,
                                      std::size_t n_draws, Rng& rng, double epsilon, double level) {
    SingleDeathResult out;
    out.likelihoods = death_cause_likelihoods(symptoms, p, f, epsilon);
    out.n_draws = n_draws;
    if (n_draws == 0) return out;
    std::vector<std::size_t> counts(p.causes(), 0);
    for (std::size_t d = 0; d < n_draws; ++d) ++counts[categorical(out.likelihoods, 1.0, rng)];
    for (std::size_t n = 0; n < counts.size(); ++n) {
        out.frequencies.push_back(static_cast<double>(counts[n]) / static_cast<double>(n_draws));
        out.intervals.push_back(binomial_interval(counts[n], n_draws, level));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact oracle

ExactPosterior exact_posterior_oracle(const SymptomMatrix& s_in, const CondProbMatrix& p,
                                      std::span<const double> alpha, double epsilon) {
    const std::size_t n_causes = p.causes();
    if (alpha.size() != n_causes) throw DimensionError("alpha has the wrong number of causes");
    for (double a : alpha)
        if (!(a > 0.0)) throw InvariantError("alpha entries must be positive");
    const SymptomMatrix s = s_in.aligned_to(p.symptom_names());
    const std::size_t deaths = s.deaths();

    std::size_t assignments = 1;
    for (std::size_t j = 0; j < deaths; ++j) {
        if (assignments > kOracleMaxAssignments / n_causes)
            throw InstanceTooLargeError("N^J exceeds " + std::to_string(kOracleMaxAssignments) + " assignments");
        assignments *= n_causes;
    }

    std::vector<double> loglik(deaths * n_causes);
    for (std::size_t j = 0; j < deaths; ++j) {
        const auto ll = symptom_log_likelihoods(s.row(j), p, epsilon);
        std::copy(ll.begin(), ll.end(), loglik.begin() + static_cast<std::ptrdiff_t>(j * n_causes));
    }
    double alpha_total = 0.0;
    double log_prior_const = 0.0;
    for (double a : alpha) {
        alpha_total += a;
        log_prior_const -= std::lgamma(a);
    }
    log_prior_const += std::lgamma(alpha_total) - std::lgamma(static_cast<double>(deaths) + alpha_total);

    std::vector<double> log_weight(assignments);
    std::vector<std::size_t> y(deaths, 0);
    std::vector<std::size_t> m(n_causes, 0);
    for (std::size_t a = 0; a < assignments; ++a) {
        std::fill(m.begin(), m.end(), 0);
        double lw = log_prior_const;
        for (std::size_t j = 0; j < deaths; ++j) {
            lw += loglik[j * n_causes + y[j]];
            ++m[y[j]];
        }
        for (std::size_t n = 0; n < n_causes; ++n) lw += std::lgamma(static_cast<double>(m[n]) + alpha[n]);
        log_weight[a] = lw;
        for (std::size_t j = 0; j < deaths && ++y[j] == n_causes; ++j) y[j] = 0;
    }
    const double top = *std::max_element(log_weight.begin(), log_weight.end());
    if (top == kNegInf) throw UndefinedDeathError("every assignment has zero posterior weight");

    ExactPosterior out;
    out.deaths = deaths;
    out.causes = n_causes;
    out.assignments = assignments;
    out.csmf_mean.assign(n_causes, 0.0);
    out.per_death_probs.assign(deaths * n_causes, 0.0);
    std::fill(y.begin(), y.end(), 0);
    double norm = 0.0;
    const double denom = static_cast<double>(deaths) + alpha_total;
    for (std::size_t a = 0; a < assignments; ++a) {
        const double w = std::exp(log_weight[a] - top);
        norm += w;
        std::fill(m.begin(), m.end(), 0);
        for (std::size_t j = 0; j < deaths; ++j) {
            ++m[y[j]];
            out.per_death_probs[j * n_causes + y[j]] += w;
        }
        for (std::size_t n = 0; n < n_causes; ++n)
            out.csmf_mean[n] += w * (static_cast<double>(m[n]) + alpha[n]) / denom;
        for (std::size_t j = 0; j < deaths && ++y[j] == n_causes; ++j) y[j] = 0;
    }
    for (double& v : out.csmf_mean) v /= norm;
    for (double& v : out.per_death_probs) v /= norm;
    return out;
}

}  // namespace va
