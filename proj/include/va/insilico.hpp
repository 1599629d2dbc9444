#pragma once

// InSilicoVA: Bayesian cause assignment with a Dirichlet prior on the CSMF,
// a categorical cause per death and conditionally independent Bernoulli
// symptoms. The joint posterior of (F, Y) is sampled with a two-block Gibbs
// sampler:
//
//   Y | F, S : y_j ~ Categorical(L_j),  L_j ∝ f_n Π_k p^s (1-p)^(1-s)
//   F | Y    : Dirichlet(M + alpha),    m_n = #{j : y_j = n}
//
// Unlike InterVA, absent symptoms contribute through (1 - p).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "va/core.hpp"
#include "va/random.hpp"

namespace va {

inline constexpr double kDefaultClampEpsilon = 1e-7;

struct GibbsConfig {
    std::size_t n_chains = 4;
    std::size_t n_iterations = 4000;
    std::size_t burn_in = 2000;
    std::size_t thin = 10;
    // Empty means a flat Dirichlet(1, ..., 1).
    std::vector<double> alpha;
    std::uint64_t seed = 1;
    // Starting CSMF for every chain; unset means alpha / sum(alpha).
    std::optional<Csmf> f_init;
    // P is clamped into [eps, 1 - eps] for likelihood evaluation only.
    double prob_clamp_epsilon = kDefaultClampEpsilon;
    // Worker threads for running chains; results do not depend on it.
    std::size_t threads = 1;

    // Throws InvariantError.
    void validate(std::size_t n_causes) const;
    // Copy with alpha and f_init materialized for the given causes.
    GibbsConfig resolved(const std::vector<std::string>& cause_names) const;
    std::size_t retained_per_chain() const;
};

struct PosteriorChain {
    std::size_t chain_id = 0;
    std::size_t deaths = 0;
    std::size_t causes = 0;
    std::vector<double> f_draws;      // draws x N
    std::vector<CauseIndex> y_draws;  // draws x J
    // J x N average of L_j over the retained F draws.
    std::vector<double> l_mean;
    GibbsConfig config;

    std::size_t draws() const noexcept { return causes == 0 ? 0 : f_draws.size() / causes; }
    std::span<const double> f_draw(std::size_t i) const { return {f_draws.data() + i * causes, causes}; }
    std::span<const CauseIndex> y_draw(std::size_t i) const { return {y_draws.data() + i * deaths, deaths}; }

    bool operator==(const PosteriorChain& o) const {
        return chain_id == o.chain_id && deaths == o.deaths && causes == o.causes && f_draws == o.f_draws &&
               y_draws == o.y_draws && l_mean == o.l_mean;
    }
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

struct PosteriorSummary {
    double level = 0.95;
    std::size_t deaths = 0;
    std::size_t causes = 0;
    std::size_t total_draws = 0;
    Csmf csmf_mean;
    std::vector<Interval> csmf_intervals;  // N, equal-tailed
    // J x N posterior cause frequencies of the retained y draws, with
    // binomial intervals at `level`.
    std::vector<double> per_death_probs;
    std::vector<Interval> per_death_intervals;
    // J x N average of L_j over retained F draws (Rao-Blackwellized).
    std::vector<double> per_death_probs_rb;
    // Per-cause potential scale reduction; empty when fewer than 2 chains.
    std::vector<double> psrf;
    bool diagnostics_available = false;
    bool converged = false;

    std::span<const double> death_row(std::size_t j) const { return {per_death_probs.data() + j * causes, causes}; }
    // Argmax of per_death_probs per death, ties to the lowest cause index.
    std::vector<CauseIndex> top_causes() const;
};

inline constexpr double kPsrfThreshold = 1.1;

// N-vector of log Pr(S_j | y_j = n) with missing answers treated as absent
// and p clamped into [eps, 1 - eps].
std::vector<double> symptom_log_likelihoods(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                            double epsilon);

// Normalized L_j. Throws DimensionError, or UndefinedDeathError when every
// cause has zero likelihood (possible only with eps = 0).
std::vector<double> death_cause_likelihoods(std::span<const std::int8_t> symptoms, const CondProbMatrix& p,
                                            const Csmf& f, double epsilon = kDefaultClampEpsilon);

// One categorical draw per death from its L_j.
std::vector<CauseIndex> sample_causes(const SymptomMatrix& s, const CondProbMatrix& p, const Csmf& f, Rng& rng,
                                      double epsilon = kDefaultClampEpsilon);

// Counts causes in y and draws F ~ Dirichlet(M + alpha).
Csmf sample_csmf(std::span<const CauseIndex> y, std::span<const double> alpha,
                 const std::vector<std::string>& cause_names, Rng& rng);

// Runs cfg.n_chains independent chains. Chain c draws from
// make_rng(cfg.seed, kChainStream, c), so output is a pure function of the
// inputs and cfg regardless of cfg.threads. Throws UndefinedDeathError
// before sampling if any death is incompatible with every cause.
std::vector<PosteriorChain> run_gibbs(const SymptomMatrix& s, const CondProbMatrix& p, const GibbsConfig& cfg);

// Pools chains into point estimates, equal-tailed credible intervals and
// Gelman-Rubin diagnostics. Throws EmptyChainError.
PosteriorSummary summarize(std::span<const PosteriorChain> chains, double level = 0.95);

// Gelman-Rubin potential scale reduction of one scalar over equally long
// chains. A quantity with zero variance everywhere gives 1.
double potential_scale_reduction(const std::vector<std::vector<double>>& chains);

// Type-7 (linear interpolation) sample quantile of unsorted values.
double sample_quantile(std::vector<double> values, double q);

struct SingleDeathResult {
    std::vector<double> likelihoods;  // L_j
    std::size_t n_draws = 0;
    // Empty when n_draws == 0.
    std::vector<double> frequencies;
    std::vector<Interval> intervals;
    bool intervals_available() const noexcept { return n_draws > 0; }
};

// Repeated categorical draws from L_j for one death under a given F, with
// binomial intervals at `level` per cause.
SingleDeathResult single_death_assign(std::span<const std::int8_t> symptoms, const CondProbMatrix& p, const Csmf& f,
                                      std::size_t n_draws, Rng& rng, double epsilon = kDefaultClampEpsilon,
                                      double level = 0.95);

// Normal-approximation binomial interval for successes / trials, clipped to
// [0, 1]. Zero width at frequencies 0 and 1.
Interval binomial_interval(std::size_t successes, std::size_t trials, double level);

struct ExactPosterior {
    std::size_t deaths = 0;
    std::size_t causes = 0;
    std::vector<double> csmf_mean;       // E[F | S]
    std::vector<double> per_death_probs;  // J x N, Pr(y_j = n | S)
    std::size_t assignments = 0;         // N^J terms enumerated
};

inline constexpr std::size_t kOracleMaxAssignments = 1'000'000;

// Exact posterior by enumerating every assignment Y, weighting each by its
// symptom likelihood times the Dirichlet-multinomial marginal of its
// counts. Throws InstanceTooLargeError when N^J > kOracleMaxAssignments.
ExactPosterior exact_posterior_oracle(const SymptomMatrix& s, const CondProbMatrix& p, std::span<const double> alpha,
                                      double epsilon = 0.0);

// Random stream tags for derive_seed.
inline constexpr std::uint64_t kChainStream = 0x6368'6169'6eULL;

}  // namespace va
