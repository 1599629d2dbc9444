#pragma once

// Accuracy metrics and the replicate harness comparing InterVA with
// InSilicoVA on simulated data.

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "va/core.hpp"
#include "va/insilico.hpp"
#include "va/simgen.hpp"

namespace va {

enum class Method { interva, insilicova };
std::string_view to_string(Method m);

// Label for a death a method could not assign; never equals a true cause.
inline constexpr CauseIndex kNoCause = std::numeric_limits<CauseIndex>::max();

// Fraction of positions where assigned == truth. Throws DimensionError.
double individual_accuracy(std::span<const CauseIndex> assigned, std::span<const CauseIndex> truth);

struct CsmfErrors {
    std::vector<double> abs_errors;
    double tv = 0.0;  // half the L1 distance
};

// Throws DimensionError when the cause name lists differ.
CsmfErrors csmf_errors(const Csmf& estimate, const Csmf& truth);

// Argmax per row of a J x N row-major matrix, ties to the lowest index.
std::vector<CauseIndex> top_causes(std::span<const double> probs, std::size_t causes);

struct ReplicateResult {
    std::size_t replicate_id = 0;
    Method method = Method::interva;
    bool ok = true;
    std::string error;
    double individual_accuracy = 0.0;
    // Errors against the realized cause composition of the dataset.
    std::vector<double> csmf_abs_errors;
    double csmf_tv = 0.0;
    // TV distance to the distribution the causes were drawn from.
    double csmf_tv_generating = 0.0;
    // InterVA deaths with zero propensity everywhere (scored as wrong).
    std::size_t excluded_deaths = 0;
    // InSilicoVA convergence flag; unset for InterVA.
    std::optional<bool> converged;
};

struct DistributionStats {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

DistributionStats describe(std::span<const double> values);

struct Histogram {
    std::vector<double> edges;  // bins + 1, spanning [0, 1]
    std::vector<std::size_t> counts;
};

// Equal-width bins over [0, 1]; 1.0 falls in the last bin.
Histogram histogram_unit(std::span<const double> values, std::size_t bins);

struct MethodSummary {
    Method method = Method::interva;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    DistributionStats accuracy;
    DistributionStats tv;
    Histogram accuracy_hist;
    Histogram tv_hist;
};

struct ComparisonSummary {
    Scenario scenario = Scenario::fair;
    std::vector<MethodSummary> methods;  // interva, insilicova

    const MethodSummary& of(Method m) const;
};

enum class IntervaPrior { uniform, truth };

struct ComparisonOptions {
    IntervaPrior interva_prior = IntervaPrior::uniform;
    std::size_t threads = 1;
    std::size_t histogram_bins = 20;
};

struct ComparisonResult {
    std::vector<ReplicateResult> rows;  // ordered by replicate, InterVA first
    ComparisonSummary summary;
};

// Replicate r uses scenario seed derive_seed(cfg.seed, kReplicateStream, r)
// and Gibbs seed derive_seed(cfg.seed, kReplicateGibbsStream, r); results do
// not depend on the thread count. A replicate whose method throws is
// recorded with its error and left out of the summary.
ComparisonResult run_comparison(const ScenarioConfig& cfg, std::size_t replicates, const GibbsConfig& gibbs,
                                const ComparisonOptions& options = {});

ComparisonSummary summarize_replicates(Scenario scenario, std::span<const ReplicateResult> rows,
                                       std::size_t histogram_bins);

void write_replicate_table(std::ostream& out, std::span<const ReplicateResult> rows);
void write_summary_table(std::ostream& out, const ComparisonSummary& summary);
// Long format: method, metric, bin_lower, bin_upper, count.
void write_histograms(std::ostream& out, const ComparisonSummary& summary);

inline constexpr std::uint64_t kReplicateStream = 0x7265'706cULL;
inline constexpr std::uint64_t kReplicateGibbsStream = 0x6769'6262ULL;

}  // namespace va
