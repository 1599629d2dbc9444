#include "va/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "va/errors.hpp"
#include "va/interva.hpp"
#include "va/parallel.hpp"

namespace va {

std::string_view to_string(Method m) { return m == Method::interva ? "interva" : "insilicova"; }

double individual_accuracy(std::span<const CauseIndex> assigned, std::span<const CauseIndex> truth) {
    if (assigned.size() != truth.size())
        throw DimensionError("accuracy: " + std::to_string(assigned.size()) + " assignments vs " +
                             std::to_string(truth.size()) + " true causes");
    if (truth.empty()) throw DimensionError("accuracy of an empty assignment");
    std::size_t hits = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) hits += assigned[j] == truth[j] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

CsmfErrors csmf_errors(const Csmf& estimate, const Csmf& truth) {
    if (estimate.cause_names() != truth.cause_names()) throw DimensionError("CSMFs are over different causes");
    CsmfErrors out;
    out.abs_errors.resize(truth.size());
    double total = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
        out.abs_errors[n] = std::abs(estimate[n] - truth[n]);
        total += out.abs_errors[n];
    }
    out.tv = 0.5 * total;
    return out;
}

std::vector<CauseIndex> top_causes(std::span<const double> probs, std::size_t causes) {
    std::vector<CauseIndex> out(probs.size() / causes);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto row = probs.subspan(j * causes, causes);
        out[j] = static_cast<CauseIndex>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

DistributionStats describe(std::span<const double> values) {
    DistributionStats s;
    s.count = values.size();
    if (values.empty()) return s;
    std::vector<double> v(values.begin(), values.end());
    double total = 0.0;
    for (double x : v) total += x;
    s.mean = total / static_cast<double>(v.size());
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.q1 = sample_quantile(v, 0.25);
    s.median = sample_quantile(v, 0.5);
    s.q3 = sample_quantile(v, 0.75);
    s.p95 = sample_quantile(v, 0.95);
    return s;
}

Histogram histogram_unit(std::span<const double> values, std::size_t bins) {
    if (bins == 0) throw InvariantError("histogram needs at least one bin");
    Histogram h;
    h.counts.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(static_cast<double>(b) / static_cast<double>(bins));
    for (double x : values) {
        auto b = static_cast<std::size_t>(std::floor(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins)));
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

const MethodSummary& ComparisonSummary::of(Method m) const {
    for (const auto& s : methods)
        if (s.method == m) return s;
    throw Error("no summary for method " + std::string(to_string(m)));
}

namespace {

ReplicateResult score(std::size_t id, Method method, std::span<const CauseIndex> assigned,
                      const SimulatedDataset& data, const Csmf& estimate) {
    ReplicateResult r;
    r.replicate_id = id;
    r.method = method;
    r.individual_accuracy = individual_accuracy(assigned, data.true_causes);
    auto err = csmf_errors(estimate, data.empirical_csmf);
    r.csmf_abs_errors = std::move(err.abs_errors);
    r.csmf_tv = err.tv;
    r.csmf_tv_generating = csmf_errors(estimate, data.true_csmf).tv;
    return r;
}

ReplicateResult failed(std::size_t id, Method method, const std::exception& e) {
    ReplicateResult r;
    r.replicate_id = id;
    r.method = method;
    r.ok = false;
    r.error = e.what();
    return r;
}

std::pair<ReplicateResult, ReplicateResult> run_replicate(const ScenarioConfig& base, std::size_t id,
                                                          const GibbsConfig& gibbs_base,
                                                          const ComparisonOptions& options) {
    ScenarioConfig cfg = base;
    cfg.seed = derive_seed(base.seed, kReplicateStream, id);
    SimulatedDataset data;
    try {
        data = make_scenario(cfg);
    } catch (const std::exception& e) {
        return {failed(id, Method::interva, e), failed(id, Method::insilicova, e)};
    }
    const auto& p = data.p_given_to_methods;

    ReplicateResult interva_row;
    try {
        const Csmf prior =
            options.interva_prior == IntervaPrior::truth ? data.true_csmf : Csmf::uniform(p.cause_names());
        const auto res = run_interva(data.symptoms, p, prior);
        auto assigned = top_causes(res.per_death_probs, res.causes);
        for (std::size_t j = 0; j < assigned.size(); ++j)
            if (res.propensity_underflow_flags[j]) assigned[j] = kNoCause;
        interva_row = score(id, Method::interva, assigned, data, res.csmf);
        interva_row.excluded_deaths = res.excluded_count();
    } catch (const std::exception& e) {
        interva_row = failed(id, Method::interva, e);
    }

    ReplicateResult insilico_row;
    try {
        GibbsConfig gibbs = gibbs_base;
        gibbs.seed = derive_seed(base.seed, kReplicateGibbsStream, id);
        gibbs.threads = 1;
        gibbs.f_init.reset();
        const auto chains = run_gibbs(data.symptoms, p, gibbs);
        const auto summary = summarize(chains);
        insilico_row = score(id, Method::insilicova, summary.top_causes(), data, summary.csmf_mean);
        if (summary.diagnostics_available) insilico_row.converged = summary.converged;
    } catch (const std::exception& e) {
        insilico_row = failed(id, Method::insilicova, e);
    }
    return {std::move(interva_row), std::move(insilico_row)};
}

}  // namespace

ComparisonSummary summarize_replicates(Scenario scenario, std::span<const ReplicateResult> rows,
                                       std::size_t histogram_bins) {
    ComparisonSummary summary;
    summary.scenario = scenario;
    for (const Method m : {Method::interva, Method::insilicova}) {
        MethodSummary ms;
        ms.method = m;
        std::vector<double> acc;
        std::vector<double> tv;
        for (const auto& r : rows) {
            if (r.method != m) continue;
            if (!r.ok) {
                ++ms.failed;
                continue;
            }
            ++ms.succeeded;
            acc.push_back(r.individual_accuracy);
            tv.push_back(r.csmf_tv);
        }
        ms.accuracy = describe(acc);
        ms.tv = describe(tv);
        ms.accuracy_hist = histogram_unit(acc, histogram_bins);
        ms.tv_hist = histogram_unit(tv, histogram_bins);
        summary.methods.push_back(std::move(ms));
    }
    return summary;
}

ComparisonResult run_comparison(const ScenarioConfig& cfg, std::size_t replicates, const GibbsConfig& gibbs,
                                const ComparisonOptions& options) {
    cfg.validate();
    gibbs.validate(cfg.causes);
    std::vector<std::pair<ReplicateResult, ReplicateResult>> per(replicates);
    parallel_for(replicates, options.threads,
                 [&](std::size_t r) { per[r] = run_replicate(cfg, r, gibbs, options); });
    ComparisonResult out;
    for (auto& [a, b] : per) {
        out.rows.push_back(std::move(a));
        out.rows.push_back(std::move(b));
    }
    out.summary = summarize_replicates(cfg.scenario, out.rows, options.histogram_bins);
    return out;
}

void write_replicate_table(std::ostream& out, std::span<const ReplicateResult> rows) {
    out << "replicate,method,status,accuracy,csmf_tv,csmf_tv_generating,excluded_deaths,converged,csmf_abs_errors,error\n";
    for (const auto& r : rows) {
        out << r.replicate_id << ',' << to_string(r.method) << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            out << format_double(r.individual_accuracy) << ',' << format_double(r.csmf_tv) << ','
                << format_double(r.csmf_tv_generating);
        else out << ",,";
        out << ',' << r.excluded_deaths << ',';
        if (r.converged) out << (*r.converged ? "true" : "false");
        else out << "NA";
        out << ',';
        for (std::size_t n = 0; n < r.csmf_abs_errors.size(); ++n)
            out << (n ? ";" : "") << format_double(r.csmf_abs_errors[n]);
        std::string msg = r.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << ',' << msg << '\n';
    }
}

void write_summary_table(std::ostream& out, const ComparisonSummary& summary) {
    out << "scenario,method,metric,succeeded,failed,mean,min,q1,median,q3,p95,max\n";
    for (const auto& ms : summary.methods) {
        for (const auto& [metric, s] : {std::pair{"accuracy", &ms.accuracy}, std::pair{"csmf_tv", &ms.tv}}) {
            out << to_string(summary.scenario) << ',' << to_string(ms.method) << ',' << metric << ',' << ms.succeeded
                << ',' << ms.failed << ',' << format_double(s->mean) << ',' << format_double(s->min) << ','
                << format_double(s->q1) << ',' << format_double(s->median) << ',' << format_double(s->q3) << ','
                << format_double(s->p95) << ',' << format_double(s->max) << '\n';
        }
    }
}

void write_histograms(std::ostream& out, const ComparisonSummary& summary) {
    out << "method,metric,bin_lower,bin_upper,count\n";
    for (const auto& ms : summary.methods) {
        for (const auto& [metric, h] : {std::pair{"accuracy", &ms.accuracy_hist}, std::pair{"csmf_tv", &ms.tv_hist}}) {
            for (std::size_t b = 0; b < h->counts.size(); ++b)
                out << to_string(ms.method) << ',' << metric << ',' << format_double(h->edges[b]) << ','
                    << format_double(h->edges[b + 1]) << ',' << h->counts[b] << '\n';
        }
    }
}

}  // namespace va
