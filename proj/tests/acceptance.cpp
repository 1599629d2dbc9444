// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails. Usage: acceptance [replicates]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "va/core.hpp"
#include "va/errors.hpp"
#include "va/eval.hpp"
#include "va/insilico.hpp"
#include "va/interva.hpp"
#include "va/random.hpp"
#include "va/simgen.hpp"

using namespace va;

namespace {

constexpr std::uint64_t kMasterSeed = 2013;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " [" << detail << "]\n";
    std::cout.flush();
    if (!ok) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> names(const char* prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

struct ScenarioRun {
    ComparisonSummary summary;
    double seconds = 0.0;
};

ScenarioRun run_scenario(Scenario s, std::size_t replicates) {
    ScenarioConfig cfg;
    cfg.scenario = s;
    cfg.seed = kMasterSeed;
    const auto start = std::chrono::steady_clock::now();
    auto result = run_comparison(cfg, replicates, GibbsConfig{});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& iv = result.summary.of(Method::interva);
    const auto& is = result.summary.of(Method::insilicova);
    std::cout << "  " << to_string(s) << ": interva accuracy median " << fmt(iv.accuracy.median) << " [min "
              << fmt(iv.accuracy.min) << ", max " << fmt(iv.accuracy.max) << "], tv p95 " << fmt(iv.tv.p95)
              << "; insilicova accuracy median " << fmt(is.accuracy.median) << " [min " << fmt(is.accuracy.min)
              << ", max " << fmt(is.accuracy.max) << "], tv p95 " << fmt(is.tv.p95) << "; failed "
              << iv.failed + is.failed << "; " << fmt(secs) << " s\n";
    double gen_iv = 0.0, gen_is = 0.0;
    std::vector<double> g_iv, g_is;
    for (const auto& r : result.rows) {
        if (!r.ok) continue;
        (r.method == Method::interva ? g_iv : g_is).push_back(r.csmf_tv_generating);
    }
    gen_iv = describe(g_iv).p95;
    gen_is = describe(g_is).p95;
    std::cout << "  " << to_string(s) << ": tv p95 against the generating CSMF: interva " << fmt(gen_iv)
              << ", insilicova " << fmt(gen_is) << "\n";
    std::cout.flush();
    return {std::move(result.summary), secs};
}

bool all_ok(const ComparisonSummary& s) {
    return s.of(Method::interva).failed == 0 && s.of(Method::insilicova).failed == 0;
}

// Gibbs against exact enumeration on random tiny instances.
void criterion_oracle() {
    Rng rng(derive_seed(kMasterSeed, 0x6f72'6163ULL));
    const std::size_t instances = 24;
    double worst = 0.0;
    std::size_t min_draws = ~std::size_t{0};
    std::size_t max_terms = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t n = 2 + rng() % 3;
        std::size_t j = 1;
        while (std::pow(static_cast<double>(n), static_cast<double>(j + 1)) <= 4096.0 && j < 8) ++j;
        j = 1 + rng() % j;
        const std::size_t k = 1 + rng() % 6;
        std::vector<double> e(k * n);
        for (auto& x : e) x = 0.05 + 0.9 * uniform01(rng);
        std::vector<std::int8_t> cells(j * k);
        for (auto& c : cells) c = rng() % 2;
        const CondProbMatrix p(e, names("s", k), names("c", n));
        const SymptomMatrix s(cells, names("d", j), names("s", k));
        std::vector<double> alpha(n);
        for (auto& a : alpha) a = 0.5 + 1.5 * uniform01(rng);

        GibbsConfig cfg;
        cfg.n_chains = 4;
        cfg.burn_in = 500;
        cfg.n_iterations = 5500;
        cfg.thin = 1;
        cfg.alpha = alpha;
        cfg.prob_clamp_epsilon = 0.0;
        cfg.seed = derive_seed(kMasterSeed, 0x6f72'6163ULL, i + 1);
        const auto summary = summarize(run_gibbs(s, p, cfg));
        const auto exact = exact_posterior_oracle(s, p, alpha);
        min_draws = std::min(min_draws, summary.total_draws);
        max_terms = std::max(max_terms, exact.assignments);
        for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(summary.csmf_mean[c] - exact.csmf_mean[c]));
        for (std::size_t x = 0; x < exact.per_death_probs.size(); ++x)
            worst = std::max(worst, std::abs(summary.per_death_probs[x] - exact.per_death_probs[x]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(5, worst <= 0.02 && min_draws >= 20000 && max_terms <= 4096,
           "Gibbs matches exact enumeration within 0.02 on random instances with N^J <= 4096",
           std::to_string(instances) + " instances, max deviation " + fmt(worst) + ", min retained draws " +
               std::to_string(min_draws) + ", largest N^J " + std::to_string(max_terms) + ", " + fmt(secs) + " s");
}

std::vector<double> direct_interva(std::span<const std::int8_t> row, const CondProbMatrix& p, const Csmf& f) {
    std::vector<double> out(p.causes());
    double total = 0.0;
    for (std::size_t n = 0; n < p.causes(); ++n) {
        double v = f[n];
        for (std::size_t k = 0; k < p.symptoms(); ++k)
            if (row[k] == 1) v *= p(k, n);
        out[n] = v;
        total += v;
    }
    for (auto& v : out) v /= total;
    return out;
}

void criterion_invariants() {
    Rng rng(derive_seed(kMasterSeed, 0x696e'76ULL));
    std::vector<std::string> broken;
    auto check = [&](bool ok, const std::string& name) {
        if (!ok) broken.push_back(name);
    };

    // Simplex of F draws and normalization of L_j.
    {
        ScenarioConfig cfg;
        cfg.deaths = 150;
        cfg.causes = 10;
        cfg.symptoms = 40;
        cfg.seed = 5;
        const auto d = make_scenario(cfg);
        GibbsConfig g;
        g.n_iterations = 400;
        g.burn_in = 200;
        g.thin = 2;
        const auto chains = run_gibbs(d.symptoms, d.p_given_to_methods, g);
        double worst_f = 0.0;
        for (const auto& c : chains)
            for (std::size_t i = 0; i < c.draws(); ++i) {
                const auto f = c.f_draw(i);
                worst_f = std::max(worst_f, std::abs(std::accumulate(f.begin(), f.end(), 0.0) - 1.0));
                for (double v : f) check(v >= 0.0, "simplex (negative)");
            }
        check(worst_f <= 1e-9, "simplex");
        double worst_l = 0.0;
        for (std::size_t j = 0; j < d.symptoms.deaths(); ++j) {
            const auto l = death_cause_likelihoods(d.symptoms.row(j), d.p_given_to_methods, d.true_csmf);
            worst_l = std::max(worst_l, std::abs(std::accumulate(l.begin(), l.end(), 0.0) - 1.0));
        }
        check(worst_l <= 1e-12, "L_j normalization");

        // Seed determinism.
        check(run_gibbs(d.symptoms, d.p_given_to_methods, g) == chains, "seed determinism");
        check(make_scenario(cfg).symptoms == d.symptoms, "scenario determinism");
    }

    // Log-space versus direct products.
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + rng() % 20, n = 2 + rng() % 8, j = 1 + rng() % 20;
        std::vector<double> e(k * n);
        for (auto& x : e) x = 0.01 + 0.98 * uniform01(rng);
        std::vector<std::int8_t> cells(j * k);
        for (auto& c : cells) c = rng() % 2;
        std::vector<double> w(n);
        for (auto& x : w) x = 0.1 + uniform01(rng);
        const CondProbMatrix p(e, names("s", k), names("c", n));
        const SymptomMatrix s(cells, names("d", j), names("s", k));
        const auto f = Csmf::normalized(w, p.cause_names());
        const auto r = run_interva(s, p, f);
        for (std::size_t d = 0; d < j; ++d) {
            const auto ref = direct_interva(s.row(d), p, f);
            for (std::size_t c = 0; c < n; ++c) check(std::abs(r.row(d)[c] - ref[c]) <= 1e-9, "log vs direct");
        }

        // InterVA ignores the probabilities of absent symptoms.
        auto altered = e;
        for (std::size_t kk = 0; kk < k; ++kk)
            if (s(0, kk) == 0)
                for (std::size_t c = 0; c < n; ++c) altered[kk * n + c] = uniform01(rng);
        const SymptomMatrix first(std::vector<std::int8_t>(cells.begin(), cells.begin() + k), {"d0"}, names("s", k));
        check(run_interva(first, CondProbMatrix(altered, p.symptom_names(), p.cause_names()), f).per_death_probs ==
                  run_interva(first, p, f).per_death_probs,
              "absence-blindness");

        // InSilicoVA responds to one flipped symptom.
        const std::size_t flip = rng() % k;
        std::vector<std::int8_t> row(cells.begin(), cells.begin() + k);
        const auto base = death_cause_likelihoods(row, p, f);
        row[flip] = 1 - row[flip];
        const auto flipped = death_cause_likelihoods(row, p, f);
        const auto pr = p.row(flip);
        const bool constant = std::all_of(pr.begin(), pr.end(), [&](double v) { return v == pr[0]; });
        check(constant || flipped != base, "complement sensitivity");
    }

    // Prior recovery with no symptoms.
    {
        const CondProbMatrix p({}, {}, {"a", "b", "c", "d"});
        const SymptomMatrix s({}, names("d", 100), {});
        GibbsConfig g;
        g.alpha = {1.0, 2.0, 3.0, 4.0};
        g.burn_in = 500;
        g.n_iterations = 5500;
        g.thin = 1;
        const auto summary = summarize(run_gibbs(s, p, g));
        for (std::size_t n = 0; n < 4; ++n)
            check(std::abs(summary.csmf_mean[n] - g.alpha[n] / 10.0) <= 0.01, "prior recovery");
    }

    // Rescaling preserves order.
    {
        const auto p = generate_p(80, 20, uniform_grade_weights(), rng);
        const auto q = rescale_p(p, 0.25, 0.75);
        const auto pe = p.entries();
        const auto qe = q.entries();
        std::vector<std::size_t> order(pe.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pe[a] < pe[b]; });
        for (std::size_t i = 1; i < order.size(); ++i) {
            const double dp = pe[order[i]] - pe[order[i - 1]];
            const double dq = qe[order[i]] - qe[order[i - 1]];
            check(dp == 0.0 ? dq == 0.0 : dq > 0.0, "rescale monotonicity");
        }
    }

    std::sort(broken.begin(), broken.end());
    broken.erase(std::unique(broken.begin(), broken.end()), broken.end());
    std::string detail = "simplex, L_j, determinism, log vs direct, absence-blindness, complement sensitivity, "
                         "prior recovery, rescale monotonicity";
    if (!broken.empty()) {
        detail = "broken:";
        for (const auto& b : broken) detail += " " + b + ";";
    }
    report(6, broken.empty(), "invariant property suite", detail);
}

void criterion_examples() {
    std::vector<std::string> broken;
    auto check = [&](bool ok, const std::string& name) {
        if (!ok) broken.push_back(name);
    };
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };

    // Grade scale round-trip.
    const double values[] = {1.0, 0.8, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0001, 0.00001, 0.0};
    for (std::size_t i = 0; i < kGradeCount; ++i) {
        check(kGrades[i].value == values[i], "grade value");
        check(decode_letter(encode_letter(values[i])) == values[i], "grade round-trip");
        check(encode_letter(decode_letter(kGrades[i].label)) == kGrades[i].label, "label round-trip");
    }
    check(decode_letter("I") == 1.0 && decode_letter("N") == 0.0 && decode_letter("E") == 0.00001 &&
              decode_letter("A+") == 0.8,
          "decode examples");
    try {
        decode_letter("Q");
        check(false, "unknown label");
    } catch (const UnknownLabelError& e) {
        check(e.label() == "Q", "unknown label");
    }

    // Validation examples.
    const CondProbMatrix fb({0.1, 0.2, 0.05, 0.01, 0.1, 0.1}, {"fb_long", "fb_short", "fb"}, {"hiv", "sepsis"});
    const auto sum =
        validate_cond_prob_matrix(fb, {{Constraint::Kind::sum_equals, {"fb_long", "fb_short"}, "fb", {"hiv"}}});
    check(sum.size() == 1 && std::abs(sum[0].residual - 0.05) <= 1e-12, "SUM violation");
    const auto leq = validate_cond_prob_matrix(fb, {{Constraint::Kind::less_eq, {"fb_long"}, "fb", {}}});
    check(leq.size() == 1 && leq[0].cause == "sepsis", "LEQ violation");
    check(validate_cond_prob_matrix(fb, {}).empty(), "empty constraint set");

    // InterVA.
    const CondProbMatrix p1({0.8, 0.2}, {"s1"}, {"c1", "c2"});
    const auto uni = Csmf::uniform(p1.cause_names());
    const std::int8_t on[] = {1};
    const std::int8_t off[] = {0};
    const auto lp = interva_propensities(on, p1, uni);
    check(close(std::exp(lp[0]), 0.4) && close(std::exp(lp[1]), 0.1), "propensities [0.4, 0.1]");
    const auto np = interva_normalize(lp);
    check(close(np[0], 0.8) && close(np[1], 0.2), "normalize [0.8, 0.2]");
    const CondProbMatrix p2({0.5, 0.0, 0.5, 0.5}, {"a", "b"}, {"c1", "c2"});
    const std::int8_t both[] = {1, 1};
    check(std::isinf(interva_propensities(both, p2, uni)[1]), "zero factor");
    const double minus_inf = -std::numeric_limits<double>::infinity();
    const double surv[] = {0.0, minus_inf};
    check(interva_normalize(surv) == std::vector<double>{1.0, 0.0}, "single survivor");
    const auto two = run_interva(SymptomMatrix({1, 1}, {"d1", "d2"}, {"s1"}), p1, uni);
    check(close(two.csmf[0], 0.8) && close(two.csmf[1], 0.2), "identical deaths CSMF");
    const auto pass = run_interva(SymptomMatrix({0}, {"d1"}, {"s1"}), p1, Csmf({0.3, 0.7}, {"c1", "c2"}));
    check(close(pass.csmf[0], 0.3) && close(pass.csmf[1], 0.7), "prior pass-through");

    // InSilicoVA.
    const auto l1 = death_cause_likelihoods(on, p1, uni);
    const auto l0 = death_cause_likelihoods(off, p1, uni);
    check(close(l1[0], 0.8) && close(l1[1], 0.2), "L present");
    check(close(l0[0], 0.2) && close(l0[1], 0.8), "L absent");
    const CondProbMatrix pk({0.6, 0.1, 0.3, 0.9}, {"a", "b"}, {"c1", "c2"});
    const std::int8_t sk[] = {1, 0};
    const auto lk = death_cause_likelihoods(sk, pk, Csmf({0.3, 0.7}, {"c1", "c2"}), 0.0);
    const double u1 = 0.3 * 0.6 * 0.7, u2 = 0.7 * 0.1 * 0.1;
    check(close(lk[0], u1 / (u1 + u2)), "K=2 hand evaluation");
    const CondProbMatrix po({0.8, 0.3}, {"s"}, {"c1", "c2"});
    const double a11[] = {1.0, 1.0};
    const auto ex = exact_posterior_oracle(SymptomMatrix({1, 0}, {"d1", "d2"}, {"s"}), po, a11);
    const double w11 = 0.8 * 0.2 / 3, w12 = 0.8 * 0.7 / 6, w21 = 0.3 * 0.2 / 6, w22 = 0.3 * 0.7 / 3;
    const double z = w11 + w12 + w21 + w22;
    check(close(ex.per_death_probs[0], (w11 + w12) / z), "oracle hand enumeration");
    check(close(ex.csmf_mean[0], (w11 * 0.75 + (w12 + w21) * 0.5 + w22 * 0.25) / z), "oracle CSMF mean");
    const auto iv = binomial_interval(10, 10, 0.95);
    check(iv.lower == 1.0 && iv.upper == 1.0, "zero-width interval at frequency 1");
    check(potential_scale_reduction({{0.2, 0.2}, {0.2, 0.2}}) == 1.0, "zero-variance PSRF");

    // Simulation.
    Rng rng(1);
    GradeWeights only_a{};
    only_a[grade_index("A+")] = 1.0;
    const auto only_a_p = generate_p(5, 5, only_a, rng);
    for (double v : only_a_p.entries()) check(v == 0.8, "degenerate grade weights");
    const auto r = rescale_p(CondProbMatrix({0.0, 1.0, 0.5, 1.0}, {"a", "b"}, {"c1", "c2"}), 0.25, 0.75);
    check(r(0, 0) == 0.25 && r(0, 1) == 0.75 && r(1, 0) == 0.5, "rescale endpoints");
    const SymptomMatrix sm({1, 0, kMissing}, {"d"}, {"a", "b", "c"});
    check(inject_reporting_errors(sm, 0, 0, rng) == sm, "zero error rates");
    check(inject_reporting_errors(sm, 1, 1, rng) == SymptomMatrix({0, 1, kMissing}, {"d"}, {"a", "b", "c"}),
          "complement at rate 1");

    // Metrics.
    const std::vector<CauseIndex> t = {0, 1, 2, 3};
    check(individual_accuracy(std::vector<CauseIndex>{0, 1, 2, 0}, t) == 0.75, "accuracy 3 of 4");
    const auto ce = csmf_errors(Csmf({0.6, 0.4}, {"a", "b"}), Csmf({0.5, 0.5}, {"a", "b"}));
    check(close(ce.tv, 0.1), "tv 0.1");
    check(csmf_errors(Csmf({1.0, 0.0}, {"a", "b"}), Csmf({0.0, 1.0}, {"a", "b"})).tv == 1.0, "tv 1");

    std::string detail = "grade scale, validation, interva, insilico, oracle, simgen and metric examples";
    if (!broken.empty()) {
        detail = "broken:";
        for (const auto& b : broken) detail += " " + b + ";";
    }
    report(7, broken.empty(), "Table 1 round-trip and worked examples", detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t replicates = argc > 1 ? std::stoul(argv[1]) : 100;
    std::cout << "acceptance: master seed " << kMasterSeed << ", " << replicates
              << " replicates per scenario, J=800 N=35 K=150\n";

    criterion_examples();
    criterion_invariants();
    criterion_oracle();

    const auto fair = run_scenario(Scenario::fair, replicates);
    const auto rescaled = run_scenario(Scenario::rescaled, replicates);
    const auto errors = run_scenario(Scenario::reporting_errors, replicates);

    const auto& f_iv = fair.summary.of(Method::interva);
    const auto& f_is = fair.summary.of(Method::insilicova);
    const auto& r_iv = rescaled.summary.of(Method::interva);
    const auto& r_is = rescaled.summary.of(Method::insilicova);
    const auto& e_iv = errors.summary.of(Method::interva);
    const auto& e_is = errors.summary.of(Method::insilicova);

    report(1,
           all_ok(fair.summary) && f_is.accuracy.median >= 0.95 && f_is.accuracy.median > f_iv.accuracy.median &&
               fair.seconds < 1800.0,
           "fair: InSilicoVA median accuracy >= 0.95 and strictly above InterVA's, under 30 minutes",
           "insilicova " + fmt(f_is.accuracy.median) + ", interva " + fmt(f_iv.accuracy.median) + ", " +
               fmt(fair.seconds) + " s");

    const double is_shift = std::abs(r_is.accuracy.median - f_is.accuracy.median);
    const double iv_drop = f_iv.accuracy.median - r_iv.accuracy.median;
    const double iv_span = r_iv.accuracy.max - r_iv.accuracy.min;
    report(2, all_ok(rescaled.summary) && is_shift < 0.05 && iv_drop >= 0.10 && iv_span >= 0.20,
           "rescaled: InSilicoVA median moves < 0.05, InterVA median drops >= 0.10, InterVA span >= 0.20",
           "insilicova shift " + fmt(is_shift) + ", interva drop " + fmt(iv_drop) + ", interva span " + fmt(iv_span));

    const double gap = e_is.accuracy.median - e_iv.accuracy.median;
    report(3,
           all_ok(errors.summary) && gap >= 0.15 && e_is.accuracy.median < f_is.accuracy.median &&
               e_iv.accuracy.median < f_iv.accuracy.median,
           "reporting errors: InSilicoVA median >= InterVA median + 0.15, both below fair",
           "gap " + fmt(gap) + ", insilicova " + fmt(f_is.accuracy.median) + " -> " + fmt(e_is.accuracy.median) +
               ", interva " + fmt(f_iv.accuracy.median) + " -> " + fmt(e_iv.accuracy.median));

    report(4, f_iv.tv.p95 > f_is.tv.p95, "fair: InterVA 95th-percentile tv exceeds InSilicoVA's",
           "interva " + fmt(f_iv.tv.p95) + ", insilicova " + fmt(f_is.tv.p95));

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
