#include <doctest.h>

#include <cmath>
#include <limits>

#include "va/errors.hpp"
#include "va/interva.hpp"
#include "va/random.hpp"

using namespace va;

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

CondProbMatrix one_symptom() { return CondProbMatrix({0.8, 0.2}, {"s1"}, {"c1", "c2"}); }

struct Instance {
    CondProbMatrix p;
    SymptomMatrix s;
    Csmf prior;
};

// Random instance with entries away from zero so a plain product cannot underflow.
Instance random_instance(std::size_t j, std::size_t k, std::size_t n, Rng& rng) {
    std::vector<std::string> sym, causes, ids;
    for (std::size_t i = 0; i < k; ++i) sym.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i) causes.push_back("c" + std::to_string(i));
    for (std::size_t i = 0; i < j; ++i) ids.push_back("d" + std::to_string(i));
    std::vector<double> entries(k * n);
    for (auto& e : entries) e = 0.01 + 0.98 * uniform01(rng);
    std::vector<std::int8_t> cells(j * k);
    for (auto& c : cells) c = uniform01(rng) < 0.4 ? 1 : 0;
    std::vector<double> f(n);
    for (auto& x : f) x = 0.1 + uniform01(rng);
    return {CondProbMatrix(entries, sym, causes), SymptomMatrix(cells, ids, sym), Csmf::normalized(f, causes)};
}

// Plain products with no logarithms.
std::vector<double> direct_product(std::span<const std::int8_t> row, const CondProbMatrix& p, const Csmf& f) {
    std::vector<double> prop(p.causes());
    double total = 0.0;
    for (std::size_t n = 0; n < p.causes(); ++n) {
        double v = f[n];
        for (std::size_t k = 0; k < p.symptoms(); ++k)
            if (row[k] == 1) v *= p(k, n);
        prop[n] = v;
        total += v;
    }
    for (auto& v : prop) v /= total;
    return prop;
}

}  // namespace

TEST_CASE("propensities: single present symptom") {
    const auto p = one_symptom();
    const std::int8_t s[] = {1};
    const auto lp = interva_propensities(s, p, Csmf::uniform(p.cause_names()));
    CHECK(lp[0] == doctest::Approx(std::log(0.4)).epsilon(1e-15));
    CHECK(lp[1] == doctest::Approx(std::log(0.1)).epsilon(1e-15));
    CHECK(std::exp(lp[0]) == doctest::Approx(0.4));
    CHECK(std::exp(lp[1]) == doctest::Approx(0.1));
}

TEST_CASE("propensities: no present symptoms give the prior") {
    const CondProbMatrix p({0.3, 0.9, 0.4, 0.6}, {"a", "b"}, {"c1", "c2"});
    const Csmf f({0.25, 0.75}, {"c1", "c2"});
    const std::int8_t s[] = {0, 0};
    const auto lp = interva_propensities(s, p, f);
    CHECK(lp[0] == std::log(0.25));
    CHECK(lp[1] == std::log(0.75));
}

TEST_CASE("propensities: zero factor annihilates") {
    // columns: cause 1 = [0.5, 0.5], cause 2 = [0.0, 0.5]
    const CondProbMatrix p({0.5, 0.0, 0.5, 0.5}, {"a", "b"}, {"c1", "c2"});
    const std::int8_t s[] = {1, 1};
    const auto lp = interva_propensities(s, p, Csmf::uniform(p.cause_names()));
    CHECK(std::isfinite(lp[0]));
    CHECK(lp[1] == kNegInf);
}

TEST_CASE("propensities: dimension checks") {
    const auto p = one_symptom();
    const std::int8_t s[] = {1, 0};
    CHECK_THROWS_AS(interva_propensities(s, p, Csmf::uniform(p.cause_names())), DimensionError);
    const std::int8_t ok[] = {1};
    CHECK_THROWS_AS(interva_propensities(ok, p, Csmf::uniform({"a", "b", "c"})), DimensionError);
}

TEST_CASE("normalize examples") {
    const double a[] = {std::log(0.4), std::log(0.1)};
    const auto pa = interva_normalize(a);
    CHECK(pa[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(pa[1] == doctest::Approx(0.2).epsilon(1e-15));

    const double b[] = {-3.0, -3.0, -3.0, -3.0};
    for (double v : interva_normalize(b)) CHECK(v == 0.25);

    const double c[] = {0.0, kNegInf};
    const auto pc = interva_normalize(c);
    CHECK(pc[0] == 1.0);
    CHECK(pc[1] == 0.0);

    const double d[] = {kNegInf, kNegInf};
    CHECK_THROWS_AS(interva_normalize(d), UndefinedDeathError);

    const double huge[] = {-5000.0, -5001.0};
    const auto ph = interva_normalize(huge);
    CHECK(ph[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("run_interva: identical deaths average to their row") {
    const auto p = one_symptom();
    const SymptomMatrix s({1, 1}, {"d1", "d2"}, {"s1"});
    const auto r = run_interva(s, p, Csmf::uniform(p.cause_names()));
    CHECK(r.csmf[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r.csmf[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(r.excluded_count() == 0);
}

TEST_CASE("run_interva: prior pass-through") {
    const auto p = one_symptom();
    const SymptomMatrix s({0}, {"d1"}, {"s1"});
    const auto r = run_interva(s, p, Csmf({0.3, 0.7}, {"c1", "c2"}));
    CHECK(r.csmf[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(r.csmf[1] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("run_interva: excluded deaths are flagged and left out") {
    const CondProbMatrix p({0.0, 0.0, 0.5, 0.5}, {"a", "b"}, {"c1", "c2"});
    const SymptomMatrix s({1, 0, 0, 1}, {"bad", "good"}, {"a", "b"});
    const auto r = run_interva(s, p, Csmf::uniform(p.cause_names()));
    CHECK(r.propensity_underflow_flags == std::vector<bool>{true, false});
    CHECK(r.excluded_count() == 1);
    CHECK(r.row(0)[0] == 0.0);
    CHECK(r.row(0)[1] == 0.0);
    CHECK(r.csmf[0] == doctest::Approx(0.5));

    const SymptomMatrix all_bad({1, 0}, {"bad"}, {"a", "b"});
    CHECK_THROWS_AS(run_interva(all_bad, p, Csmf::uniform(p.cause_names())), UndefinedDeathError);
}

TEST_CASE("run_interva: missing answers count as absent") {
    const CondProbMatrix p({0.9, 0.1, 0.3, 0.6}, {"a", "b"}, {"c1", "c2"});
    const SymptomMatrix with_missing({1, kMissing}, {"d"}, {"a", "b"});
    const SymptomMatrix with_zero({1, 0}, {"d"}, {"a", "b"});
    const auto f = Csmf::uniform(p.cause_names());
    const auto a = run_interva(with_missing, p, f);
    CHECK(a.per_death_probs == run_interva(with_zero, p, f).per_death_probs);
    CHECK(a.missing_counts == std::vector<std::size_t>{1});
}

TEST_CASE("log-space agrees with direct products on random 20x10x5 instances") {
    Rng rng(20);
    for (int trial = 0; trial < 25; ++trial) {
        const auto inst = random_instance(20, 10, 5, rng);
        const auto r = run_interva(inst.s, inst.p, inst.prior);
        std::vector<double> csmf(5, 0.0);
        for (std::size_t j = 0; j < 20; ++j) {
            const auto ref = direct_product(inst.s.row(j), inst.p, inst.prior);
            double row_total = 0.0;
            for (std::size_t n = 0; n < 5; ++n) {
                CHECK(std::abs(r.row(j)[n] - ref[n]) <= 1e-9);
                row_total += r.row(j)[n];
                csmf[n] += ref[n] / 20.0;
            }
            CHECK(std::abs(row_total - 1.0) <= 1e-9);
        }
        for (std::size_t n = 0; n < 5; ++n) CHECK(std::abs(r.csmf[n] - csmf[n]) <= 1e-9);
    }
}

TEST_CASE("log-space agrees with direct products for every K up to 20") {
    Rng rng(21);
    for (std::size_t k = 1; k <= 20; ++k) {
        const auto inst = random_instance(8, k, 4, rng);
        const auto r = run_interva(inst.s, inst.p, inst.prior);
        for (std::size_t j = 0; j < 8; ++j) {
            const auto ref = direct_product(inst.s.row(j), inst.p, inst.prior);
            for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(r.row(j)[n] - ref[n]) <= 1e-9);
        }
    }
}

TEST_CASE("scaling the prior leaves probabilities unchanged") {
    Rng rng(22);
    const auto inst = random_instance(15, 12, 6, rng);
    const auto base = run_interva(inst.s, inst.p, inst.prior);
    for (std::size_t j = 0; j < 15; ++j) {
        std::vector<double> scaled_log(6);
        const auto lp = interva_propensities(inst.s.row(j), inst.p, inst.prior);
        for (std::size_t n = 0; n < 6; ++n) scaled_log[n] = lp[n] + std::log(37.5);
        const auto probs = interva_normalize(scaled_log);
        for (std::size_t n = 0; n < 6; ++n) CHECK(probs[n] == doctest::Approx(base.row(j)[n]).epsilon(1e-12));
    }
}

TEST_CASE("raising one prior fraction raises that cause's probability") {
    Rng rng(23);
    const auto inst = random_instance(10, 8, 4, rng);
    const auto base = run_interva(inst.s, inst.p, inst.prior);
    for (std::size_t target = 0; target < 4; ++target) {
        std::vector<double> f(inst.prior.fractions().begin(), inst.prior.fractions().end());
        f[target] *= 2.0;
        const auto bumped = run_interva(inst.s, inst.p, Csmf::normalized(f, inst.prior.cause_names()));
        for (std::size_t j = 0; j < 10; ++j) CHECK(bumped.row(j)[target] > base.row(j)[target]);
    }
}

TEST_CASE("changing probabilities of absent symptoms has no effect") {
    Rng rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(1, 15, 5, rng);
        const auto base = run_interva(inst.s, inst.p, inst.prior);
        std::vector<double> entries(inst.p.entries().begin(), inst.p.entries().end());
        for (std::size_t k = 0; k < 15; ++k)
            if (inst.s(0, k) == 0)
                for (std::size_t n = 0; n < 5; ++n) entries[k * 5 + n] = uniform01(rng);
        const CondProbMatrix altered(entries, inst.p.symptom_names(), inst.p.cause_names());
        CHECK(run_interva(inst.s, altered, inst.prior).per_death_probs == base.per_death_probs);
    }
}
