#include "va/cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "text_io.hpp"
#include "va/core.hpp"
#include "va/errors.hpp"
#include "va/eval.hpp"
#include "va/insilico.hpp"
#include "va/interva.hpp"
#include "va/simgen.hpp"

namespace va::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Options shared by every subcommand.
struct Common {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::size_t threads = 1;
    std::string out_dir;
};

// Collects output files and writes the manifest at the end of a run.
class Run {
public:
    Run(std::string subcommand, std::span<const std::string> args, const Common& common)
        : dir_(common.out_dir), started_(utc_now()) {
        manifest_["tool"] = "va";
        manifest_["version"] = kToolVersion;
        manifest_["subcommand"] = std::move(subcommand);
        manifest_["argv"] = std::vector<std::string>(args.begin(), args.end());
        manifest_["seed"] = common.seed;
        manifest_["threads"] = common.threads;
        manifest_["inputs"] = json::object();
        manifest_["resolved"] = json::object();
        fs::create_directories(dir_);
    }

    json& resolved() { return manifest_["resolved"]; }

    void input(const std::string& role, const std::string& path) {
        manifest_["inputs"][role] = {{"path", path}, {"sha256", file_sha256(path)}};
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        const auto path = (fs::path(dir_) / name).string();
        {
            std::ofstream out(path);
            if (!out) throw Error("cannot write '" + path + "'");
            writer(out);
        }
        outputs_.push_back(name);
    }

    void finish() {
        json outs = json::object();
        for (const auto& name : outputs_) outs[name] = file_sha256((fs::path(dir_) / name).string());
        manifest_["outputs"] = outs;
        manifest_["started_at"] = started_;
        manifest_["finished_at"] = utc_now();
        std::ofstream out(fs::path(dir_) / "manifest.json");
        out << manifest_.dump(2) << '\n';
    }

private:
    std::string dir_;
    std::string started_;
    json manifest_;
    std::vector<std::string> outputs_;
};

// "auto" tries letter grades first and falls back to decimals.
CondProbMatrix load_p(const std::string& path, const std::string& mode, std::string& resolved_mode) {
    if (mode == "letters" || mode == "numeric") {
        resolved_mode = mode;
        return load_cond_prob_matrix_file(path, mode == "letters" ? ProbEncoding::letters : ProbEncoding::numeric);
    }
    try {
        resolved_mode = "letters";
        return load_cond_prob_matrix_file(path, ProbEncoding::letters);
    } catch (const UnknownLabelError&) {
        resolved_mode = "numeric";
        return load_cond_prob_matrix_file(path, ProbEncoding::numeric);
    }
}

std::vector<double> parse_alpha(const std::string& text, std::size_t causes) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(parse_double(cell));
    if (out.size() == 1) out.assign(causes, out.front());
    if (out.size() != causes)
        throw DimensionError("alpha has " + std::to_string(out.size()) + " values for " + std::to_string(causes) +
                             " causes");
    return out;
}

struct GibbsFileOptions {
    std::map<std::string, std::string> values;
};

// "key = value" lines: chains, iterations, burn_in, thin, alpha, seed,
// epsilon, level.
GibbsFileOptions load_gibbs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    static const std::set<std::string> known{"chains", "iterations", "burn_in", "thin",
                                             "alpha",  "seed",       "epsilon", "level"};
    GibbsFileOptions out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value' (line " + std::to_string(line_no) + " of " + path + ")");
        std::string key(detail::trim(text.substr(0, eq)));
        if (!known.count(key)) throw ParseError("unknown Gibbs option '" + key + "' in " + path);
        out.values[key] = std::string(detail::trim(text.substr(eq + 1)));
    }
    return out;
}

std::size_t to_count(const std::string& text) {
    const double v = parse_double(text);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ParseError("not a non-negative integer: '" + text + "'");
    return static_cast<std::size_t>(v);
}

json gibbs_json(const GibbsConfig& g) {
    return {{"chains", g.n_chains},
            {"iterations", g.n_iterations},
            {"burn_in", g.burn_in},
            {"thin", g.thin},
            {"alpha", g.alpha},
            {"seed", g.seed},
            {"f_init", g.f_init ? std::vector<double>(g.f_init->fractions().begin(), g.f_init->fractions().end())
                                : std::vector<double>{}},
            {"prob_clamp_epsilon", g.prob_clamp_epsilon}};
}

json scenario_json(const ScenarioConfig& c) {
    std::ostringstream text;
    write_scenario_config(text, c);
    return text.str();
}

void write_matrix_rows(std::ostream& out, const std::vector<std::string>& ids, const std::vector<std::string>& causes,
                       std::span<const double> values) {
    out << "id";
    for (const auto& c : causes) out << ',' << c;
    out << '\n';
    for (std::size_t j = 0; j < ids.size(); ++j) {
        out << ids[j];
        for (std::size_t n = 0; n < causes.size(); ++n) out << ',' << format_double(values[j * causes.size() + n]);
        out << '\n';
    }
}

// Gibbs options shared by insilico and compare.
struct GibbsOptions {
    std::string config_file;
    std::optional<std::size_t> chains, iterations, burn_in, thin;
    std::optional<std::string> alpha;
    std::optional<double> epsilon;

    void attach(CLI::App* sub) {
        sub->add_option("--gibbs-config", config_file, "Gibbs options file (key = value)");
        sub->add_option("--chains", chains, "Number of chains");
        sub->add_option("--iterations", iterations, "Iterations per chain");
        sub->add_option("--burn-in", burn_in, "Burn-in iterations");
        sub->add_option("--thin", thin, "Thinning stride");
        sub->add_option("--alpha", alpha, "Dirichlet prior: one value or a comma list");
        sub->add_option("--epsilon", epsilon, "Probability clamp for likelihoods");
    }

    // Returns the config plus level (from file) when present.
    GibbsConfig build(std::size_t causes, const Common& common, std::optional<double>* level = nullptr) const {
        GibbsConfig g;
        if (!config_file.empty()) {
            const auto file = load_gibbs_file(config_file);
            for (const auto& [key, value] : file.values) {
                if (key == "chains") g.n_chains = to_count(value);
                else if (key == "iterations") g.n_iterations = to_count(value);
                else if (key == "burn_in") g.burn_in = to_count(value);
                else if (key == "thin") g.thin = to_count(value);
                else if (key == "alpha") g.alpha = parse_alpha(value, causes);
                else if (key == "seed") g.seed = to_count(value);
                else if (key == "epsilon") g.prob_clamp_epsilon = parse_double(value);
                else if (key == "level" && level) *level = parse_double(value);
            }
        }
        if (chains) g.n_chains = *chains;
        if (iterations) g.n_iterations = *iterations;
        if (burn_in) g.burn_in = *burn_in;
        if (thin) g.thin = *thin;
        if (alpha) g.alpha = parse_alpha(*alpha, causes);
        if (epsilon) g.prob_clamp_epsilon = *epsilon;
        if (common.seed_given || config_file.empty()) g.seed = common.seed;
        g.threads = common.threads;
        return g;
    }
};

// ---------------------------------------------------------------------------

struct IntervaArgs {
    std::string symptoms, p, p_mode = "auto", prior;
};

int cmd_interva(const IntervaArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out,
                std::ostream& err) {
    std::string mode;
    const auto p = load_p(a.p, a.p_mode, mode);
    const auto s = load_symptom_matrix_file(a.symptoms);
    Csmf prior = a.prior.empty() ? Csmf::uniform(p.cause_names()) : load_csmf_file(a.prior);
    if (prior.cause_names() != p.cause_names()) throw DimensionError("prior causes do not match the matrix causes");

    Run run("interva", argv, common);
    run.input("symptoms", a.symptoms);
    run.input("p", a.p);
    if (!a.prior.empty()) run.input("prior", a.prior);
    run.resolved()["p_mode"] = mode;
    run.resolved()["prior"] = a.prior.empty() ? "uniform (default)" : a.prior;

    const auto result = run_interva(s, p, prior);
    run.write("csmf.csv", [&](std::ostream& o) { write_csmf(o, result.csmf); });
    run.write("per_death_probs.csv", [&](std::ostream& o) {
        o << "id,missing,excluded";
        for (const auto& c : p.cause_names()) o << ',' << c;
        o << '\n';
        for (std::size_t j = 0; j < result.deaths; ++j) {
            const bool excluded = result.propensity_underflow_flags[j];
            o << s.death_ids()[j] << ',' << result.missing_counts[j] << ',' << (excluded ? 1 : 0);
            for (double v : result.row(j)) o << ',' << (excluded ? std::string("NA") : format_double(v));
            o << '\n';
        }
    });
    run.write("exclusions.csv", [&](std::ostream& o) {
        o << "id,reason\n";
        for (std::size_t j = 0; j < result.deaths; ++j)
            if (result.propensity_underflow_flags[j]) o << s.death_ids()[j] << ",zero propensity for every cause\n";
    });
    run.resolved()["excluded_deaths"] = result.excluded_count();
    run.finish();
    if (result.excluded_count() > 0)
        err << "warning: " << result.excluded_count() << " death(s) incompatible with every cause were excluded\n";
    out << "interva: " << result.deaths << " deaths, " << result.causes << " causes, " << result.excluded_count()
        << " excluded\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct InsilicoArgs {
    std::string symptoms, p, p_mode = "auto", prior;
    GibbsOptions gibbs;
    std::optional<double> level;
    bool raw_draws = false;
    bool oracle_check = false;
    std::string fixed_csmf;
    std::size_t draws = 1000;
};

int cmd_insilico(const InsilicoArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out,
                 std::ostream& err) {
    std::string mode;
    const auto p = load_p(a.p, a.p_mode, mode);
    const auto s = load_symptom_matrix_file(a.symptoms).aligned_to(p.symptom_names());
    std::optional<double> file_level;
    GibbsConfig g = a.gibbs.build(p.causes(), common, &file_level);
    const double level = a.level.value_or(file_level.value_or(0.95));
    if (!a.prior.empty()) {
        g.f_init = load_csmf_file(a.prior);
        if (g.f_init->cause_names() != p.cause_names())
            throw DimensionError("initial CSMF causes do not match the matrix causes");
    }
    const GibbsConfig resolved = g.resolved(p.cause_names());

    Run run("insilico", argv, common);
    run.input("symptoms", a.symptoms);
    run.input("p", a.p);
    if (!a.prior.empty()) run.input("f_init", a.prior);
    if (!a.gibbs.config_file.empty()) run.input("gibbs_config", a.gibbs.config_file);
    run.resolved()["p_mode"] = mode;
    run.resolved()["gibbs"] = gibbs_json(resolved);
    run.resolved()["level"] = level;

    if (!a.fixed_csmf.empty()) {
        // Single-death mode under a supplied F.
        run.input("fixed_csmf", a.fixed_csmf);
        const Csmf f = load_csmf_file(a.fixed_csmf);
        if (f.cause_names() != p.cause_names()) throw DimensionError("fixed CSMF causes do not match the matrix");
        run.resolved()["mode"] = "single_death";
        run.resolved()["draws"] = a.draws;
        run.write("single_death.csv", [&](std::ostream& o) {
            o << "id,cause,likelihood,frequency,lower,upper\n";
            for (std::size_t j = 0; j < s.deaths(); ++j) {
                Rng rng = make_rng(resolved.seed, kChainStream + 1, j);
                const auto r = single_death_assign(s.row(j), p, f, a.draws, rng, resolved.prob_clamp_epsilon, level);
                for (std::size_t n = 0; n < p.causes(); ++n) {
                    o << s.death_ids()[j] << ',' << p.cause_names()[n] << ',' << format_double(r.likelihoods[n]);
                    if (r.intervals_available())
                        o << ',' << format_double(r.frequencies[n]) << ',' << format_double(r.intervals[n].lower)
                          << ',' << format_double(r.intervals[n].upper) << '\n';
                    else
                        o << ",NA,NA,NA\n";
                }
            }
        });
        run.finish();
        out << "insilico: single-death assignment for " << s.deaths() << " deaths\n";
        return kExitOk;
    }

    const auto chains = run_gibbs(s, p, resolved);
    const auto summary = summarize(chains, level);
    run.resolved()["mode"] = "gibbs";
    run.resolved()["diagnostics_available"] = summary.diagnostics_available;
    run.resolved()["converged"] = summary.converged;

    run.write("csmf_summary.csv", [&](std::ostream& o) {
        o << "cause,mean,lower,upper,psrf\n";
        for (std::size_t n = 0; n < p.causes(); ++n) {
            o << p.cause_names()[n] << ',' << format_double(summary.csmf_mean[n]) << ','
              << format_double(summary.csmf_intervals[n].lower) << ','
              << format_double(summary.csmf_intervals[n].upper) << ','
              << (summary.diagnostics_available ? format_double(summary.psrf[n]) : "NA") << '\n';
        }
    });
    run.write("per_death_probs.csv",
              [&](std::ostream& o) { write_matrix_rows(o, s.death_ids(), p.cause_names(), summary.per_death_probs); });
    run.write("per_death_probs_rb.csv", [&](std::ostream& o) {
        write_matrix_rows(o, s.death_ids(), p.cause_names(), summary.per_death_probs_rb);
    });
    run.write("per_death_intervals.csv", [&](std::ostream& o) {
        o << "id,cause,probability,lower,upper\n";
        for (std::size_t j = 0; j < s.deaths(); ++j)
            for (std::size_t n = 0; n < p.causes(); ++n) {
                const auto i = j * p.causes() + n;
                o << s.death_ids()[j] << ',' << p.cause_names()[n] << ',' << format_double(summary.per_death_probs[i])
                  << ',' << format_double(summary.per_death_intervals[i].lower) << ','
                  << format_double(summary.per_death_intervals[i].upper) << '\n';
            }
    });
    if (a.raw_draws) {
        run.write("raw_draws.csv", [&](std::ostream& o) {
            o << "chain,draw";
            for (const auto& c : p.cause_names()) o << ',' << c;
            o << '\n';
            for (const auto& c : chains)
                for (std::size_t i = 0; i < c.draws(); ++i) {
                    o << c.chain_id << ',' << i;
                    for (double v : c.f_draw(i)) o << ',' << format_double(v);
                    o << '\n';
                }
        });
    }
    if (a.oracle_check) {
        const auto exact = exact_posterior_oracle(s, p, resolved.alpha, resolved.prob_clamp_epsilon);
        double dev_csmf = 0.0;
        double dev_death = 0.0;
        for (std::size_t n = 0; n < p.causes(); ++n)
            dev_csmf = std::max(dev_csmf, std::abs(exact.csmf_mean[n] - summary.csmf_mean[n]));
        for (std::size_t i = 0; i < exact.per_death_probs.size(); ++i)
            dev_death = std::max(dev_death, std::abs(exact.per_death_probs[i] - summary.per_death_probs[i]));
        run.resolved()["oracle_max_deviation_csmf"] = dev_csmf;
        run.resolved()["oracle_max_deviation_per_death"] = dev_death;
        run.write("oracle_check.csv", [&](std::ostream& o) {
            o << "quantity,max_abs_deviation\ncsmf_mean," << format_double(dev_csmf) << "\nper_death,"
              << format_double(dev_death) << '\n';
        });
        out << "oracle check: max |gibbs - exact| csmf " << format_double(dev_csmf) << ", per-death "
            << format_double(dev_death) << '\n';
    }
    run.finish();
    if (!summary.diagnostics_available)
        err << "note: convergence diagnostics unavailable with a single chain\n";
    else if (!summary.converged)
        err << "warning: potential scale reduction >= " << kPsrfThreshold << " for some cause\n";
    out << "insilico: " << summary.total_draws << " retained draws over " << chains.size() << " chain(s)"
        << (summary.diagnostics_available ? (summary.converged ? ", converged" : ", not converged") : "") << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScenarioArgs {
    std::string config;
    std::optional<std::string> scenario;
    std::optional<std::size_t> deaths, causes, symptoms;
    std::optional<double> fn_rate, fp_rate;
    std::string empirical_p;
    std::string empirical_p_mode = "auto";

    void attach(CLI::App* sub) {
        sub->add_option("--config", config, "Scenario config file (key = value)");
        sub->add_option("--scenario", scenario, "fair | rescaled | reporting_errors");
        sub->add_option("--deaths", deaths, "Deaths per dataset");
        sub->add_option("--causes", causes, "Number of causes");
        sub->add_option("--symptoms", symptoms, "Number of symptoms");
        sub->add_option("--false-negative-rate", fn_rate, "Reporting-error rate for present symptoms");
        sub->add_option("--false-positive-rate", fp_rate, "Reporting-error rate for absent symptoms");
        sub->add_option("--empirical-p", empirical_p, "Matrix whose grade frequencies become the sampling weights");
    }

    ScenarioConfig build(const Common& common, std::string& empirical_mode) const {
        ScenarioConfig cfg = config.empty() ? ScenarioConfig{} : load_scenario_config_file(config);
        if (scenario) cfg.scenario = parse_scenario(*scenario);
        if (deaths) cfg.deaths = *deaths;
        if (causes) cfg.causes = *causes;
        if (symptoms) cfg.symptoms = *symptoms;
        if (fn_rate) cfg.false_negative_rate = *fn_rate;
        if (fp_rate) cfg.false_positive_rate = *fp_rate;
        if (!empirical_p.empty())
            cfg.grade_weights = empirical_grade_weights(load_p(empirical_p, empirical_p_mode, empirical_mode));
        if (common.seed_given || config.empty()) cfg.seed = common.seed;
        cfg.validate();
        return cfg;
    }
};

int cmd_simulate(const ScenarioArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out) {
    std::string empirical_mode;
    const auto cfg = a.build(common, empirical_mode);
    Run run("simulate", argv, common);
    if (!a.config.empty()) run.input("scenario_config", a.config);
    if (!a.empirical_p.empty()) run.input("empirical_p", a.empirical_p);
    run.resolved()["scenario"] = scenario_json(cfg);

    const auto data = make_scenario(cfg);
    run.write("symptoms.csv", [&](std::ostream& o) { write_symptom_matrix(o, data.symptoms); });
    run.write("truth.csv", [&](std::ostream& o) {
        o << "id,cause\n";
        for (std::size_t j = 0; j < data.true_causes.size(); ++j)
            o << data.symptoms.death_ids()[j] << ',' << data.p_true.cause_names()[data.true_causes[j]] << '\n';
    });
    run.write("true_csmf.csv", [&](std::ostream& o) { write_csmf(o, data.true_csmf); });
    run.write("empirical_csmf.csv", [&](std::ostream& o) { write_csmf(o, data.empirical_csmf); });
    run.write("p_true.csv", [&](std::ostream& o) { write_cond_prob_matrix(o, data.p_true); });
    run.write("p_given.csv", [&](std::ostream& o) { write_cond_prob_matrix(o, data.p_given_to_methods); });
    run.write("scenario.cfg", [&](std::ostream& o) { write_scenario_config(o, cfg); });
    run.finish();
    out << "simulate: " << to_string(cfg.scenario) << " dataset with " << cfg.deaths << " deaths, " << cfg.causes
        << " causes, " << cfg.symptoms << " symptoms\n";
    return kExitOk;
}

struct CompareArgs {
    ScenarioArgs scenario;
    GibbsOptions gibbs;
    std::size_t replicates = 100;
    std::size_t bins = 20;
    std::string interva_prior = "uniform";
};

int cmd_compare(const CompareArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out) {
    std::string empirical_mode;
    const auto cfg = a.scenario.build(common, empirical_mode);
    GibbsConfig g = a.gibbs.build(cfg.causes, common);
    g.validate(cfg.causes);
    ComparisonOptions options;
    options.threads = common.threads;
    options.histogram_bins = a.bins;
    if (a.interva_prior == "truth") options.interva_prior = IntervaPrior::truth;
    else if (a.interva_prior != "uniform") throw InvariantError("--interva-prior must be uniform or truth");

    Run run("compare", argv, common);
    if (!a.scenario.config.empty()) run.input("scenario_config", a.scenario.config);
    if (!a.scenario.empirical_p.empty()) run.input("empirical_p", a.scenario.empirical_p);
    if (!a.gibbs.config_file.empty()) run.input("gibbs_config", a.gibbs.config_file);
    run.resolved()["scenario"] = scenario_json(cfg);
    run.resolved()["gibbs"] = gibbs_json(g);
    run.resolved()["replicates"] = a.replicates;
    run.resolved()["histogram_bins"] = a.bins;
    run.resolved()["interva_prior"] = a.interva_prior;

    const auto result = run_comparison(cfg, a.replicates, g, options);
    run.write("replicates.csv", [&](std::ostream& o) { write_replicate_table(o, result.rows); });
    run.write("summary.csv", [&](std::ostream& o) { write_summary_table(o, result.summary); });
    run.write("histograms.csv", [&](std::ostream& o) { write_histograms(o, result.summary); });
    run.finish();
    for (const auto& m : result.summary.methods)
        out << to_string(m.method) << ": median accuracy " << format_double(m.accuracy.median) << ", median csmf tv "
            << format_double(m.tv.median) << ", failed " << m.failed << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
    std::string symptoms, p, p_mode = "auto";
    std::optional<std::string> alpha;
    double epsilon = 0.0;
};

int cmd_oracle(const OracleArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out) {
    std::string mode;
    const auto p = load_p(a.p, a.p_mode, mode);
    const auto s = load_symptom_matrix_file(a.symptoms).aligned_to(p.symptom_names());
    const auto alpha = a.alpha ? parse_alpha(*a.alpha, p.causes()) : std::vector<double>(p.causes(), 1.0);
    Run run("oracle", argv, common);
    run.input("symptoms", a.symptoms);
    run.input("p", a.p);
    run.resolved()["p_mode"] = mode;
    run.resolved()["alpha"] = alpha;
    run.resolved()["epsilon"] = a.epsilon;
    const auto exact = exact_posterior_oracle(s, p, alpha, a.epsilon);
    run.write("oracle_csmf.csv", [&](std::ostream& o) {
        o << "cause,mean\n";
        for (std::size_t n = 0; n < p.causes(); ++n)
            o << p.cause_names()[n] << ',' << format_double(exact.csmf_mean[n]) << '\n';
    });
    run.write("oracle_per_death.csv",
              [&](std::ostream& o) { write_matrix_rows(o, s.death_ids(), p.cause_names(), exact.per_death_probs); });
    run.finish();
    out << "oracle: enumerated " << exact.assignments << " assignments\n";
    return kExitOk;
}

struct ValidateArgs {
    std::string p, p_mode = "auto", constraints;
    double tol = kDefaultValidationTolerance;
};

int cmd_validate(const ValidateArgs& a, const Common& common, std::span<const std::string> argv, std::ostream& out) {
    std::string mode;
    const auto p = load_p(a.p, a.p_mode, mode);
    const auto constraints = a.constraints.empty() ? ConstraintSet{} : load_constraints_file(a.constraints);
    Run run("validate-p", argv, common);
    run.input("p", a.p);
    if (!a.constraints.empty()) run.input("constraints", a.constraints);
    run.resolved()["p_mode"] = mode;
    run.resolved()["tol"] = a.tol;
    const auto report = validate_cond_prob_matrix(p, constraints, a.tol);
    run.write("validation_report.csv", [&](std::ostream& o) {
        o << "constraint_index,constraint,cause,observed,residual\n";
        for (const auto& v : report) {
            o << v.constraint_index << ',' << v.constraint << ',' << v.cause << ',';
            for (std::size_t i = 0; i < v.observed.size(); ++i) o << (i ? ";" : "") << format_double(v.observed[i]);
            o << ',' << format_double(v.residual) << '\n';
        }
    });
    run.resolved()["violations"] = report.size();
    run.finish();
    out << "validate-p: " << report.size() << " violation(s) across " << constraints.size() << " constraint(s)\n";
    return report.empty() ? kExitOk : kExitFindings;
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err);

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Verbal-autopsy cause assignment: InterVA and InSilicoVA", "va"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "Master random seed")->each([&](const std::string&) {
            common.seed_given = true;
        });
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", common.out_dir, "Output directory")->required();
    };
    auto add_p = [](CLI::App* sub, std::string& path, std::string& mode) {
        sub->add_option("--p", path, "Conditional probability matrix file")->required();
        sub->add_option("--p-mode", mode, "letters | numeric | auto")
            ->check(CLI::IsMember({"letters", "numeric", "auto"}));
    };

    IntervaArgs iv;
    auto* interva = app.add_subcommand("interva", "Deterministic InterVA assignment");
    interva->add_option("--symptoms", iv.symptoms, "Symptom file")->required();
    add_p(interva, iv.p, iv.p_mode);
    interva->add_option("--prior", iv.prior, "Prior CSMF file (default uniform)");
    add_common(interva);

    InsilicoArgs is;
    auto* insilico = app.add_subcommand("insilico", "InSilicoVA Gibbs sampler");
    insilico->add_option("--symptoms", is.symptoms, "Symptom file")->required();
    add_p(insilico, is.p, is.p_mode);
    insilico->add_option("--prior", is.prior, "Initial CSMF for every chain");
    is.gibbs.attach(insilico);
    insilico->add_option("--level", is.level, "Credible level");
    insilico->add_flag("--raw-draws", is.raw_draws, "Write every retained CSMF draw");
    insilico->add_flag("--oracle-check", is.oracle_check, "Compare against exact enumeration (tiny inputs)");
    insilico->add_option("--fixed-csmf", is.fixed_csmf, "Assign each death independently under this CSMF");
    insilico->add_option("--draws", is.draws, "Categorical draws per death with --fixed-csmf");
    add_common(insilico);

    ScenarioArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
    sim.attach(simulate);
    add_common(simulate);

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "Replicate comparison of both methods");
    cmp.scenario.attach(compare);
    cmp.gibbs.attach(compare);
    compare->add_option("--replicates", cmp.replicates, "Number of simulated datasets");
    compare->add_option("--bins", cmp.bins, "Histogram bins")->check(CLI::PositiveNumber);
    compare->add_option("--interva-prior", cmp.interva_prior, "uniform | truth");
    add_common(compare);

    OracleArgs orc;
    auto* oracle = app.add_subcommand("oracle", "Exact posterior by enumeration");
    oracle->add_option("--symptoms", orc.symptoms, "Symptom file")->required();
    add_p(oracle, orc.p, orc.p_mode);
    oracle->add_option("--alpha", orc.alpha, "Dirichlet prior: one value or a comma list");
    oracle->add_option("--epsilon", orc.epsilon, "Probability clamp (default 0)");
    add_common(oracle);

    ValidateArgs val;
    auto* validate = app.add_subcommand("validate-p", "Check a matrix against consistency constraints");
    add_p(validate, val.p, val.p_mode);
    validate->add_option("--constraints", val.constraints, "Constraint file");
    validate->add_option("--tol", val.tol, "Tolerance for SUM constraints");
    add_common(validate);

    std::string manifest_path;
    std::string replay_out;
    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("manifest", manifest_path, "manifest.json")->required();
    replay->add_option("--out", replay_out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    if (interva->parsed()) return cmd_interva(iv, common, args, out, err);
    if (insilico->parsed()) return cmd_insilico(is, common, args, out, err);
    if (simulate->parsed()) return cmd_simulate(sim, common, args, out);
    if (compare->parsed()) return cmd_compare(cmp, common, args, out);
    if (oracle->parsed()) return cmd_oracle(orc, common, args, out);
    if (validate->parsed()) return cmd_validate(val, common, args, out);
    if (replay->parsed()) return cmd_replay(manifest_path, replay_out, out, err);
    return kExitInput;
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open '" + manifest_path + "'");
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what());
    }
    if (manifest.value("version", "") != kToolVersion)
        err << "warning: manifest written by version " << manifest.value("version", "?") << '\n';
    std::vector<std::string> argv = manifest.at("argv").get<std::vector<std::string>>();
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
        if (argv[i] == "--out") argv[i + 1] = out_dir;
    for (auto& a : argv)
        if (a.rfind("--out=", 0) == 0) a = "--out=" + out_dir;
    return dispatch(argv, out, err);
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const DimensionError& e) {
        err << "dimension error: " << e.what() << '\n';
        return kExitDimension;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvariantError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace va::cli
