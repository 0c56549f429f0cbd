// Command-line front end: fitting, inference, degrees-of-freedom reports,
// the simulation study, and the two bundled case studies.
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cirls/config.hpp"
#include "cirls/dof.hpp"
#include "cirls/fit.hpp"
#include "cirls/inference.hpp"
#include "cirls/io.hpp"
#include "cirls/sim.hpp"

#ifndef CIRLS_DEFAULT_DATA_DIR
#define CIRLS_DEFAULT_DATA_DIR "data"
#endif

namespace {

constexpr const char *kVersion = "cirls 1.0.0";

using cirls::Json;

// Exit codes: 0 ok, 2 input error, 3 numerical error.
int exit_code_for(cirls::ErrorCode code)
{
    using cirls::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidData:
    case ErrorCode::MissingDataset:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::TooFewIndices:
    case ErrorCode::RunTooShort:
    case ErrorCode::ZeroRow:
    case ErrorCode::UnboundedRow:
    case ErrorCode::InvalidBounds:
    case ErrorCode::TooManyConstraints:
    case ErrorCode::SupportViolation:
    case ErrorCode::EmptyInterval:
    case ErrorCode::TooFewDraws:
    case ErrorCode::NonPositiveDf:
        return 2;
    default:
        return 3;
    }
}

std::string fmt(double v) { return cirls::format_double(v); }

void write_text(const std::filesystem::path &path, const std::string &content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        cirls::fail(cirls::ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
    out << content;
}

struct FitArtifacts {
    cirls::FitResult fit;
    cirls::FitResult unc;
    std::optional<cirls::CoefSummary> summary;
    std::optional<cirls::CoefDraws> draws;
    cirls::DofReport dof;
    cirls::InformationCriteria ic;
};

// Shared pipeline behind fit/edf/casestudy: constrained fit, unconstrained
// companion, optional TMVN inference, edf, information criteria.
FitArtifacts run_pipeline(const cirls::ModelSpec &spec, std::uint64_t seed, int n_draws,
                          double level, int edf_sims, bool allow_nonconverged)
{
    FitArtifacts art;
    art.unc = cirls::unconstrained_fit(spec); // also surfaces rank deficiency early
    art.fit = cirls::fit(spec);
    if (!art.fit.converged && !allow_nonconverged)
        cirls::fail(cirls::ErrorCode::MaxIterationsExceeded,
                    "fit did not converge in " + std::to_string(spec.control.max_iter) +
                        " iterations (use --allow-nonconverged to accept)");

    if (n_draws > 0) {
        cirls::TmvnSpec tmvn = cirls::build_tmvn(art.unc, spec.X, spec.fam, spec.cs);
        art.draws = cirls::sample(tmvn, n_draws, seed);
        art.summary = cirls::summarize(*art.draws, level);
    }

    if (edf_sims < 100)
        cirls::fail(cirls::ErrorCode::InvalidConfig, "edf_sims must be at least 100");
    std::uint64_t edf_seed = cirls::CounterRng::derive(seed, {0x646653ULL});
    art.dof = cirls::expected_df(art.unc, spec.X, spec.cs, edf_sims, edf_seed);
    art.dof.odf = cirls::observed_df(art.fit);
    art.ic = cirls::information_criteria(art.fit, spec.fam, spec.y, art.dof.edf);
    return art;
}

Json fit_report_json(const std::string &command, const FitArtifacts &art,
                     const cirls::ModelSpec &spec, const std::vector<std::string> &names,
                     std::uint64_t seed, const std::string &hash)
{
    Json rep;
    rep["software"] = kVersion;
    rep["command"] = command;
    rep["seed"] = seed;
    rep["config_hash"] = hash;
    rep["family"] = spec.fam.name();
    rep["n"] = spec.n();
    rep["p"] = spec.p();

    Json coefs = Json::array();
    for (int j = 0; j < spec.p(); ++j) {
        Json c;
        c["name"] = names[static_cast<std::size_t>(j)];
        c["estimate"] = art.fit.beta(j);
        if (art.summary) {
            c["sd"] = art.summary->sd(j);
            c["ci_low"] = art.summary->ci_low(j);
            c["ci_high"] = art.summary->ci_high(j);
        }
        coefs.push_back(c);
    }
    rep["coefficients"] = coefs;

    rep["deviance"] = art.fit.deviance;
    rep["dispersion"] = art.fit.dispersion;
    rep["odf"] = art.dof.odf;
    rep["edf"] = art.dof.edf;
    rep["aic"] = art.ic.aic;
    rep["bic"] = art.ic.bic;
    rep["converged"] = art.fit.converged;
    rep["iterations"] = art.fit.iterations;

    Json active = Json::array();
    for (const auto &[row, side] : art.fit.active) {
        Json a;
        a["row"] = row;
        a["side"] = side == cirls::BoundSide::lower ? "lower" : "upper";
        active.push_back(a);
    }
    rep["active_constraints"] = active;

    if (art.summary) {
        Json inf;
        inf["n_draws"] = art.draws->n_draws;
        inf["level"] = art.summary->level;
        inf["burn_in"] = art.draws->diagnostics.burn_in;
        inf["thinning"] = art.draws->diagnostics.thinning;
        rep["inference"] = inf;
    }
    return rep;
}

std::string coefficients_csv(const FitArtifacts &art, const std::vector<std::string> &names)
{
    std::ostringstream out;
    bool ci = art.summary.has_value();
    out << (ci ? "name,estimate,sd,ci_low,ci_high\n" : "name,estimate\n");
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << names[j] << ',' << fmt(art.fit.beta(static_cast<Eigen::Index>(j)));
        if (ci) {
            auto i = static_cast<Eigen::Index>(j);
            out << ',' << fmt(art.summary->sd(i)) << ',' << fmt(art.summary->ci_low(i)) << ','
                << fmt(art.summary->ci_high(i));
        }
        out << '\n';
    }
    return out.str();
}

std::string draws_csv(const cirls::CoefDraws &draws, const std::vector<std::string> &names)
{
    std::ostringstream out;
    for (std::size_t j = 0; j < names.size(); ++j)
        out << (j ? "," : "") << names[j];
    out << '\n';
    for (int i = 0; i < draws.draws.rows(); ++i) {
        for (int j = 0; j < draws.draws.cols(); ++j)
            out << (j ? "," : "") << fmt(draws.draws(i, j));
        out << '\n';
    }
    return out.str();
}

void emit_fit_outputs(const std::filesystem::path &out_dir, const std::string &stem,
                      const Json &report, const FitArtifacts &art,
                      const std::vector<std::string> &names, bool emit_json, bool emit_csv,
                      bool emit_draws)
{
    std::filesystem::create_directories(out_dir);
    if (emit_json)
        write_text(out_dir / (stem + ".json"), report.dump(2) + "\n");
    if (emit_csv)
        write_text(out_dir / ("coefficients" + stem.substr(3) + ".csv"),
                   coefficients_csv(art, names));
    if (emit_draws && art.draws)
        write_text(out_dir / ("draws" + stem.substr(3) + ".csv"), draws_csv(*art.draws, names));
}

// ---- fit ----------------------------------------------------------------

struct CommonFlags {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> n_draws_override;
    bool emit_draws = false;
    bool allow_nonconverged = false;
};

int cmd_fit(const CommonFlags &flags)
{
    std::ifstream in(flags.config_path);
    if (!in)
        cirls::fail(cirls::ErrorCode::InvalidConfig,
                    "cannot open config '" + flags.config_path + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        cirls::fail(cirls::ErrorCode::InvalidConfig,
                    std::string("config is not valid JSON: ") + e.what());
    }
    cirls::RunConfig cfg = cirls::run_config_from_json(j);
    if (flags.seed_override)
        cfg.inference.seed = *flags.seed_override;
    if (flags.n_draws_override)
        cfg.inference.n_draws = *flags.n_draws_override;
    if (!flags.out_override.empty())
        cfg.out_dir = flags.out_override;

    // Hash the effective configuration (file plus flag overrides).
    Json effective = j;
    effective["inference"]["seed"] = cfg.inference.seed;
    effective["inference"]["n_draws"] = cfg.inference.n_draws;
    std::string hash = cirls::config_hash(effective);

    cirls::Table table = cirls::read_csv(cfg.data_path);
    cirls::AssembledModel am = cirls::assemble_model(cfg, table);

    FitArtifacts art = run_pipeline(am.spec, cfg.inference.seed, cfg.inference.n_draws,
                                    cfg.inference.level, cfg.edf_sims,
                                    flags.allow_nonconverged);
    Json report = fit_report_json("fit", art, am.spec, am.coef_names, cfg.inference.seed, hash);
    emit_fit_outputs(cfg.out_dir, "fit", report, art, am.coef_names, cfg.emit_json,
                     cfg.emit_csv, flags.emit_draws);
    return 0;
}

// ---- edf ----------------------------------------------------------------

int cmd_edf(const CommonFlags &flags, int n_sim)
{
    std::ifstream in(flags.config_path);
    if (!in)
        cirls::fail(cirls::ErrorCode::InvalidConfig,
                    "cannot open config '" + flags.config_path + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        cirls::fail(cirls::ErrorCode::InvalidConfig,
                    std::string("config is not valid JSON: ") + e.what());
    }
    cirls::RunConfig cfg = cirls::run_config_from_json(j);
    if (flags.seed_override)
        cfg.inference.seed = *flags.seed_override;
    if (!flags.out_override.empty())
        cfg.out_dir = flags.out_override;

    Json effective = j;
    effective["inference"]["seed"] = cfg.inference.seed;
    effective["edf_sims"] = n_sim;
    std::string hash = cirls::config_hash(effective);

    cirls::Table table = cirls::read_csv(cfg.data_path);
    cirls::AssembledModel am = cirls::assemble_model(cfg, table);

    cirls::FitResult con = cirls::fit(am.spec);
    cirls::FitResult unc = cirls::unconstrained_fit(am.spec);
    std::uint64_t edf_seed = cirls::CounterRng::derive(cfg.inference.seed, {0x646653ULL});
    cirls::DofReport rep = cirls::expected_df(unc, am.spec.X, am.spec.cs, n_sim, edf_seed);

    Json out;
    out["software"] = kVersion;
    out["command"] = "edf";
    out["seed"] = cfg.inference.seed;
    out["config_hash"] = hash;
    out["n_sim"] = rep.n_sim;
    out["odf"] = cirls::observed_df(con);
    out["edf"] = rep.edf;
    Json dist;
    for (const auto &[k, prob] : rep.active_count_distribution)
        dist[std::to_string(k)] = prob;
    out["active_count_distribution"] = dist;

    std::filesystem::create_directories(cfg.out_dir);
    write_text(std::filesystem::path(cfg.out_dir) / "edf.json", out.dump(2) + "\n");
    return 0;
}

// ---- simulate -----------------------------------------------------------

int cmd_simulate(int dgm, const std::string &gamma_grid, int n_sim, std::uint64_t seed,
                 int n, int inference_draws, int edf_sims, const std::string &out_dir)
{
    std::vector<double> grid;
    std::stringstream ss(gamma_grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char *end = nullptr;
        double g = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            cirls::fail(cirls::ErrorCode::InvalidConfig,
                        "gamma grid entry '" + tok + "' is not a number");
        if (g < -1.0 || g > 1.0)
            cirls::fail(cirls::ErrorCode::InvalidConfig,
                        "gamma grid values must lie in [-1, 1], got " + tok);
        grid.push_back(g);
    }
    if (grid.empty())
        cirls::fail(cirls::ErrorCode::InvalidConfig, "gamma grid is empty");
    if (dgm != 1 && dgm != 2)
        cirls::fail(cirls::ErrorCode::InvalidConfig, "dgm must be 1 or 2");

    Json effective;
    effective["command"] = "simulate";
    effective["dgm"] = dgm;
    effective["gamma_grid"] = grid;
    effective["n_sim"] = n_sim;
    effective["n"] = n;
    effective["seed"] = seed;
    effective["inference_draws"] = inference_draws;
    effective["edf_sims"] = edf_sims;
    std::string hash = cirls::config_hash(effective);

    const int p = dgm == 1 ? 3 : 5;
    std::vector<std::string> coef_names;
    if (dgm == 1)
        coef_names = {"(Intercept)", "x1", "x2"};
    else
        for (int j = 1; j <= 5; ++j)
            coef_names.push_back("level" + std::to_string(j));

    std::ostringstream csv;
    csv << "dgm,gamma,coefficient,variant,sq_bias,se,rmse,rel_var_error,coverage,"
           "be_coverage,mean_odf,edf_median,edf_iqr,n_used,n_failed,seed,config_hash\n";
    Json summary;
    summary["software"] = kVersion;
    summary["command"] = "simulate";
    summary["seed"] = seed;
    summary["config_hash"] = hash;
    Json per_gamma = Json::array();

    for (double gamma : grid) {
        cirls::DgmConfig cfg;
        cfg.dgm = dgm == 1 ? cirls::Dgm::nonneg_regression : cirls::Dgm::nondecreasing_strata;
        cfg.gamma = gamma;
        cfg.n = n;
        cfg.n_sim = n_sim;
        cfg.seed = cirls::CounterRng::derive(seed, {static_cast<std::uint64_t>(dgm),
                                                    std::bit_cast<std::uint64_t>(gamma)});
        cfg.inference_draws = inference_draws;
        cfg.edf_sims = edf_sims;
        cirls::SimMetrics m = cirls::run_study(cfg);

        auto emit = [&](const cirls::VariantMetrics &vm, const char *variant) {
            for (int j = 0; j < p; ++j)
                csv << dgm << ',' << fmt(gamma) << ',' << coef_names[static_cast<std::size_t>(j)]
                    << ',' << variant << ',' << fmt(vm.sq_bias(j)) << ',' << fmt(vm.se(j)) << ','
                    << fmt(vm.rmse(j)) << ',' << fmt(vm.rel_var_error(j)) << ','
                    << fmt(vm.coverage(j)) << ',' << fmt(vm.be_coverage(j)) << ','
                    << fmt(vm.mean_odf) << ',' << fmt(m.edf_median) << ',' << fmt(m.edf_iqr)
                    << ',' << m.n_used << ',' << m.n_failed << ',' << seed << ',' << hash << '\n';
        };
        emit(m.constrained, "constrained");
        emit(m.unconstrained, "unconstrained");

        Json g;
        g["gamma"] = gamma;
        g["n_used"] = m.n_used;
        g["n_failed"] = m.n_failed;
        g["mean_odf_constrained"] = m.constrained.mean_odf;
        g["edf_median"] = m.edf_median;
        g["edf_iqr"] = m.edf_iqr;
        Json deltas = Json::array();
        for (int j = 0; j < p; ++j) {
            Json d;
            d["coefficient"] = coef_names[static_cast<std::size_t>(j)];
            d["rmse_delta"] = m.rmse_delta(j);
            d["sq_bias_delta"] = m.sq_bias_delta(j);
            d["se_delta"] = m.se_delta(j);
            deltas.push_back(d);
        }
        g["deltas"] = deltas;
        per_gamma.push_back(g);
    }
    summary["results"] = per_gamma;

    std::filesystem::create_directories(out_dir);
    write_text(std::filesystem::path(out_dir) / "metrics.csv", csv.str());
    write_text(std::filesystem::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    return 0;
}

// ---- casestudy ----------------------------------------------------------

cirls::Table load_bundled(const std::string &data_dir, const std::string &file)
{
    std::filesystem::path path = std::filesystem::path(data_dir) / file;
    if (!std::filesystem::exists(path))
        cirls::fail(cirls::ErrorCode::MissingDataset,
                    "bundled dataset '" + path.string() +
                        "' not found; pass --data-dir pointing at the repository's data/ "
                        "directory, which ships " + file);
    return cirls::read_csv(path.string());
}

int cmd_casestudy(const std::string &name, const std::string &data_dir,
                  const std::string &out_dir, std::uint64_t seed, int n_draws)
{
    Json effective;
    effective["command"] = "casestudy";
    effective["name"] = name;
    effective["seed"] = seed;
    effective["n_draws"] = n_draws;
    std::string hash = cirls::config_hash(effective);

    if (name == "isotonic_warming") {
        cirls::Table t = load_bundled(data_dir, "temperature_anomaly.csv");
        cirls::Vector y = t.numeric_column("anomaly");
        cirls::Vector years = t.numeric_column("year");
        const int n = static_cast<int>(y.size());

        cirls::ModelSpec spec;
        spec.X = cirls::Matrix::Identity(n, n); // one indicator per year
        spec.y = y;
        spec.fam = cirls::FamilySpec::gaussian();
        spec.cs = cirls::build_monotone_increasing(n, 1, n);

        std::vector<std::string> names;
        for (int i = 0; i < n; ++i)
            names.push_back("y" + std::to_string(static_cast<long>(years(i))));

        FitArtifacts art = run_pipeline(spec, seed, n_draws, 0.95, 200, false);
        Json report = fit_report_json("casestudy", art, spec, names, seed, hash);
        report["casestudy"] = name;
        // odf counts the distinct fitted levels, the changepoint measure here
        report["changepoints"] = art.dof.odf;
        emit_fit_outputs(out_dir, "fit", report, art, names, true, true, false);
        return 0;
    }
    if (name == "gdp_composition") {
        cirls::Table t = load_bundled(data_dir, "gdp_life_expectancy.csv");
        const int n = t.n_rows();
        const std::vector<std::string> comps = {"share_agriculture", "share_industry",
                                                "share_construction", "share_trade",
                                                "share_transport",   "share_other"};
        cirls::Matrix X(n, 8);
        X.col(0).setOnes();
        std::vector<std::string> names = {"(Intercept)"};
        for (std::size_t j = 0; j < comps.size(); ++j) {
            X.col(static_cast<Eigen::Index>(j + 1)) =
                t.numeric_column(comps[j]).array().log();
            names.push_back("log_" + comps[j]);
        }
        X.col(7) = t.numeric_column("gdp_total").array().log();
        names.push_back("log_gdp_total");

        for (const std::string &sex : {"men", "women"}) {
            cirls::ModelSpec spec;
            spec.X = X;
            spec.y = t.numeric_column("life_exp_" + sex);
            spec.fam = cirls::FamilySpec::gaussian();
            spec.cs = cirls::build_sumzero(8, {2, 3, 4, 5, 6, 7});

            FitArtifacts art = run_pipeline(spec, seed, n_draws, 0.95, 200, false);
            Json report = fit_report_json("casestudy", art, spec, names, seed, hash);
            report["casestudy"] = name;
            report["sex"] = sex;
            emit_fit_outputs(out_dir, "fit_" + sex, report, art, names, true, true, false);
        }
        return 0;
    }
    cirls::fail(cirls::ErrorCode::InvalidConfig,
                "unknown case study '" + name +
                    "' (expected isotonic_warming or gdp_composition)");
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{std::string(kVersion) + " - constrained GLM fitting and inference"};
    app.require_subcommand(1);

    CommonFlags fit_flags, edf_flags;
    std::uint64_t seed_raw = 0;
    int n_draws_raw = 0;

    auto *fit_cmd = app.add_subcommand("fit", "fit a constrained GLM from a JSON config");
    fit_cmd->add_option("--config", fit_flags.config_path, "JSON configuration file")
        ->required();
    auto *fit_seed = fit_cmd->add_option("--seed", seed_raw, "override the inference seed");
    auto *fit_nd = fit_cmd->add_option("--n-draws", n_draws_raw, "override the draw count");
    fit_cmd->add_option("--out", fit_flags.out_override, "override the output directory");
    fit_cmd->add_flag("--emit-draws", fit_flags.emit_draws, "also write draws.csv");
    fit_cmd->add_flag("--allow-nonconverged", fit_flags.allow_nonconverged,
                      "report a non-converged fit instead of failing");

    int edf_n_sim = 1000;
    auto *edf_cmd = app.add_subcommand("edf", "expected degrees of freedom report");
    edf_cmd->add_option("--config", edf_flags.config_path, "JSON configuration file")
        ->required();
    edf_cmd->add_option("--n-sim", edf_n_sim, "Monte Carlo draws for edf");
    auto *edf_seed = edf_cmd->add_option("--seed", seed_raw, "override the seed");
    edf_cmd->add_option("--out", edf_flags.out_override, "override the output directory");

    int sim_dgm = 1, sim_n_sim = 200, sim_n = 500;
    int sim_inf_draws = 2000, sim_edf_sims = 200;
    std::uint64_t sim_seed = 1;
    std::string sim_grid, sim_out = ".";
    int sim_threads = 1;
    auto *sim_cmd = app.add_subcommand("simulate", "run the simulation study over a gamma grid");
    sim_cmd->add_option("--dgm", sim_dgm, "data-generating mechanism (1 or 2)")->required();
    sim_cmd->add_option("--gamma-grid", sim_grid, "comma-separated gamma values in [-1,1]")
        ->required();
    sim_cmd->add_option("--n-sim", sim_n_sim, "replicates per gamma");
    sim_cmd->add_option("--n", sim_n, "observations per replicate");
    sim_cmd->add_option("--seed", sim_seed, "master seed");
    sim_cmd->add_option("--inference-draws", sim_inf_draws, "TMVN draws per replicate");
    sim_cmd->add_option("--edf-sims", sim_edf_sims, "edf Monte Carlo draws per replicate");
    sim_cmd->add_option("--out", sim_out, "output directory");
    sim_cmd->add_option("--threads", sim_threads,
                        "accepted for compatibility; replicates run serially");

    std::string cs_name, cs_data_dir = CIRLS_DEFAULT_DATA_DIR, cs_out = ".";
    std::uint64_t cs_seed = 1;
    int cs_draws = 0;
    auto *cs_cmd = app.add_subcommand("casestudy", "run a bundled case study");
    cs_cmd->add_option("name", cs_name, "isotonic_warming or gdp_composition")->required();
    cs_cmd->add_option("--data-dir", cs_data_dir, "directory holding the bundled CSVs");
    cs_cmd->add_option("--out", cs_out, "output directory");
    cs_cmd->add_option("--seed", cs_seed, "inference seed");
    cs_cmd->add_option("--n-draws", cs_draws, "TMVN draws (0 disables inference)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) {
            if (fit_seed->count())
                fit_flags.seed_override = seed_raw;
            if (fit_nd->count())
                fit_flags.n_draws_override = n_draws_raw;
            return cmd_fit(fit_flags);
        }
        if (edf_cmd->parsed()) {
            if (edf_seed->count())
                edf_flags.seed_override = seed_raw;
            return cmd_edf(edf_flags, edf_n_sim);
        }
        if (sim_cmd->parsed())
            return cmd_simulate(sim_dgm, sim_grid, sim_n_sim, sim_seed, sim_n, sim_inf_draws,
                                sim_edf_sims, sim_out);
        if (cs_cmd->parsed())
            return cmd_casestudy(cs_name, cs_data_dir, cs_out, cs_seed, cs_draws);
    } catch (const cirls::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
