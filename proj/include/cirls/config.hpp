#ifndef CIRLS_CONFIG_HPP
#define CIRLS_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cirls/common.hpp"
#include "cirls/constraints.hpp"
#include "cirls/dof.hpp"
#include "cirls/family.hpp"
#include "cirls/fit.hpp"
#include "cirls/io.hpp"

namespace cirls {

using Json = nlohmann::json;

inline double bound_from_json(const Json &j)
{
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf")
            return kInf;
        if (s == "-inf")
            return -kInf;
        fail(ErrorCode::InvalidConfig, "bound string must be 'inf' or '-inf', got '" + s + "'");
    }
    if (j.is_number())
        return j.get<double>();
    fail(ErrorCode::InvalidConfig, "bound must be a number or 'inf'/'-inf'");
}

inline Json bound_to_json(double v)
{
    if (v == kInf)
        return "inf";
    if (v == -kInf)
        return "-inf";
    return v;
}

// One constraint block of the CLI config: either a builder (kind + indices)
// or an explicit dense matrix with bounds. Indices are 1-based coefficient
// positions in the fitted design.
inline ConstraintSet constraint_from_json(const Json &j, int p)
{
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "nonneg")
        return build_nonneg(p, j.at("indices").get<std::vector<int>>());
    if (kind == "sumzero")
        return build_sumzero(p, j.at("indices").get<std::vector<int>>());
    if (kind == "monotone_inc") {
        auto idx = j.at("indices").get<std::vector<int>>();
        if (idx.size() < 2)
            fail(ErrorCode::RunTooShort, "monotone_inc needs at least two indices");
        for (std::size_t k = 1; k < idx.size(); ++k)
            if (idx[k] != idx[k - 1] + 1)
                fail(ErrorCode::InvalidConfig, "monotone_inc indices must be consecutive");
        return build_monotone_increasing(p, idx.front(), static_cast<int>(idx.size()));
    }
    if (kind == "explicit") {
        ConstraintSet cs;
        auto rows = j.at("C").get<std::vector<std::vector<double>>>();
        const int m = static_cast<int>(rows.size());
        cs.C = Matrix::Zero(m, p);
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != p)
                fail(ErrorCode::DimensionMismatch,
                     "explicit constraint row " + std::to_string(i + 1) + " has wrong length");
            for (int c = 0; c < p; ++c)
                cs.C(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        }
        cs.l.resize(m);
        cs.u.resize(m);
        const Json &lj = j.at("l");
        const Json &uj = j.at("u");
        for (int i = 0; i < m; ++i) {
            cs.l(i) = bound_from_json(lj.at(static_cast<std::size_t>(i)));
            cs.u(i) = bound_from_json(uj.at(static_cast<std::size_t>(i)));
        }
        return cs;
    }
    fail(ErrorCode::InvalidConfig, "unknown constraint kind '" + kind + "'");
}

// Stack several constraint blocks into one system.
inline ConstraintSet stack_constraints(const std::vector<ConstraintSet> &parts, int p)
{
    int m = 0;
    for (const auto &c : parts)
        m += c.rows();
    ConstraintSet out;
    out.C = Matrix::Zero(m, p);
    out.l.resize(m);
    out.u.resize(m);
    int at = 0;
    for (const auto &c : parts) {
        out.C.middleRows(at, c.rows()) = c.C;
        out.l.segment(at, c.rows()) = c.l;
        out.u.segment(at, c.rows()) = c.u;
        at += c.rows();
    }
    return out;
}

struct InferenceConfig {
    int n_draws = 10000;
    std::uint64_t seed = 1;
    double level = 0.95;
};

struct RunConfig {
    std::string data_path;
    std::string response;
    std::vector<std::string> predictors;
    bool intercept = true;
    std::string family = "gaussian";
    std::optional<std::string> offset;
    std::vector<Json> constraint_specs;
    InferenceConfig inference;
    std::string out_dir = ".";
    bool emit_json = true;
    bool emit_csv = true;
    int edf_sims = 1000;
};

inline RunConfig run_config_from_json(const Json &j)
{
    RunConfig cfg;
    cfg.data_path = j.at("data").get<std::string>();
    const Json &model = j.at("model");
    cfg.response = model.at("response").get<std::string>();
    cfg.predictors = model.at("predictors").get<std::vector<std::string>>();
    cfg.intercept = model.value("intercept", true);
    cfg.family = model.value("family", std::string("gaussian"));
    if (model.contains("offset"))
        cfg.offset = model.at("offset").get<std::string>();
    if (model.contains("constraints"))
        for (const auto &c : model.at("constraints"))
            cfg.constraint_specs.push_back(c);
    if (j.contains("inference")) {
        const Json &inf = j.at("inference");
        cfg.inference.n_draws = inf.value("n_draws", 10000);
        cfg.inference.seed = inf.value("seed", std::uint64_t{1});
        cfg.inference.level = inf.value("level", 0.95);
    }
    if (j.contains("output")) {
        const Json &out = j.at("output");
        cfg.out_dir = out.value("dir", std::string("."));
        if (out.contains("formats")) {
            cfg.emit_json = false;
            cfg.emit_csv = false;
            for (const auto &f : out.at("formats")) {
                if (f == "json")
                    cfg.emit_json = true;
                else if (f == "csv")
                    cfg.emit_csv = true;
            }
        }
    }
    cfg.edf_sims = j.value("edf_sims", 1000);
    return cfg;
}

// Build the design matrix and model spec from a parsed CSV per the config.
struct AssembledModel {
    ModelSpec spec;
    std::vector<std::string> coef_names;
};

inline AssembledModel assemble_model(const RunConfig &cfg, const Table &table)
{
    AssembledModel out;
    const int n = table.n_rows();
    if (n == 0)
        fail(ErrorCode::InvalidData, "dataset has no rows");
    const int p = static_cast<int>(cfg.predictors.size()) + (cfg.intercept ? 1 : 0);

    out.spec.X.resize(n, p);
    int col = 0;
    if (cfg.intercept) {
        out.spec.X.col(0).setOnes();
        out.coef_names.push_back("(Intercept)");
        col = 1;
    }
    for (const auto &name : cfg.predictors) {
        out.spec.X.col(col++) = table.numeric_column(name);
        out.coef_names.push_back(name);
    }
    out.spec.y = table.numeric_column(cfg.response);
    out.spec.fam = FamilySpec::parse(cfg.family);
    if (cfg.offset)
        out.spec.offset = table.numeric_column(*cfg.offset);

    std::vector<ConstraintSet> parts;
    for (const auto &cj : cfg.constraint_specs)
        parts.push_back(constraint_from_json(cj, p));
    if (!parts.empty()) {
        out.spec.cs = stack_constraints(parts, p);
        validate(out.spec.cs, p);
    } else {
        out.spec.cs = ConstraintSet::none(p);
    }
    return out;
}

// FNV-1a over the canonical config dump; stored in every output so identical
// invocations are recognisable.
inline std::string config_hash(const Json &j)
{
    std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace cirls

#endif
