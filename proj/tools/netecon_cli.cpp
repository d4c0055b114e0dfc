// Command-line front end: simulation, moment estimation, dyadic and triadic
// regression, structural-function contrasts, and strategic-model routines,
// with JSON artifacts that record enough (config, seed, input digests) to
// reproduce every number exactly.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "netecon/asf.hpp"
#include "netecon/dyadic.hpp"
#include "netecon/graph.hpp"
#include "netecon/graphon.hpp"
#include "netecon/moments.hpp"
#include "netecon/rng.hpp"
#include "netecon/strategic.hpp"
#include "netecon/triad_probit.hpp"

using njson = nlohmann::ordered_json;
using namespace netecon;

namespace {

constexpr const char* kVersion = "0.1.0";

// numerical failures exit 3 (user errors exit 2); thrown by runners when a
// solver gives up or produces non-finite output
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- JSON emission ----------------------------------------------------------
// floats are printed with 17 significant digits so equal doubles serialize to
// equal bytes and every value round-trips exactly

void emit_json(const njson& j, std::string& out, int depth) {
    auto pad = [&](int d) { out.append(std::size_t(2 * d), ' '); };
    switch (j.type()) {
        case njson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                pad(depth + 1);
                out += njson(it.key()).dump();
                out += ": ";
                emit_json(it.value(), out, depth + 1);
            }
            out += "\n";
            pad(depth);
            out += "}";
            return;
        }
        case njson::value_t::array: {
            bool scalars = true;
            for (const auto& v : j)
                if (v.is_structured()) scalars = false;
            if (j.empty()) {
                out += "[]";
                return;
            }
            if (scalars) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    emit_json(j[i], out, depth);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                pad(depth + 1);
                emit_json(j[i], out, depth + 1);
            }
            out += "\n";
            pad(depth);
            out += "]";
            return;
        }
        case njson::value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

std::string emit_json(const njson& j) {
    std::string out;
    emit_json(j, out, 0);
    out += "\n";
    return out;
}

njson vec_json(const Eigen::VectorXd& v) {
    njson a = njson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

njson mat_json(const Eigen::MatrixXd& m) {
    njson a = njson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        njson row = njson::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

njson edges_json(const Eigen::MatrixXd& adj) {
    njson a = njson::array();
    for (int i = 0; i < adj.rows(); ++i)
        for (int j = i + 1; j < adj.cols(); ++j)
            if (adj(i, j) > 0.5) a.push_back(njson::array({i, j}));
    return a;
}

// ---- input registration -----------------------------------------------------

struct Ctx {
    std::uint64_t seed = 1;
    int threads = 1;
    njson inputs = njson::object();

    std::string read_file(const std::string& label, const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open input file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string bytes = ss.str();
        char digest[24];
        std::snprintf(digest, sizeof digest, "0x%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        inputs[label] = njson{{"path", path}, {"fnv1a64", digest}};
        return bytes;
    }
};

// ---- tabular inputs ---------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    return out;
}

struct NodeTable {
    NodeData nodes;
    std::map<long long, int> id_index;  // original id -> row
};

// header with an `id` column plus numeric covariate columns; ids are arbitrary
// integers and rows are indexed by ascending id
NodeTable parse_node_csv(const std::string& text, const std::string& path) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty node file: " + path);
    auto header = split_csv_line(line);
    int id_col = -1;
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == "id") id_col = int(k);
    if (id_col < 0) throw std::runtime_error("node file needs an `id` column: " + path);

    std::vector<long long> ids;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("ragged row in node file: " + path);
        std::vector<double> row;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (int(k) == id_col)
                ids.push_back(std::stoll(cells[k]));
            else
                row.push_back(std::stod(cells[k]));
        }
        rows.push_back(std::move(row));
    }
    if (ids.empty()) throw std::runtime_error("node file has no rows: " + path);

    NodeTable out;
    std::vector<long long> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::runtime_error("duplicate node id in: " + path);
    for (std::size_t k = 0; k < sorted.size(); ++k) out.id_index[sorted[k]] = int(k);

    const int n = int(ids.size());
    const int p = int(header.size()) - 1;
    out.nodes.x = Eigen::MatrixXd::Zero(n, p);
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.nodes.x.row(out.id_index.at(ids[r])) =
            Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), p);
    for (std::size_t k = 0; k < header.size(); ++k)
        if (int(k) != id_col) out.nodes.names.push_back(header[k]);
    return out;
}

// rows i,j,y keyed by node id; unmentioned ordered dyads keep outcome 0
void parse_dyad_csv(const std::string& text, const std::string& path, const NodeTable& tab,
                    bool undirected, Eigen::MatrixXd& y) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dyad file: " + path);
    auto header = split_csv_line(line);
    int ci = -1, cj = -1, cy = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "i") ci = int(k);
        if (header[k] == "j") cj = int(k);
        if (header[k] == "y") cy = int(k);
    }
    if (ci < 0 || cj < 0 || cy < 0)
        throw std::runtime_error("dyad file needs i,j,y columns: " + path);
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("ragged row in dyad file: " + path);
        long long gi = std::stoll(cells[std::size_t(ci)]);
        long long gj = std::stoll(cells[std::size_t(cj)]);
        auto it = tab.id_index.find(gi);
        auto jt = tab.id_index.find(gj);
        if (it == tab.id_index.end() || jt == tab.id_index.end())
            throw std::runtime_error("dyad file references unknown node id in: " + path);
        if (it->second == jt->second)
            throw std::runtime_error("dyad file has a self pair in: " + path);
        double v = std::stod(cells[std::size_t(cy)]);
        y(it->second, jt->second) = v;
        if (undirected) y(jt->second, it->second) = v;
    }
}

// "u v" arc lines into a directed 0/1 outcome matrix
void parse_arc_list(const std::string& text, const std::string& path,
                    const std::map<long long, int>* idx, Eigen::MatrixXd& y) {
    std::istringstream in(text);
    std::string line;
    long long u, v;
    while (std::getline(in, line)) {
        std::size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        std::istringstream ls(line);
        if (!(ls >> u >> v)) continue;
        int a, b;
        if (idx) {
            auto it = idx->find(u), jt = idx->find(v);
            if (it == idx->end() || jt == idx->end())
                throw std::runtime_error("arc references unknown node id in: " + path);
            a = it->second;
            b = jt->second;
        } else {
            a = int(u);
            b = int(v);
        }
        if (a == b) continue;
        if (a < 0 || a >= y.rows() || b >= y.rows())
            throw std::runtime_error("arc vertex out of range in: " + path);
        y(a, b) = 1.0;
    }
}

// a recipe argument is either an inline expression or a path to a term-per-
// line file ("send:age", "cross:age,wealth", "const")
Recipe resolve_recipe(Ctx& ctx, const std::string& arg) {
    std::ifstream probe(arg);
    if (!probe) return Recipe::parse(arg);
    std::string text = ctx.read_file("recipe", arg);
    std::istringstream in(text);
    std::string line, expr;
    while (std::getline(in, line)) {
        std::size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        std::size_t b = line.find_last_not_of(" \t\r");
        line = line.substr(a, b - a + 1);
        std::size_t colon = line.find(':');
        std::string term =
            colon == std::string::npos ? line : line.substr(0, colon) + "(" + line.substr(colon + 1) + ")";
        expr += expr.empty() ? term : " + " + term;
    }
    if (expr.empty()) throw std::runtime_error("recipe file has no terms: " + arg);
    return Recipe::parse(expr);
}

void require_finite(const Eigen::VectorXd& v, const std::string& what) {
    if (!v.allFinite()) throw NumericalError(what + " is not finite");
}

njson fit_json(const FitResult& fit) {
    njson f;
    f["labels"] = fit.labels;
    f["theta"] = vec_json(fit.theta);
    f["loglik"] = fit.loglik;
    f["converged"] = fit.converged;
    f["iterations"] = fit.iterations;
    f["family"] = family_name(fit.family);
    return f;
}

njson variance_json(const VarianceReport& var) {
    njson v;
    v["omega_used"] = var.omega_used;
    v["se"] = vec_json(var.se);
    v["vtheta"] = mat_json(var.vtheta);
    v["omega"] = mat_json(var.omega);
    v["sigma1"] = mat_json(var.sigma1);
    v["sigma23"] = mat_json(var.sigma23);
    return v;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string model = "er";
    int n = 100;
    double rho = 0.1;
    double mu = 0.0, sd = 1.0;
    double lo = -1.0, hi = 1.0, plo = 0.5;
    bool twopoint = false;
    double alpha = 0.25;
    std::string grid;
    std::string out = "edges.txt";
};

njson run_simulate(Ctx& ctx, const SimulateArgs& a, njson& config) {
    GraphonSpec spec;
    if (a.model == "er") {
        spec = GraphonSpec::er(a.rho);
    } else if (a.model == "beta") {
        spec = a.twopoint ? GraphonSpec::beta_twopoint(a.lo, a.hi, a.plo)
                          : GraphonSpec::beta_normal(a.mu, a.sd);
    } else if (a.model == "threshold") {
        spec = GraphonSpec::threshold(a.alpha);
    } else if (a.model == "graphon") {
        if (a.grid.empty()) throw std::runtime_error("--model graphon needs --grid FILE");
        ctx.read_file("grid", a.grid);
        spec = load_grid_graphon(a.grid);
    } else {
        throw std::runtime_error("unknown model: " + a.model +
                                 " (choose er, beta, threshold, graphon)");
    }
    if (a.n < 1) throw std::runtime_error("--n must be positive");

    config["model"] = a.model;
    config["n"] = a.n;
    if (a.model == "er") config["rho"] = a.rho;
    if (a.model == "beta" && !a.twopoint) {
        config["mu"] = a.mu;
        config["sd"] = a.sd;
    }
    if (a.model == "beta" && a.twopoint) {
        config["lo"] = a.lo;
        config["hi"] = a.hi;
        config["plo"] = a.plo;
    }
    if (a.model == "threshold") config["alpha"] = a.alpha;
    if (a.model == "graphon") config["grid"] = a.grid;
    config["out"] = a.out;

    GraphonSample sample = sample_graphon(spec, a.n, ctx.seed);
    save_edgelist(sample.g, a.out);

    njson res;
    res["n"] = a.n;
    res["edges"] = sample.g.edge_count();
    res["density"] = sample.g.density();
    res["out"] = a.out;
    return res;
}

// ---- moments / transitivity ---------------------------------------------------

CovOptions parse_cov(const std::string& s, std::uint64_t seed, int threads) {
    CovOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    if (s == "exact") {
        opt.mode = CovOptions::Mode::exact;
    } else if (s.rfind("subsample:", 0) == 0) {
        opt.mode = CovOptions::Mode::subsample;
        opt.samples = std::stoll(s.substr(10));
        if (opt.samples < 1) throw std::runtime_error("subsample size must be positive");
    } else {
        throw std::runtime_error("--cov must be `exact` or `subsample:M`, got: " + s);
    }
    return opt;
}

njson run_moments(Ctx& ctx, const std::string& edges, const std::string& patterns,
                  const std::string& cov, bool census_only, njson& config) {
    ctx.read_file("edges", edges);
    Graph g = load_edgelist(edges);
    if (g.n() < 5) throw std::runtime_error("moment covariance needs at least 5 vertices");
    config["edges"] = edges;
    config["cov"] = cov;

    njson res;
    res["n"] = g.n();
    res["edges"] = g.edge_count();
    res["density"] = g.density();

    if (!census_only) {
        config["patterns"] = patterns;
        std::vector<Graphlet> pats;
        std::vector<std::string> names;
        std::istringstream ps(patterns);
        std::string name;
        while (std::getline(ps, name, ',')) {
            Graphlet pat;
            if (!GraphletDict::instance().lookup(name, &pat))
                throw std::runtime_error("unknown pattern name: " + name);
            pats.push_back(pat);
            names.push_back(name);
        }
        if (pats.empty()) throw std::runtime_error("--patterns is empty");
        auto est = count_patterns(g, pats, ctx.threads);
        njson pj = njson::object();
        for (std::size_t k = 0; k < est.size(); ++k) {
            njson e;
            e["order"] = est[k].order;
            e["iso"] = est[k].iso;
            e["induced_count"] = est[k].induced_count;
            e["subgraph_count"] = est[k].subgraph_count;
            e["p_hat"] = est[k].p_hat;
            e["q_hat"] = est[k].q_hat;
            pj[names[k]] = e;
        }
        res["patterns"] = pj;
    }

    TriadMomentCov cov_est = triad_moment_cov(g, parse_cov(cov, ctx.seed, ctx.threads));
    njson tj;
    tj["classes"] = njson::array({"empty", "oneedge", "twostar", "triangle"});
    tj["p_hat"] = njson::array(
        {cov_est.p_hat[0], cov_est.p_hat[1], cov_est.p_hat[2], cov_est.p_hat[3]});
    tj["se_leading"] = njson::array({cov_est.se_leading[0], cov_est.se_leading[1],
                                     cov_est.se_leading[2], cov_est.se_leading[3]});
    tj["se_all"] = njson::array(
        {cov_est.se_all[0], cov_est.se_all[1], cov_est.se_all[2], cov_est.se_all[3]});
    tj["v_leading"] = mat_json(cov_est.v_leading);
    tj["v_all"] = mat_json(cov_est.v_all);
    tj["sigma1"] = mat_json(cov_est.sigma1);
    tj["ti"] = cov_est.ti;
    tj["ti_qratio"] = cov_est.ti_qratio;
    tj["se_ti_leading"] = cov_est.se_ti_leading;
    tj["se_ti_all"] = cov_est.se_ti_all;
    tj["pentads"] = cov_est.pentads;
    tj["mode"] = cov_est.mode;
    if (cov_est.mode == "subsample") tj["mc_se_xi1_max"] = cov_est.mc_se_xi1_max;
    res["triads"] = tj;
    return res;
}

// ---- dyadic-fit ----------------------------------------------------------------

struct DyadicArgs {
    std::string nodes, dyads, recipe = "const";
    std::string family = "logit", vcov = "fg", bootstrap;
    bool undirected = false;
};

std::string vcov_selector(const std::string& v) {
    if (v == "fg") return "fg";
    if (v == "jk") return "jackknife";
    if (v == "jkbc") return "jackknife_bc";
    if (v == "analog") return "analog";
    if (v == "limit") return "limit";
    throw std::runtime_error("--vcov must be one of fg, jk, jkbc, analog, limit, got: " + v);
}

DyadicData load_dyadic(Ctx& ctx, const std::string& nodes, const std::string& dyads,
                       bool undirected) {
    NodeTable tab = parse_node_csv(ctx.read_file("nodes", nodes), nodes);
    DyadicData d;
    d.n = int(tab.nodes.x.rows());
    d.directed = !undirected;
    d.nodes = tab.nodes;
    d.y = Eigen::MatrixXd::Zero(d.n, d.n);
    parse_dyad_csv(ctx.read_file("dyads", dyads), dyads, tab, undirected, d.y);
    return d;
}

njson run_dyadic_fit(Ctx& ctx, const DyadicArgs& a, njson& config) {
    if (a.nodes.empty() || a.dyads.empty())
        throw std::runtime_error("dyadic-fit needs --nodes and --dyads");
    DyadicData d = load_dyadic(ctx, a.nodes, a.dyads, a.undirected);
    Recipe r = resolve_recipe(ctx, a.recipe);
    Family fam = family_from_string(a.family);

    config["nodes"] = a.nodes;
    config["dyads"] = a.dyads;
    config["recipe"] = a.recipe;
    config["family"] = a.family;
    config["vcov"] = a.vcov;
    config["undirected"] = a.undirected;

    FitResult fit = fit_composite(d, r, fam);
    require_finite(fit.theta, "estimate");
    if (!fit.converged) throw NumericalError("composite likelihood fit did not converge");
    VarianceReport var = dyadic_variance(d, r, fam, fit, vcov_selector(a.vcov));

    njson res;
    res["n"] = d.n;
    res["fit"] = fit_json(fit);
    res["variance"] = variance_json(var);

    if (!a.bootstrap.empty()) {
        config["bootstrap"] = a.bootstrap;
        std::string method = a.bootstrap;
        int b = 199;
        std::size_t colon = method.find(':');
        if (colon != std::string::npos) {
            std::string tail = method.substr(colon + 1);
            method = method.substr(0, colon);
            if (tail.rfind("B=", 0) != 0)
                throw std::runtime_error("--bootstrap expects method:B=count");
            b = std::stoi(tail.substr(2));
        }
        BootstrapResult boot = dyadic_bootstrap(d, r, fam, fit, method, b, ctx.seed);
        njson bj;
        bj["method"] = boot.method;
        bj["requested"] = boot.requested;
        bj["completed"] = boot.completed;
        bj["se"] = vec_json(boot.se);
        bj["ci_lo"] = vec_json(boot.ci_lo);
        bj["ci_hi"] = vec_json(boot.ci_hi);
        res["bootstrap"] = bj;
    }
    return res;
}

// ---- asf ------------------------------------------------------------------------

struct AsfArgs {
    std::string nodes, dyads, recipe;
    std::string family = "probit", omega = "fg", contrast;
    std::string wcol = "w", xcol = "x";
    double w = 1.0, x = 1.0, kappa = 0.0;
    bool undirected = false;
};

njson asf_cell_json(const AsfEstimate& e) {
    njson c;
    c["w"] = e.w;
    c["x"] = e.x;
    c["value"] = e.value;
    c["se"] = e.se;
    c["xi"] = e.xi;
    c["var_first_stage"] = e.var_first_stage;
    c["min_propensity"] = e.min_propensity;
    c["proxies_discrete"] = e.proxies_discrete;
    return c;
}

njson run_asf(Ctx& ctx, const AsfArgs& a, njson& config) {
    if (a.nodes.empty() || a.dyads.empty() || a.recipe.empty())
        throw std::runtime_error("asf needs --nodes, --dyads, and --recipe");
    PolicyData pd;
    pd.dyads = load_dyadic(ctx, a.nodes, a.dyads, a.undirected);
    pd.wcol = a.wcol;
    pd.xcol = a.xcol;
    Recipe r = resolve_recipe(ctx, a.recipe);

    config["nodes"] = a.nodes;
    config["dyads"] = a.dyads;
    config["recipe"] = a.recipe;
    config["family"] = a.family;
    config["omega"] = a.omega;
    config["wcol"] = a.wcol;
    config["xcol"] = a.xcol;
    config["w"] = a.w;
    config["x"] = a.x;
    config["kappa"] = a.kappa;
    if (!a.contrast.empty()) config["contrast"] = a.contrast;

    AsfFit fit = fit_pvr(pd, family_from_string(a.family), r, a.omega);
    require_finite(fit.fit.theta, "first-stage estimate");
    if (!fit.fit.converged) throw NumericalError("first-stage fit did not converge");

    njson res;
    res["n"] = pd.dyads.n;
    res["fit"] = fit_json(fit.fit);
    res["se_first_stage"] = vec_json(fit.var.se);
    res["design_rank"] = fit.design_rank;
    res["identified"] = fit.identified;

    AsfEstimate at = asf(pd, fit, a.w, a.x, a.kappa);
    res["asf"] = asf_cell_json(at);

    if (!a.contrast.empty()) {
        std::vector<AsfEstimate> cells;
        std::vector<double> wts;
        if (a.contrast == "ate") {
            cells = {asf(pd, fit, 1, 1, a.kappa), asf(pd, fit, 0, 0, a.kappa)};
            wts = {1.0, -1.0};
        } else if (a.contrast == "complementarity") {
            cells = {asf(pd, fit, 1, 1, a.kappa), asf(pd, fit, 1, 0, a.kappa),
                     asf(pd, fit, 0, 1, a.kappa), asf(pd, fit, 0, 0, a.kappa)};
            wts = {1.0, -1.0, -1.0, 1.0};
        } else {
            throw std::runtime_error("--contrast must be ate or complementarity");
        }
        AsfContrast con = asf_contrast(fit, cells, wts);
        njson cj;
        cj["type"] = a.contrast;
        cj["value"] = con.value;
        cj["se"] = con.se;
        njson cl = njson::array();
        for (const auto& c : cells) cl.push_back(asf_cell_json(c));
        cj["cells"] = cl;
        res["contrast"] = cj;
    }
    return res;
}

// ---- triad-probit -----------------------------------------------------------------

struct TriadArgs {
    std::string edges, covariates, recipe = "const";
    int draws = 512, pool = 150, max_iter = 600;
    int n = 0;  // only needed when no covariate file fixes the size
};

njson run_triad_probit(Ctx& ctx, const TriadArgs& a, njson& config) {
    if (a.edges.empty()) throw std::runtime_error("triad-probit needs --edges");
    DyadicData d;
    const std::map<long long, int>* idx = nullptr;
    NodeTable tab;
    if (!a.covariates.empty()) {
        tab = parse_node_csv(ctx.read_file("covariates", a.covariates), a.covariates);
        d.nodes = tab.nodes;
        d.n = int(tab.nodes.x.rows());
        idx = &tab.id_index;
    } else {
        if (a.n < 3) throw std::runtime_error("triad-probit needs --covariates or --n");
        d.n = a.n;
    }
    d.directed = true;
    d.y = Eigen::MatrixXd::Zero(d.n, d.n);
    parse_arc_list(ctx.read_file("edges", a.edges), a.edges, idx, d.y);
    Recipe r = resolve_recipe(ctx, a.recipe);

    config["edges"] = a.edges;
    if (!a.covariates.empty()) config["covariates"] = a.covariates;
    if (a.n > 0) config["n"] = a.n;
    config["recipe"] = a.recipe;
    config["draws"] = a.draws;
    config["pool"] = a.pool;

    TriadProbitOptions opt;
    opt.draws = a.draws;
    opt.seed = ctx.seed;
    opt.sigma_pool = a.pool;
    opt.max_iter = a.max_iter;
    TriadProbitFit fit = fit_triad_probit(d, r, opt);
    require_finite(fit.theta, "estimate");
    if (!fit.converged) throw NumericalError("simulated likelihood search did not converge");

    njson res;
    res["n"] = d.n;
    res["labels"] = fit.labels;
    res["theta"] = vec_json(fit.theta);
    res["loglik"] = fit.loglik;
    res["converged"] = fit.converged;
    res["iterations"] = fit.iterations;
    res["se_limit"] = vec_json(fit.se_limit);
    res["se_all"] = vec_json(fit.se_all);
    res["vcov_limit"] = mat_json(fit.vcov_limit);
    res["vcov_all"] = mat_json(fit.vcov_all);
    res["score_pool"] = fit.pool;
    res["pairs_share_one"] = fit.pairs1;
    res["pairs_share_two"] = fit.pairs2;
    return res;
}

// ---- strategic ------------------------------------------------------------------

Eigen::VectorXd json_vec(const njson& j, const std::string& what) {
    if (!j.is_array()) throw std::runtime_error(what + " must be an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) v(Eigen::Index(k)) = j[k].get<double>();
    return v;
}

DyadicData strategic_nodes(Ctx& ctx, const njson& cfg) {
    DyadicData d;
    if (cfg.contains("nodes")) {
        std::string path = cfg["nodes"].get<std::string>();
        NodeTable tab = parse_node_csv(ctx.read_file("nodes", path), path);
        d.nodes = tab.nodes;
        d.n = int(tab.nodes.x.rows());
    } else if (cfg.contains("x")) {
        Eigen::VectorXd x = json_vec(cfg["x"], "config x");
        d.n = int(x.size());
        d.nodes.x = x;
        d.nodes.names = {"x"};
    } else if (cfg.contains("n")) {
        d.n = cfg["n"].get<int>();
    } else {
        throw std::runtime_error("config needs `nodes`, `x`, or `n`");
    }
    d.directed = true;
    d.y = Eigen::MatrixXd::Zero(d.n, d.n);
    return d;
}

std::uint64_t config_seed(const njson& cfg, const Ctx& ctx) {
    return cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : ctx.seed;
}

njson run_strategic_equilibria(Ctx& ctx, const njson& cfg) {
    MiyauchiParams p{cfg.at("alpha").get<double>(), cfg.at("beta").get<double>()};
    int n = cfg.at("n").get<int>();
    if (n < 2) throw std::runtime_error("config n must be at least 2");
    std::uint64_t seed = config_seed(cfg, ctx);
    Eigen::MatrixXd u = logistic_shocks(n, seed, 0);
    EquilibriumPair eq = min_max_equilibria(p, u);

    njson res;
    res["n"] = n;
    res["seed"] = seed;
    res["sweeps_min"] = eq.sweeps_min;
    res["sweeps_max"] = eq.sweeps_max;
    double m = double(n) * (n - 1) / 2.0;
    res["density_min"] = eq.dmin.sum() / 2.0 / m;
    res["density_max"] = eq.dmax.sum() / 2.0 / m;
    res["edges_min"] = edges_json(eq.dmin);
    res["edges_max"] = edges_json(eq.dmax);
    res["stable_min"] = is_pairwise_stable(eq.dmin, p, u, true).stable;
    res["stable_max"] = is_pairwise_stable(eq.dmax, p, u, true).stable;
    return res;
}

njson run_strategic_smd(Ctx& ctx, const njson& cfg) {
    SmdOptions so;
    so.n = cfg.at("n").get<int>();
    so.b = cfg.value("b", 200);
    so.seed = config_seed(cfg, ctx);
    so.mode = cfg.value("mode", std::string("point"));
    so.selection = cfg.value("selection", std::string("max"));
    so.slack = cfg.value("slack", 0.0);
    so.refine = cfg.value("refine", false);
    if (cfg.contains("patterns")) {
        so.patterns.clear();
        for (const auto& p : cfg["patterns"]) so.patterns.push_back(p.get<std::string>());
    }
    if (cfg.contains("grid")) {
        for (const auto& a : cfg["grid"].at("alpha"))
            for (const auto& b : cfg["grid"].at("beta")) {
                Eigen::VectorXd th(2);
                th << a.get<double>(), b.get<double>();
                so.grid.push_back(th);
            }
    } else if (cfg.contains("points")) {
        for (const auto& pt : cfg["points"]) so.grid.push_back(json_vec(pt, "grid point"));
    } else {
        throw std::runtime_error("config needs `grid` {alpha:[],beta:[]} or `points`");
    }

    Eigen::VectorXd pi;
    if (cfg.contains("pi_obs")) {
        pi = json_vec(cfg["pi_obs"], "pi_obs");
    } else if (cfg.contains("edges")) {
        std::string path = cfg["edges"].get<std::string>();
        ctx.read_file("edges", path);
        Graph g = load_edgelist(path, nullptr, so.n);
        std::vector<Graphlet> pats;
        for (const auto& name : so.patterns) {
            Graphlet pat;
            if (!GraphletDict::instance().lookup(name, &pat))
                throw std::runtime_error("unknown pattern name: " + name);
            pats.push_back(pat);
        }
        auto est = count_patterns(g, pats, ctx.threads);
        pi.resize(Eigen::Index(est.size()));
        for (std::size_t k = 0; k < est.size(); ++k) pi(Eigen::Index(k)) = est[k].q_hat;
    } else {
        throw std::runtime_error("config needs `pi_obs` or `edges`");
    }

    Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(pi.size(), pi.size());
    if (cfg.contains("omega")) {
        const auto& oj = cfg["omega"];
        omega.setZero();
        for (Eigen::Index i = 0; i < pi.size(); ++i)
            for (Eigen::Index j = 0; j < pi.size(); ++j)
                omega(i, j) = oj.at(std::size_t(i)).at(std::size_t(j)).get<double>();
    }

    SmdResult r = smd_fit(pi, omega, so);
    njson res;
    res["mode"] = so.mode;
    res["selection"] = so.selection;
    res["pi_obs"] = vec_json(pi);
    res["grid_size"] = so.grid.size();
    res["values"] = r.values;
    if (so.mode == "point") {
        res["theta"] = vec_json(r.theta);
        res["criterion"] = r.criterion;
    } else {
        njson set = njson::array();
        for (const auto& th : r.identified) set.push_back(vec_json(th));
        res["identified"] = set;
        res["empty_set"] = r.empty_set;
    }
    return res;
}

njson run_strategic_leung(Ctx& ctx, const njson& cfg) {
    DyadicData d = strategic_nodes(ctx, cfg);
    Recipe t = Recipe::parse(cfg.at("recipe").get<std::string>());
    std::string task = cfg.value("task", std::string("fit"));

    njson res;
    if (task == "beliefs" || task == "simulate") {
        LeungParams theta;
        const auto& tj = cfg.at("theta");
        theta.alpha = tj.at("alpha").get<double>();
        theta.beta = tj.at("beta").get<double>();
        theta.gamma = tj.at("gamma").get<double>();
        theta.delta = json_vec(tj.at("delta"), "theta delta");
        LeungBeliefs b = leung_beliefs(d, t, theta);
        res["residual"] = b.residual;
        res["iterations"] = b.iterations;
        res["converged"] = b.converged;
        res["mean_belief"] = b.p.sum() / (double(d.n) * (d.n - 1));
        if (!b.converged) throw NumericalError("belief fixed point did not converge");
        if (task == "simulate") {
            DyadicData sim = simulate_leung(d, t, theta, config_seed(cfg, ctx));
            res["density"] = sim.y.sum() / (double(d.n) * (d.n - 1));
            njson arcs = njson::array();
            for (int i = 0; i < d.n; ++i)
                for (int j = 0; j < d.n; ++j)
                    if (i != j && sim.y(i, j) > 0.5) arcs.push_back(njson::array({i, j}));
            res["arcs"] = arcs;
        }
        return res;
    }
    if (task != "fit") throw std::runtime_error("config task must be fit, beliefs, or simulate");

    std::string path = cfg.at("dyads").get<std::string>();
    NodeTable tab;
    tab.nodes = d.nodes;
    for (int i = 0; i < d.n; ++i) tab.id_index[i] = i;
    parse_dyad_csv(ctx.read_file("dyads", path), path, tab, false, d.y);
    LeungFit lf = leung_fit(d, t, cfg.value("min_cell", 2), cfg.value("omega", std::string("fg")));
    require_finite(lf.fit.theta, "estimate");
    if (!lf.fit.converged) throw NumericalError("second-step fit did not converge");
    res["fit"] = fit_json(lf.fit);
    res["se"] = vec_json(lf.var.se);
    res["omega_used"] = lf.var.omega_used;
    res["cells"] = lf.cells;
    return res;
}

njson run_strategic_mele(Ctx& ctx, const njson& cfg) {
    DyadicData d = strategic_nodes(ctx, cfg);
    Recipe r = Recipe::parse(cfg.at("recipe").get<std::string>());
    MeleParams p;
    p.alpha = json_vec(cfg.at("alpha"), "alpha");
    p.beta = cfg.at("beta").get<double>();

    MeleOptions mo;
    mo.steps = cfg.value("steps", 100000);
    mo.burnin = cfg.value("burnin", -1);
    mo.seed = config_seed(cfg, ctx);
    if (cfg.contains("meeting")) mo.meeting = json_vec(cfg["meeting"], "meeting");

    Eigen::MatrixXd start = Eigen::MatrixXd::Zero(d.n, d.n);
    if (cfg.value("start", std::string("empty")) == "complete") {
        start.setOnes();
        start.diagonal().setZero();
    }

    MeleChainResult chain = mele_chain(start, d, r, p, mo);
    njson res;
    res["n"] = d.n;
    res["steps"] = chain.steps;
    res["burnin"] = chain.burnin;
    res["seed"] = mo.seed;
    double m = double(d.n) * (d.n - 1) / 2.0;
    res["terminal_density"] = chain.terminal.sum() / 2.0 / m;
    res["terminal_edges"] = edges_json(chain.terminal);

    if (cfg.value("exact", false)) {
        Eigen::VectorXd pi = ergm_exact(d, r, p);
        if (chain.state_counts.size() == 0)
            throw std::runtime_error("state tracking needs n <= 5");
        Eigen::VectorXd emp = chain.state_counts / chain.state_counts.sum();
        res["states"] = pi.size();
        res["tv_to_exact"] = total_variation(emp, pi);
    }
    return res;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"network moments, dyadic regression, and strategic models"};
    app.require_subcommand(1);

    Ctx ctx;
    std::string json_out;
    app.add_option("--seed", ctx.seed, "seed for every stochastic step")->capture_default_str();
    app.add_option("--threads", ctx.threads, "worker threads (never changes results)")
        ->capture_default_str();
    app.add_option("--json", json_out, "write the JSON artifact here instead of stdout");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "sample a random graph, write an edge list");
    c_sim->fallthrough();
    c_sim->add_option("--model", sim.model, "er | beta | threshold | graphon")
        ->capture_default_str();
    c_sim->add_option("--n", sim.n, "vertices")->capture_default_str();
    c_sim->add_option("--rho", sim.rho, "er link probability")->capture_default_str();
    c_sim->add_option("--mu", sim.mu, "beta model: normal mean");
    c_sim->add_option("--sd", sim.sd, "beta model: normal sd");
    c_sim->add_flag("--twopoint", sim.twopoint, "beta model: two-point effects");
    c_sim->add_option("--lo", sim.lo, "two-point low value");
    c_sim->add_option("--hi", sim.hi, "two-point high value");
    c_sim->add_option("--plo", sim.plo, "two-point P(low)");
    c_sim->add_option("--alpha", sim.alpha, "threshold model: matching radius");
    c_sim->add_option("--grid", sim.grid, "grid graphon file (header `k scale`)");
    c_sim->add_option("--out", sim.out, "edge list output path")->capture_default_str();

    std::string m_edges, m_patterns = "triangle,twostar", m_cov = "exact";
    auto* c_mom = app.add_subcommand("moments", "subgraph frequencies with exact covariance");
    c_mom->fallthrough();
    c_mom->add_option("--edges", m_edges, "edge list file")->required();
    c_mom->add_option("--patterns", m_patterns, "comma-separated pattern names")
        ->capture_default_str();
    c_mom->add_option("--cov", m_cov, "exact | subsample:M")->capture_default_str();

    std::string t_edges, t_cov = "exact";
    auto* c_ti = app.add_subcommand("transitivity", "triad census, both transitivity forms, SEs");
    c_ti->fallthrough();
    c_ti->add_option("--edges", t_edges, "edge list file")->required();
    c_ti->add_option("--cov", t_cov, "exact | subsample:M")->capture_default_str();

    DyadicArgs dyn;
    auto* c_dy = app.add_subcommand("dyadic-fit", "composite likelihood dyadic regression");
    c_dy->fallthrough();
    c_dy->add_option("--nodes", dyn.nodes, "node covariate csv (id column)")->required();
    c_dy->add_option("--dyads", dyn.dyads, "dyad outcome csv (i,j,y)")->required();
    c_dy->add_option("--recipe", dyn.recipe, "inline recipe or term-per-line file")
        ->capture_default_str();
    c_dy->add_option("--family", dyn.family, "poisson | logit | probit | linear")
        ->capture_default_str();
    c_dy->add_option("--vcov", dyn.vcov, "fg | jk | jkbc | analog | limit")
        ->capture_default_str();
    c_dy->add_option("--bootstrap", dyn.bootstrap, "method:B=count, e.g. weighted:B=999");
    c_dy->add_flag("--undirected", dyn.undirected, "mirror each dyad row");

    AsfArgs asfa;
    auto* c_asf = app.add_subcommand("asf", "average structural function and contrasts");
    c_asf->fallthrough();
    c_asf->add_option("--nodes", asfa.nodes, "node covariate csv")->required();
    c_asf->add_option("--dyads", asfa.dyads, "dyad outcome csv")->required();
    c_asf->add_option("--recipe", asfa.recipe, "proxy regression recipe")->required();
    c_asf->add_option("--family", asfa.family, "outcome family")->capture_default_str();
    c_asf->add_option("--omega", asfa.omega, "first-stage variance selector")
        ->capture_default_str();
    c_asf->add_option("--w", asfa.w, "ego policy value")->capture_default_str();
    c_asf->add_option("--x", asfa.x, "alter policy value")->capture_default_str();
    c_asf->add_option("--wcol", asfa.wcol, "ego treatment column")->capture_default_str();
    c_asf->add_option("--xcol", asfa.xcol, "alter treatment column")->capture_default_str();
    c_asf->add_option("--contrast", asfa.contrast, "ate | complementarity");
    c_asf->add_option("--kappa", asfa.kappa, "overlap floor (0 = diagnostic only)")
        ->capture_default_str();
    c_asf->add_flag("--undirected", asfa.undirected, "mirror each dyad row");

    TriadArgs tri;
    auto* c_tri = app.add_subcommand("triad-probit", "triad simulated likelihood probit");
    c_tri->fallthrough();
    c_tri->add_option("--edges", tri.edges, "directed arc list (`u v` lines)")->required();
    c_tri->add_option("--covariates", tri.covariates, "node covariate csv");
    c_tri->add_option("--n", tri.n, "vertex count when no covariate file is given");
    c_tri->add_option("--recipe", tri.recipe, "index recipe")->capture_default_str();
    c_tri->add_option("--draws", tri.draws, "ghk draws per orthant")->capture_default_str();
    c_tri->add_option("--pool", tri.pool, "triad score pool for the variance")
        ->capture_default_str();
    c_tri->add_option("--max-iter", tri.max_iter, "simplex iteration cap")
        ->capture_default_str();

    auto* c_str = app.add_subcommand("strategic", "equilibrium and estimation routines");
    c_str->require_subcommand(1);
    std::map<std::string, std::string> strat_cfg;
    const std::pair<const char*, const char*> strat_subs[] = {
        {"equilibria", "extremal pairwise-stable networks under drawn shocks"},
        {"smd", "simulated minimum distance from subgraph moments"},
        {"leung", "two-step belief estimator: fit, beliefs, or simulate"},
        {"mele", "meeting-chain simulation with small-n exact stationary law"}};
    for (auto [name, what] : strat_subs) {
        auto* sub = c_str->add_subcommand(name, what);
        sub->fallthrough();
        sub->add_option("--config", strat_cfg[name], "json parameter file")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    njson config, results;
    std::string command;
    int code = 0;
    try {
        if (c_sim->parsed()) {
            command = "simulate";
            results = run_simulate(ctx, sim, config);
        } else if (c_mom->parsed()) {
            command = "moments";
            results = run_moments(ctx, m_edges, m_patterns, m_cov, false, config);
        } else if (c_ti->parsed()) {
            command = "transitivity";
            results = run_moments(ctx, t_edges, "", t_cov, true, config);
        } else if (c_dy->parsed()) {
            command = "dyadic-fit";
            results = run_dyadic_fit(ctx, dyn, config);
        } else if (c_asf->parsed()) {
            command = "asf";
            results = run_asf(ctx, asfa, config);
        } else if (c_tri->parsed()) {
            command = "triad-probit";
            results = run_triad_probit(ctx, tri, config);
        } else if (c_str->parsed()) {
            for (auto* sub : c_str->get_subcommands()) {
                command = "strategic " + sub->get_name();
                const std::string& path = strat_cfg[sub->get_name()];
                njson cfg = njson::parse(ctx.read_file("config", path));
                config = cfg;
                if (sub->get_name() == "equilibria") results = run_strategic_equilibria(ctx, cfg);
                if (sub->get_name() == "smd") results = run_strategic_smd(ctx, cfg);
                if (sub->get_name() == "leung") results = run_strategic_leung(ctx, cfg);
                if (sub->get_name() == "mele") results = run_strategic_mele(ctx, cfg);
            }
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const njson::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    njson doc;
    doc["meta"] = njson{{"version", kVersion},
                        {"command", command},
                        {"seed", ctx.seed},
                        {"threads", ctx.threads},
                        {"wall_seconds", wall}};
    doc["config"] = config;
    doc["inputs"] = ctx.inputs;
    doc["results"] = results;

    std::string text = emit_json(doc);
    if (json_out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(json_out, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << json_out << "\n";
            return 2;
        }
        out << text;
    }
    return code;
}
