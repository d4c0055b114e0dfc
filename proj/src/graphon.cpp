#include "netecon/graphon.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "netecon/rng.hpp"

namespace netecon {

GraphonSpec GraphonSpec::er(double rho) {
    GraphonSpec s;
    s.kind = Kind::er;
    s.rho = rho;
    return s;
}

GraphonSpec GraphonSpec::beta_normal(double mu, double sigma) {
    GraphonSpec s;
    s.kind = Kind::beta;
    s.udist = UDist::normal;
    s.mu = mu;
    s.sigma = sigma;
    return s;
}

GraphonSpec GraphonSpec::beta_twopoint(double lo, double hi, double plo) {
    GraphonSpec s;
    s.kind = Kind::beta;
    s.udist = UDist::twopoint;
    s.lo = lo;
    s.hi = hi;
    s.plo = plo;
    return s;
}

GraphonSpec GraphonSpec::threshold(double alpha) {
    GraphonSpec s;
    s.kind = Kind::threshold;
    s.alpha = alpha;
    return s;
}

static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double graphon_value(const GraphonSpec& spec, double ui, double uj) {
    switch (spec.kind) {
        case GraphonSpec::Kind::er:
            return spec.rho;
        case GraphonSpec::Kind::beta:
            return logistic(ui + uj);
        case GraphonSpec::Kind::threshold:
            return std::fabs(ui - uj) <= spec.alpha ? 1.0 : 0.0;
        case GraphonSpec::Kind::grid: {
            int a = std::min(spec.k - 1, int(ui * spec.k));
            int b = std::min(spec.k - 1, int(uj * spec.k));
            double p = spec.scale * spec.w[std::size_t(a) * spec.k + b];
            return std::min(1.0, std::max(0.0, p));
        }
    }
    return 0.0;
}

GraphonSample sample_graphon(const GraphonSpec& spec, int n, std::uint64_t seed) {
    GraphonSample out;
    out.g = Graph(n);
    out.u.assign(n, 0.0);

    Rng urng(seed, "graphon-u");
    for (int i = 0; i < n; ++i) {
        switch (spec.kind) {
            case GraphonSpec::Kind::er:
                out.u[i] = urng.uniform();
                break;
            case GraphonSpec::Kind::beta:
                out.u[i] = spec.udist == GraphonSpec::UDist::normal
                               ? spec.mu + spec.sigma * urng.normal()
                               : (urng.uniform() < spec.plo ? spec.lo : spec.hi);
                break;
            default:
                out.u[i] = urng.uniform();
        }
    }

    Rng erng(seed, "graphon-edges");
    for (int j = 1; j < n; ++j)
        for (int i = 0; i < j; ++i) {
            double p = graphon_value(spec, out.u[i], out.u[j]);
            double v = erng.uniform();
            if (v < p) out.g.add_edge(i, j);
        }
    return out;
}

double beta_loglik(const Graph& g, const std::vector<double>& u) {
    if (int(u.size()) != g.n()) throw std::invalid_argument("u size != n");
    double ll = 0.0;
    for (int j = 1; j < g.n(); ++j)
        for (int i = 0; i < j; ++i) {
            double x = u[i] + u[j];
            // y*x - log(1+exp(x)), stable at both tails
            double y = g.has_edge(i, j) ? 1.0 : 0.0;
            double lse = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
            ll += y * x - lse;
        }
    return ll;
}

GraphonSpec load_grid_graphon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graphon grid: " + path);
    GraphonSpec s;
    s.kind = GraphonSpec::Kind::grid;
    if (!(in >> s.k >> s.scale) || s.k < 1 || s.k > 4096)
        throw std::runtime_error("bad graphon grid header (want: k scale)");
    s.w.assign(std::size_t(s.k) * s.k, 0.0);
    for (auto& x : s.w)
        if (!(in >> x)) throw std::runtime_error("graphon grid: expected k*k probabilities");
    for (int a = 0; a < s.k; ++a)
        for (int b = 0; b < a; ++b) {
            double &x = s.w[std::size_t(a) * s.k + b], &y = s.w[std::size_t(b) * s.k + a];
            if (std::fabs(x - y) > 1e-12) throw std::runtime_error("graphon grid not symmetric");
            y = x;
        }
    for (double x : s.w)
        if (x < 0) throw std::runtime_error("graphon grid has negative entries");
    return s;
}

}  // namespace netecon
