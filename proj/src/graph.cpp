#include "netecon/graph.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace netecon {

Mask permute_mask(int p, Mask m, const int* perm) {
    Mask out = 0;
    for (int b = 0; b < order_pairs(p); ++b) {
        if (!((m >> b) & 1u)) continue;
        // invert pair_index: find (a,b) with colex rank b
        int hi = 1;
        while ((hi + 1) * hi / 2 <= b) ++hi;
        int lo = b - hi * (hi - 1) / 2;
        out |= Mask(1) << pair_index(perm[lo], perm[hi]);
    }
    return out;
}

Mask canonical_mask(int p, Mask m) {
    int perm[7];
    std::iota(perm, perm + p, 0);
    Mask best = m;
    while (std::next_permutation(perm, perm + p)) {
        Mask c = permute_mask(p, m, perm);
        if (c < best) best = c;
    }
    return best;
}

int labeled_copy_count(int p, Mask m) {
    int perm[7];
    std::iota(perm, perm + p, 0);
    std::set<Mask> images;
    images.insert(m);
    while (std::next_permutation(perm, perm + p)) images.insert(permute_mask(p, m, perm));
    return int(images.size());
}

bool mask_connected(int p, Mask m) {
    unsigned reach = 1;
    for (int pass = 0; pass < p; ++pass)
        for (int b = 1; b < p; ++b)
            for (int a = 0; a < b; ++a)
                if ((m >> pair_index(a, b)) & 1u) {
                    if (reach & (1u << a)) reach |= 1u << b;
                    if (reach & (1u << b)) reach |= 1u << a;
                }
    return reach == (1u << p) - 1u;
}

Graphlet::Graphlet(int order, const std::vector<std::pair<int, int>>& edges) : p(order) {
    for (auto [a, b] : edges) mask |= Mask(1) << pair_index(a, b);
}

int Graphlet::edge_count() const { return std::popcount(mask); }

std::vector<std::pair<int, int>> Graphlet::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int b = 1; b < p; ++b)
        for (int a = 0; a < b; ++a)
            if (has_edge(a, b)) out.push_back({a, b});
    return out;
}

const GraphletDict& GraphletDict::instance() {
    static GraphletDict dict;
    return dict;
}

const std::vector<Graphlet>& GraphletDict::classes(int p) const { return by_order_.at(p); }

GraphletDict::GraphletDict() {
    by_order_.resize(6);
    for (int p = 2; p <= 5; ++p) {
        std::set<Mask> seen;
        std::vector<Graphlet> cls;
        for (Mask m = 0; m < (Mask(1) << order_pairs(p)); ++m) {
            Mask c = canonical_mask(p, m);
            if (seen.insert(c).second) cls.push_back(Graphlet(p, c));
        }
        std::sort(cls.begin(), cls.end(), [](const Graphlet& a, const Graphlet& b) {
            if (a.edge_count() != b.edge_count()) return a.edge_count() < b.edge_count();
            return a.mask < b.mask;
        });
        by_order_[p] = cls;
        for (int i = 0; i < int(cls.size()); ++i) index_[{p, cls[i].mask}] = i;
    }

    using E = std::vector<std::pair<int, int>>;
    auto reg = [&](const std::string& nm, int p, const E& e, const std::vector<std::string>& al = {}) {
        Graphlet g(p, e);
        names_[{p, g.canon()}] = nm;
        aliases_[nm] = Graphlet(p, g.canon());
        for (auto& a : al) aliases_[a] = Graphlet(p, g.canon());
    };
    reg("empty2", 2, {});
    reg("edge", 2, {{0, 1}});
    reg("empty3", 3, {});
    reg("oneedge", 3, {{0, 1}});
    reg("twostar", 3, {{0, 1}, {0, 2}}, {"wedge", "twopath"});
    reg("triangle", 3, {{0, 1}, {0, 2}, {1, 2}});
    reg("empty4", 4, {});
    reg("oneedge4", 4, {{0, 1}});
    reg("matching", 4, {{0, 1}, {2, 3}});
    reg("twostar_plus", 4, {{0, 1}, {0, 2}});
    reg("threestar", 4, {{0, 1}, {0, 2}, {0, 3}}, {"claw", "onethreewheel"});
    reg("fourpath", 4, {{0, 1}, {1, 2}, {2, 3}});
    reg("triangle_plus", 4, {{0, 1}, {0, 2}, {1, 2}});
    reg("fourcycle", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    reg("tailedtriangle", 4, {{0, 1}, {0, 2}, {1, 2}, {0, 3}}, {"paw"});
    reg("chordalcycle", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}}, {"diamond"});
    reg("fourclique", 4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    reg("fourstar", 5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    reg("tailedthreestar", 5, {{0, 1}, {0, 2}, {0, 3}, {1, 4}});
    reg("fivepath", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    reg("twotriangle", 5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {2, 4}}, {"bowtie"});
    reg("twotailedtriangle", 5, {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {0, 4}}, {"cricket"});
    reg("rattailedtriangle", 5, {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {3, 4}}, {"tadpole"});
}

std::string GraphletDict::name(const Graphlet& g) const {
    auto it = names_.find({g.p, g.canon()});
    if (it != names_.end()) return it->second;
    char buf[32];
    auto idx = index_.find({g.p, g.canon()});
    if (idx != index_.end())
        std::snprintf(buf, sizeof buf, "g%d_%d", g.p, idx->second);
    else
        std::snprintf(buf, sizeof buf, "g%d_0x%x", g.p, unsigned(g.canon()));
    return buf;
}

bool GraphletDict::lookup(const std::string& nm, Graphlet* out) const {
    auto it = aliases_.find(nm);
    if (it != aliases_.end()) {
        *out = it->second;
        return true;
    }
    // generic "g<p>_<index>"
    if (nm.size() > 3 && nm[0] == 'g') {
        int p = 0, idx = 0;
        if (std::sscanf(nm.c_str(), "g%d_%d", &p, &idx) == 2 && p >= 2 && p <= 5 &&
            idx >= 0 && idx < int(by_order_[p].size())) {
            *out = by_order_[p][idx];
            return true;
        }
    }
    return false;
}

int GraphletDict::class_index(const Graphlet& g) const {
    auto it = index_.find({g.p, g.canon()});
    return it == index_.end() ? -1 : it->second;
}

void Graph::add_edge(int i, int j) {
    if (i == j) throw std::invalid_argument("self loop");
    adj_[std::size_t(i) * stride_ + (j >> 6)] |= 1ull << (j & 63);
    adj_[std::size_t(j) * stride_ + (i >> 6)] |= 1ull << (i & 63);
}

void Graph::remove_edge(int i, int j) {
    adj_[std::size_t(i) * stride_ + (j >> 6)] &= ~(1ull << (j & 63));
    adj_[std::size_t(j) * stride_ + (i >> 6)] &= ~(1ull << (i & 63));
}

int Graph::degree(int i) const {
    const std::uint64_t* r = row(i);
    int d = 0;
    for (int w = 0; w < stride_; ++w) d += std::popcount(r[w]);
    return d;
}

std::vector<int> Graph::degrees() const {
    std::vector<int> d(n_);
    for (int i = 0; i < n_; ++i) d[i] = degree(i);
    return d;
}

long long Graph::edge_count() const {
    long long s = 0;
    for (int i = 0; i < n_; ++i) s += degree(i);
    return s / 2;
}

double Graph::density() const {
    if (n_ < 2) return 0.0;
    return double(edge_count()) / (0.5 * n_ * (n_ - 1));
}

int Graph::common_neighbors(int i, int j) const {
    const std::uint64_t* a = row(i);
    const std::uint64_t* b = row(j);
    int c = 0;
    for (int w = 0; w < stride_; ++w) c += std::popcount(a[w] & b[w]);
    // i and j themselves are never neighbors of themselves; shared bits can
    // include each other only via self loops, which are impossible
    return c;
}

std::vector<std::pair<int, int>> Graph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            if (has_edge(i, j)) out.push_back({i, j});
    return out;
}

Mask Graph::tuple_mask(const std::vector<int>& v) const {
    Mask m = 0;
    int b = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        for (std::size_t i = 0; i < j; ++i, ++b)
            if (has_edge(v[i], v[j])) m |= Mask(1) << b;
    return m;
}

Graph Graph::complement() const {
    Graph g(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            if (!has_edge(i, j)) g.add_edge(i, j);
    return g;
}

static Graph parse_stream(std::istream& in, EdgeListReport* report, int force_n) {
    std::vector<std::pair<long long, long long>> raw;
    EdgeListReport rep;
    long long maxid = -1;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        long long u, v;
        if (!(ls >> u >> v)) {
            std::string tok;
            std::istringstream probe(line);
            if (probe >> tok) ++rep.lines_skipped;
            continue;
        }
        if (u < 0 || v < 0) {
            ++rep.lines_skipped;
            continue;
        }
        if (u == v) {
            ++rep.self_loops;
            continue;
        }
        raw.push_back({u, v});
        maxid = std::max({maxid, u, v});
    }
    long long n = std::max<long long>(maxid + 1, force_n);
    if (n > 100000) throw std::runtime_error("edge list implies more than 1e5 vertices");
    Graph g{int(n)};
    for (auto [u, v] : raw) {
        if (g.has_edge(int(u), int(v)))
            ++rep.duplicates;
        else {
            g.add_edge(int(u), int(v));
            ++rep.edges_kept;
        }
    }
    rep.n = int(n);
    if (report) *report = rep;
    return g;
}

Graph load_edgelist(const std::string& path, EdgeListReport* report, int force_n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);
    return parse_stream(in, report, force_n);
}

Graph parse_edgelist(const std::string& text, EdgeListReport* report, int force_n) {
    std::istringstream in(text);
    return parse_stream(in, report, force_n);
}

void save_edgelist(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    out << "# n=" << g.n() << "\n";
    for (auto [i, j] : g.edges()) out << i << " " << j << "\n";
}

}  // namespace netecon
