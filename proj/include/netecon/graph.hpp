#pragma once
// Simple undirected graphs on dense bitset adjacency, plus small pattern
// graphs ("graphlets") with canonical forms. Vertex ids are 0-based.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace netecon {

// index of the unordered pair {a,b}, a<b, in colex order:
// {0,1}=0, {0,2}=1, {1,2}=2, {0,3}=3, ...
inline int pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    return b * (b - 1) / 2 + a;
}

inline int order_pairs(int p) { return p * (p - 1) / 2; }

// adjacency of a graph on p <= 7 labeled vertices packed into the low
// order_pairs(p) bits, bit pair_index(a,b) set iff {a,b} is an edge
using Mask = std::uint32_t;

Mask permute_mask(int p, Mask m, const int* perm);
Mask canonical_mask(int p, Mask m);
// number of distinct labeled placements of the pattern on p fixed vertices,
// i.e. p! / |Aut|
int labeled_copy_count(int p, Mask m);
bool mask_connected(int p, Mask m);

struct Graphlet {
    int p = 0;
    Mask mask = 0;

    Graphlet() = default;
    Graphlet(int order, Mask m) : p(order), mask(m) {}
    Graphlet(int order, const std::vector<std::pair<int, int>>& edges);

    int edge_count() const;
    Mask canon() const { return canonical_mask(p, mask); }
    int iso() const { return labeled_copy_count(p, mask); }
    bool has_edge(int a, int b) const { return (mask >> pair_index(a, b)) & 1u; }
    std::vector<std::pair<int, int>> edges() const;
    bool same_class(const Graphlet& o) const { return p == o.p && canon() == o.canon(); }
};

// named classes for orders 2..5; unnamed classes get "g<p>_<index>"
struct GraphletDict {
    static const GraphletDict& instance();
    // all isomorphism classes of the given order, sorted by (edges, canon mask)
    const std::vector<Graphlet>& classes(int p) const;
    std::string name(const Graphlet& g) const;            // canonical name
    bool lookup(const std::string& name, Graphlet* out) const;  // accepts aliases
    int class_index(const Graphlet& g) const;             // index within classes(p)

  private:
    GraphletDict();
    std::vector<std::vector<Graphlet>> by_order_;          // [p] for p=0..5
    std::map<std::pair<int, Mask>, std::string> names_;
    std::map<std::string, Graphlet> aliases_;
    std::map<std::pair<int, Mask>, int> index_;
};

class Graph {
  public:
    Graph() = default;
    explicit Graph(int n) : n_(n), stride_((n + 63) / 64), adj_(std::size_t(n) * stride_, 0) {}

    int n() const { return n_; }
    bool has_edge(int i, int j) const {
        return (adj_[std::size_t(i) * stride_ + (j >> 6)] >> (j & 63)) & 1ull;
    }
    void add_edge(int i, int j);
    void remove_edge(int i, int j);
    void set_edge(int i, int j, bool on) { on ? add_edge(i, j) : remove_edge(i, j); }

    int degree(int i) const;
    std::vector<int> degrees() const;
    long long edge_count() const;
    double density() const;
    int common_neighbors(int i, int j) const;

    std::vector<std::pair<int, int>> edges() const;  // i<j, sorted

    const std::uint64_t* row(int i) const { return adj_.data() + std::size_t(i) * stride_; }
    int stride() const { return stride_; }

    // adjacency of the tuple (verts[0..k-1]) as a pattern mask
    template <std::size_t K>
    Mask tuple_mask(const std::array<int, K>& v) const {
        Mask m = 0;
        int b = 0;
        for (std::size_t j = 1; j < K; ++j)
            for (std::size_t i = 0; i < j; ++i, ++b)
                if (has_edge(v[i], v[j])) m |= Mask(1) << b;
        return m;
    }
    Mask tuple_mask(const std::vector<int>& v) const;

    Graph complement() const;

  private:
    int n_ = 0;
    int stride_ = 0;
    std::vector<std::uint64_t> adj_;
};

struct EdgeListReport {
    int n = 0;
    long long edges_kept = 0;
    long long duplicates = 0;
    long long self_loops = 0;
    long long lines_skipped = 0;
};

// whitespace-separated "u v" pairs, one per line; '#' starts a comment;
// vertex ids are nonnegative integers. n is max id + 1 unless force_n larger.
Graph load_edgelist(const std::string& path, EdgeListReport* report = nullptr, int force_n = 0);
Graph parse_edgelist(const std::string& text, EdgeListReport* report = nullptr, int force_n = 0);
void save_edgelist(const Graph& g, const std::string& path);

}  // namespace netecon
