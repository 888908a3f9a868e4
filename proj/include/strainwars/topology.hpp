#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strainwars {

/// Unsigned 128-bit integer. Tree levels at depth 40 with d = 8 already hold
/// more than 2^64 sites, so offsets and site counts need the wider type.
using SiteCount = unsigned __int128;

std::string to_string(SiteCount value);

/// Stable identifier of a site.
///
/// Torus sites carry their flattened coordinate index in `offset` and depth 0.
/// Tree sites carry their distance from the root in `depth` and their position
/// within that level in `offset`. Level k of the tree is laid out so that the
/// children of (k, o) are (k + 1, o * d + j) for j in [0, d), which makes the
/// parent/children relation a pure function of the address.
struct SiteId
{
    std::uint32_t depth = 0;
    SiteCount offset = 0;

    friend bool operator==(const SiteId&, const SiteId&) = default;
    friend std::strong_ordering operator<=>(const SiteId& a, const SiteId& b)
    {
        if (auto c = a.depth <=> b.depth; c != 0)
            return c;
        return a.offset <=> b.offset;
    }
};

struct SiteIdHash
{
    std::size_t operator()(const SiteId& s) const noexcept
    {
        auto lo = static_cast<std::uint64_t>(s.offset);
        auto hi = static_cast<std::uint64_t>(s.offset >> 64);
        std::uint64_t h = lo * 0x9E3779B97F4A7C15ULL;
        h ^= (hi + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
        h ^= (static_cast<std::uint64_t>(s.depth) * 0xBF58476D1CE4E5B9ULL);
        h ^= h >> 31;
        return static_cast<std::size_t>(h);
    }
};

enum class TopologyKind
{
    torus,
    tree,
    path  // finite segment 0 - 1 - ... - (n-1); small validation graphs only
};

class TopologyError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Largest torus (in sites) accepted unless the caller raises the budget.
inline constexpr std::uint64_t kDefaultSiteBudget = std::uint64_t{1} << 26;

/// The site graph: a periodic torus standing in for Z^d, or the homogeneous
/// tree T_d truncated at depth R. Immutable once built; tree sites are never
/// materialized here, every query decodes the address directly.
class Topology
{
public:
    static Topology torus(int d, int side, std::uint64_t site_budget = kDefaultSiteBudget);
    static Topology tree(int d, int depth);
    /// Segment of n >= 1 sites with free ends, origin at site 0.
    static Topology path_graph(int sites);

    TopologyKind kind() const noexcept { return kind_; }
    bool is_tree() const noexcept { return kind_ == TopologyKind::tree; }
    /// Lattice dimension for tori (1 for paths), number of children per site for trees.
    int d() const noexcept { return d_; }
    /// Side length L for tori, truncation depth R for trees, site count for paths.
    int extent() const noexcept { return extent_; }

    SiteId origin() const noexcept { return SiteId{}; }
    SiteCount site_count() const noexcept { return site_count_; }

    bool contains(const SiteId& site) const noexcept;

    /// Adjacent sites in deterministic order: axis order (-1 then +1 per axis)
    /// on tori, parent first and then children on trees. Throws TopologyError
    /// for a site that does not belong to the topology.
    std::vector<SiteId> neighbors(const SiteId& site) const;
    void neighbors_into(const SiteId& site, std::vector<SiteId>& out) const;
    std::size_t degree(const SiteId& site) const;

    /// Number of sites at graph distance exactly r from the origin.
    SiteCount sphere_size(int r) const;
    int distance_from_origin(const SiteId& site) const;

    /// Sites where truncation can bias a run: depth R on trees, distance
    /// floor(L/2) from the origin on tori (where wrap-around starts to matter),
    /// the far end of a path.
    bool on_boundary(const SiteId& site) const;

    /// True for L = 2 tori, where both axis neighbors coincide and are merged.
    bool neighbors_collapsed() const noexcept { return kind_ == TopologyKind::torus && extent_ == 2; }

    /// Every site in canonical order. Throws if the topology has more than
    /// `limit` sites.
    std::vector<SiteId> enumerate_sites(std::uint64_t limit = kDefaultSiteBudget) const;

    /// Torus helpers.
    std::vector<int> coordinates(const SiteId& site) const;
    SiteId site_at(const std::vector<int>& coords) const;

    /// Tree helpers: the child choices from the root, first entry in [0, d],
    /// later entries in [0, d).
    std::vector<int> path(const SiteId& site) const;
    SiteId site_from_path(const std::vector<int>& path) const;

    /// Human-readable site address: flattened index for tori, "/c1/c2/..."
    /// child path for trees ("/" is the root).
    std::string site_name(const SiteId& site) const;
    SiteId parse_site(const std::string& text) const;

    /// "torus d=2 L=10" / "tree d=8 R=40" / "path n=3".
    std::string describe() const;

    friend bool operator==(const Topology& a, const Topology& b) noexcept
    {
        return a.kind_ == b.kind_ && a.d_ == b.d_ && a.extent_ == b.extent_;
    }

private:
    Topology(TopologyKind kind, int d, int extent);

    void require(const SiteId& site) const;
    SiteCount level_width(int depth) const noexcept;

    TopologyKind kind_;
    int d_;
    int extent_;
    SiteCount site_count_ = 0;
    std::vector<SiteCount> level_width_;  // tree only, indexed by depth
};

}  // namespace strainwars
