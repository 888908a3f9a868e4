#include "strainwars/topology.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>

namespace strainwars {

std::string to_string(SiteCount value)
{
    if (value == 0)
        return "0";
    std::string digits;
    while (value > 0)
    {
        digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

namespace {

constexpr SiteCount kMaxCount = ~SiteCount{0} >> 1;

bool mul_overflows(SiteCount a, SiteCount b) { return b != 0 && a > kMaxCount / b; }

}  // namespace

Topology::Topology(TopologyKind kind, int d, int extent) : kind_(kind), d_(d), extent_(extent) {}

Topology Topology::torus(int d, int side, std::uint64_t site_budget)
{
    if (d < 1)
        throw TopologyError("torus dimension must be >= 1, got " + std::to_string(d));
    if (side < 2)
        throw TopologyError("torus side length must be >= 2, got " + std::to_string(side));
    Topology t(TopologyKind::torus, d, side);
    SiteCount count = 1;
    for (int i = 0; i < d; ++i)
    {
        count *= static_cast<SiteCount>(side);
        if (count > site_budget)
            throw TopologyError("torus with L^d = " + std::to_string(side) + "^" + std::to_string(d) +
                                " sites exceeds the site budget of " + std::to_string(site_budget));
    }
    t.site_count_ = count;
    return t;
}

Topology Topology::tree(int d, int depth)
{
    if (d < 2)
        throw TopologyError("tree branching d must be >= 2, got " + std::to_string(d));
    if (depth < 1)
        throw TopologyError("tree depth R must be >= 1, got " + std::to_string(depth));
    Topology t(TopologyKind::tree, d, depth);
    t.level_width_.resize(static_cast<std::size_t>(depth) + 1);
    t.level_width_[0] = 1;
    SiteCount width = static_cast<SiteCount>(d + 1);
    SiteCount total = 1;
    for (int k = 1; k <= depth; ++k)
    {
        if (k > 1)
        {
            if (mul_overflows(width, static_cast<SiteCount>(d)))
                throw TopologyError("tree d=" + std::to_string(d) + " R=" + std::to_string(depth) +
                                    " is too deep to address with 127-bit offsets");
            width *= static_cast<SiteCount>(d);
        }
        t.level_width_[static_cast<std::size_t>(k)] = width;
        if (total > kMaxCount - width)
            throw TopologyError("tree d=" + std::to_string(d) + " R=" + std::to_string(depth) +
                                " is too deep to address with 127-bit offsets");
        total += width;
    }
    t.site_count_ = total;
    return t;
}

Topology Topology::path_graph(int sites)
{
    if (sites < 1)
        throw TopologyError("path needs at least one site, got " + std::to_string(sites));
    Topology t(TopologyKind::path, 1, sites);
    t.site_count_ = static_cast<SiteCount>(sites);
    return t;
}

SiteCount Topology::level_width(int depth) const noexcept
{
    return level_width_[static_cast<std::size_t>(depth)];
}

bool Topology::contains(const SiteId& site) const noexcept
{
    if (kind_ != TopologyKind::tree)
        return site.depth == 0 && site.offset < site_count_;
    if (site.depth > static_cast<std::uint32_t>(extent_))
        return false;
    return site.offset < level_width(static_cast<int>(site.depth));
}

void Topology::require(const SiteId& site) const
{
    if (!contains(site))
        throw TopologyError("site (depth " + std::to_string(site.depth) + ", offset " + to_string(site.offset) +
                            ") does not belong to " + describe());
}

void Topology::neighbors_into(const SiteId& site, std::vector<SiteId>& out) const
{
    require(site);
    out.clear();
    if (kind_ == TopologyKind::path)
    {
        if (site.offset > 0)
            out.push_back(SiteId{0, site.offset - 1});
        if (site.offset + 1 < site_count_)
            out.push_back(SiteId{0, site.offset + 1});
        return;
    }
    if (kind_ == TopologyKind::torus)
    {
        const auto L = static_cast<SiteCount>(extent_);
        SiteCount stride = 1;
        for (int axis = 0; axis < d_; ++axis)
        {
            const SiteCount coord = (site.offset / stride) % L;
            const SiteCount base = site.offset - coord * stride;
            const SiteCount down = (coord + L - 1) % L;
            const SiteCount up = (coord + 1) % L;
            out.push_back(SiteId{0, base + down * stride});
            if (up != down)
                out.push_back(SiteId{0, base + up * stride});
            stride *= L;
        }
        return;
    }

    const auto dd = static_cast<SiteCount>(d_);
    if (site.depth == 1)
        out.push_back(SiteId{});
    else if (site.depth > 1)
        out.push_back(SiteId{site.depth - 1, site.offset / dd});

    if (site.depth == static_cast<std::uint32_t>(extent_))
        return;
    if (site.depth == 0)
    {
        for (int j = 0; j <= d_; ++j)
            out.push_back(SiteId{1, static_cast<SiteCount>(j)});
        return;
    }
    for (int j = 0; j < d_; ++j)
        out.push_back(SiteId{site.depth + 1, site.offset * dd + static_cast<SiteCount>(j)});
}

std::vector<SiteId> Topology::neighbors(const SiteId& site) const
{
    std::vector<SiteId> out;
    neighbors_into(site, out);
    return out;
}

std::size_t Topology::degree(const SiteId& site) const
{
    require(site);
    if (kind_ == TopologyKind::path)
        return (site.offset > 0 ? 1u : 0u) + (site.offset + 1 < site_count_ ? 1u : 0u);
    if (kind_ == TopologyKind::torus)
        return static_cast<std::size_t>(extent_ == 2 ? d_ : 2 * d_);
    if (site.depth == 0)
        return static_cast<std::size_t>(d_ + 1);
    if (site.depth == static_cast<std::uint32_t>(extent_))
        return 1;
    return static_cast<std::size_t>(d_ + 1);
}

SiteCount Topology::sphere_size(int r) const
{
    if (r < 0)
        throw TopologyError("sphere radius must be >= 0");
    if (kind_ == TopologyKind::tree)
    {
        if (r > extent_)
            throw TopologyError("sphere radius " + std::to_string(r) + " exceeds tree depth " +
                                std::to_string(extent_));
        return level_width(r);
    }
    if (kind_ == TopologyKind::path)
    {
        if (r >= extent_)
            throw TopologyError("sphere radius " + std::to_string(r) + " exceeds path length");
        return 1;
    }
    if (r > d_ * (extent_ / 2))
        throw TopologyError("sphere radius " + std::to_string(r) + " exceeds the torus diameter " +
                            std::to_string(d_ * (extent_ / 2)));

    // Per-axis torus distance histogram, convolved over the d axes.
    const int half = extent_ / 2;
    std::vector<SiteCount> axis(static_cast<std::size_t>(half) + 1, 0);
    for (int c = 0; c < extent_; ++c)
        axis[static_cast<std::size_t>(std::min(c, extent_ - c))] += 1;

    std::vector<SiteCount> acc{1};
    for (int i = 0; i < d_; ++i)
    {
        std::vector<SiteCount> next(acc.size() + axis.size() - 1, 0);
        for (std::size_t a = 0; a < acc.size(); ++a)
            for (std::size_t b = 0; b < axis.size(); ++b)
                next[a + b] += acc[a] * axis[b];
        acc = std::move(next);
    }
    return static_cast<std::size_t>(r) < acc.size() ? acc[static_cast<std::size_t>(r)] : 0;
}

int Topology::distance_from_origin(const SiteId& site) const
{
    require(site);
    if (kind_ == TopologyKind::tree)
        return static_cast<int>(site.depth);
    if (kind_ == TopologyKind::path)
        return static_cast<int>(site.offset);
    int dist = 0;
    for (int c : coordinates(site))
        dist += std::min(c, extent_ - c);
    return dist;
}

bool Topology::on_boundary(const SiteId& site) const
{
    if (kind_ == TopologyKind::tree)
        return site.depth == static_cast<std::uint32_t>(extent_);
    if (kind_ == TopologyKind::path)
        return site.offset + 1 == site_count_;
    if (d_ == 1)
        return distance_from_origin(site) >= extent_ / 2;
    for (int c : coordinates(site))
        if (std::min(c, extent_ - c) >= extent_ / 2)
            return true;
    return false;
}

std::vector<SiteId> Topology::enumerate_sites(std::uint64_t limit) const
{
    if (site_count_ > limit)
        throw TopologyError(describe() + " has " + to_string(site_count_) + " sites, more than the enumeration limit " +
                            std::to_string(limit));
    std::vector<SiteId> sites;
    sites.reserve(static_cast<std::size_t>(site_count_));
    if (kind_ != TopologyKind::tree)
    {
        for (SiteCount i = 0; i < site_count_; ++i)
            sites.push_back(SiteId{0, i});
        return sites;
    }
    for (int k = 0; k <= extent_; ++k)
        for (SiteCount o = 0; o < level_width(k); ++o)
            sites.push_back(SiteId{static_cast<std::uint32_t>(k), o});
    return sites;
}

std::vector<int> Topology::coordinates(const SiteId& site) const
{
    if (kind_ == TopologyKind::tree)
        throw TopologyError("coordinates are not defined on trees");
    require(site);
    std::vector<int> coords(static_cast<std::size_t>(d_));
    SiteCount rest = site.offset;
    for (auto& c : coords)
    {
        c = static_cast<int>(rest % static_cast<SiteCount>(extent_));
        rest /= static_cast<SiteCount>(extent_);
    }
    return coords;
}

SiteId Topology::site_at(const std::vector<int>& coords) const
{
    if (kind_ == TopologyKind::tree)
        throw TopologyError("coordinates are not defined on trees");
    if (kind_ == TopologyKind::path)
    {
        if (coords.size() != 1 || coords[0] < 0 || coords[0] >= extent_)
            throw TopologyError("path coordinate out of range");
        return SiteId{0, static_cast<SiteCount>(coords[0])};
    }
    if (coords.size() != static_cast<std::size_t>(d_))
        throw TopologyError("expected " + std::to_string(d_) + " coordinates");
    SiteCount index = 0;
    for (auto it = coords.rbegin(); it != coords.rend(); ++it)
    {
        const int wrapped = ((*it % extent_) + extent_) % extent_;
        index = index * static_cast<SiteCount>(extent_) + static_cast<SiteCount>(wrapped);
    }
    return SiteId{0, index};
}

std::vector<int> Topology::path(const SiteId& site) const
{
    if (kind_ != TopologyKind::tree)
        throw TopologyError("paths are only defined on trees");
    require(site);
    std::vector<int> choices(site.depth);
    SiteCount o = site.offset;
    for (std::size_t k = site.depth; k > 1; --k)
    {
        choices[k - 1] = static_cast<int>(o % static_cast<SiteCount>(d_));
        o /= static_cast<SiteCount>(d_);
    }
    if (site.depth >= 1)
        choices[0] = static_cast<int>(o);
    return choices;
}

SiteId Topology::site_from_path(const std::vector<int>& choices) const
{
    if (kind_ != TopologyKind::tree)
        throw TopologyError("paths are only defined on trees");
    if (choices.size() > static_cast<std::size_t>(extent_))
        throw TopologyError("path longer than tree depth " + std::to_string(extent_));
    SiteId site{};
    for (std::size_t k = 0; k < choices.size(); ++k)
    {
        const int c = choices[k];
        const int limit = k == 0 ? d_ + 1 : d_;
        if (c < 0 || c >= limit)
            throw TopologyError("child choice " + std::to_string(c) + " out of range at depth " + std::to_string(k + 1));
        site.offset = k == 0 ? static_cast<SiteCount>(c)
                             : site.offset * static_cast<SiteCount>(d_) + static_cast<SiteCount>(c);
        site.depth = static_cast<std::uint32_t>(k + 1);
    }
    return site;
}

std::string Topology::site_name(const SiteId& site) const
{
    if (kind_ != TopologyKind::tree)
    {
        require(site);
        return to_string(site.offset);
    }
    const auto choices = path(site);
    if (choices.empty())
        return "/";
    std::string name;
    for (int c : choices)
        name += "/" + std::to_string(c);
    return name;
}

SiteId Topology::parse_site(const std::string& text) const
{
    auto parse_int = [&](std::string_view part) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || ptr != part.data() + part.size())
            throw TopologyError("malformed site address '" + text + "'");
        return value;
    };
    if (kind_ != TopologyKind::tree)
    {
        std::uint64_t index = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), index);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw TopologyError("malformed site index '" + text + "'");
        SiteId site{0, index};
        require(site);
        return site;
    }
    if (text.empty() || text.front() != '/')
        throw TopologyError("tree site addresses start with '/', got '" + text + "'");
    std::vector<int> choices;
    std::string_view rest(text);
    rest.remove_prefix(1);
    while (!rest.empty())
    {
        const auto slash = rest.find('/');
        choices.push_back(parse_int(rest.substr(0, slash)));
        if (slash == std::string_view::npos)
            break;
        rest.remove_prefix(slash + 1);
    }
    return site_from_path(choices);
}

std::string Topology::describe() const
{
    std::ostringstream os;
    if (kind_ == TopologyKind::torus)
        os << "torus d=" << d_ << " L=" << extent_;
    else if (kind_ == TopologyKind::tree)
        os << "tree d=" << d_ << " R=" << extent_;
    else
        os << "path n=" << extent_;
    return os.str();
}

}  // namespace strainwars
