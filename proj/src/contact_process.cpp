#include "strainwars/contact_process.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace strainwars {

namespace {

constexpr SiteCount kDenseLookupLimit = SiteCount{1} << 22;

int strain_index(Strain s) { return s == Strain::one ? 0 : 1; }

}  // namespace

void validate_configuration(const Topology& topology, const Configuration& config)
{
    for (const auto& [site, strain] : config)
    {
        if (!topology.contains(site))
            throw TopologyError("configuration contains a site outside " + topology.describe());
        if (strain != Strain::one && strain != Strain::two)
            throw std::invalid_argument("configuration values must be strain 1 or 2 (susceptible sites are omitted)");
    }
}

Strain state_of(const Configuration& config, const SiteId& site)
{
    const auto it = config.find(site);
    return it == config.end() ? Strain::none : it->second;
}

void SimParams::validate() const
{
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(lambda1))
        throw std::invalid_argument("lambda1 must be finite and >= 0");
    if (!finite_nonneg(lambda2))
        throw std::invalid_argument("lambda2 must be finite and >= 0");
    if (!(delta1 > 0.0) || !std::isfinite(delta1))
        throw std::invalid_argument("delta1 must be finite and > 0");
    if (!(delta2 > 0.0) || !std::isfinite(delta2))
        throw std::invalid_argument("delta2 must be finite and > 0");
    if (!(t_max > 0.0) || !std::isfinite(t_max))
        throw std::invalid_argument("t_max must be finite and > 0");
    for (std::size_t i = 0; i < sample_times.size(); ++i)
    {
        if (!(sample_times[i] >= 0.0) || sample_times[i] > t_max)
            throw std::invalid_argument("sample times must lie within [0, t_max]");
        if (i > 0 && sample_times[i] < sample_times[i - 1])
            throw std::invalid_argument("sample times must be sorted");
    }
    if (watch_from && (!(*watch_from >= 0.0) || *watch_from > t_max))
        throw std::invalid_argument("watch_from must lie within [0, t_max]");
}

InfectedCounts infected_neighbor_counts(const Topology& topology, const Configuration& config, const SiteId& site)
{
    InfectedCounts counts;
    for (const auto& y : topology.neighbors(site))
    {
        const Strain s = state_of(config, y);
        if (s == Strain::one)
            ++counts.n1;
        else if (s == Strain::two)
            ++counts.n2;
    }
    return counts;
}

SiteRates site_rates(const Topology& topology, const Configuration& config, const SiteId& site,
                     const SimParams& params)
{
    switch (state_of(config, site))
    {
    case Strain::one:
        return SiteRates{params.delta1, 0.0, 0.0};
    case Strain::two:
        return SiteRates{params.delta2, 0.0, 0.0};
    case Strain::none:
        break;
    }
    const auto counts = infected_neighbor_counts(topology, config, site);
    return SiteRates{0.0, params.lambda1 * counts.n1, params.lambda2 * counts.n2};
}

std::string to_string(StopReason reason)
{
    switch (reason)
    {
    case StopReason::horizon:
        return "horizon";
    case StopReason::absorbed:
        return "absorbed";
    case StopReason::capped:
        return "capped";
    }
    return "unknown";
}

bool RateAudit::ok() const
{
    const double scale = std::max({1.0, std::abs(cached_total), std::abs(recomputed_total)});
    return counts_consistent && frontier_consistent && std::abs(cached_total - recomputed_total) <= 1e-9 * scale;
}

std::string RateAudit::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << "cached total rate " << cached_total << ", recomputed " << recomputed_total << "; frontier "
       << cached_frontier << " cached vs " << recomputed_frontier << " recomputed"
       << (counts_consistent ? "" : "; neighbor counts inconsistent")
       << (frontier_consistent ? "" : "; frontier sets differ");
    return os.str();
}

// ---------------------------------------------------------------------------

ContactProcess::ContactProcess(const Topology& topology, const SimParams& params, const Configuration& init,
                               std::uint64_t seed)
    : topology_(topology), params_(params), rng_(seed)
{
    params_.validate();
    validate_configuration(topology_, init);
    if (!topology_.is_tree() && topology_.site_count() <= kDenseLookupLimit)
        dense_lookup_.assign(static_cast<std::size_t>(topology_.site_count()), 0);
    for (const auto& [site, strain] : init)
        infect(intern(site), strain);
}

std::uint32_t ContactProcess::intern(const SiteId& site)
{
    if (auto found = find_slot(site))
        return *found;
    const auto slot = static_cast<std::uint32_t>(slots_.size());
    Slot s;
    s.site = site;
    s.boundary = topology_.on_boundary(site);
    slots_.push_back(s);
    if (!dense_lookup_.empty())
        dense_lookup_[static_cast<std::size_t>(site.offset)] = slot + 1;
    else
        sparse_lookup_.emplace(site, slot);
    return slot;
}

std::optional<std::uint32_t> ContactProcess::find_slot(const SiteId& site) const
{
    if (!dense_lookup_.empty())
    {
        if (site.depth != 0 || site.offset >= dense_lookup_.size())
            return std::nullopt;
        const auto v = dense_lookup_[static_cast<std::size_t>(site.offset)];
        if (v == 0)
            return std::nullopt;
        return v - 1;
    }
    const auto it = sparse_lookup_.find(site);
    if (it == sparse_lookup_.end())
        return std::nullopt;
    return it->second;
}

void ContactProcess::ensure_neighbors(std::uint32_t slot)
{
    if (slots_[slot].nbr_begin != kNoList)
        return;
    topology_.neighbors_into(slots_[slot].site, scratch_);
    const auto begin = static_cast<std::uint32_t>(nbr_slot_.size());
    // intern() may grow slots_, so resolve every neighbor before touching the slot again.
    for (const auto& y : scratch_)
    {
        const auto ys = intern(y);
        nbr_slot_.push_back(ys);
        edge_pos_.push_back(kNoList);
    }
    slots_[slot].nbr_begin = begin;
    slots_[slot].nbr_count = static_cast<std::uint32_t>(scratch_.size());
}

std::uint32_t ContactProcess::neighbor_index(std::uint32_t of, std::uint32_t target) const
{
    const Slot& s = slots_[of];
    for (std::uint32_t k = 0; k < s.nbr_count; ++k)
        if (nbr_slot_[s.nbr_begin + k] == target)
            return k;
    throw EngineError("neighbor relation is not symmetric at site " + topology_.site_name(s.site));
}

void ContactProcess::add_edge(std::uint32_t src, std::uint32_t k)
{
    auto& list = edges_[strain_index(slots_[src].state)];
    edge_pos_[slots_[src].nbr_begin + k] = static_cast<std::uint32_t>(list.size());
    list.push_back(Edge{src, k});
}

void ContactProcess::remove_edge(std::uint32_t src, std::uint32_t k)
{
    auto& list = edges_[strain_index(slots_[src].state)];
    const auto idx = slots_[src].nbr_begin + k;
    const auto pos = edge_pos_[idx];
    const Edge moved = list.back();
    list[pos] = moved;
    edge_pos_[slots_[moved.src].nbr_begin + moved.k] = pos;
    list.pop_back();
    edge_pos_[idx] = kNoList;
}

void ContactProcess::infect(std::uint32_t slot, Strain s)
{
    ensure_neighbors(slot);
    if (slots_[slot].state != Strain::none)
        throw EngineError("infection of an already infected site " + topology_.site_name(slots_[slot].site));
    const int si = strain_index(s);
    {
        Slot& x = slots_[slot];
        x.state = s;
        x.list_pos = static_cast<std::uint32_t>(infected_[si].size());
        infected_[si].push_back(slot);
        if (x.boundary)
            boundary_contact_ = true;
    }
    const Slot& x = slots_[slot];
    for (std::uint32_t k = 0; k < x.nbr_count; ++k)
    {
        const auto y = nbr_slot_[x.nbr_begin + k];
        Slot& ys = slots_[y];
        ++ys.n[si];
        if (ys.state == Strain::none)
            add_edge(slot, k);
        else
            remove_edge(y, neighbor_index(y, slot));
    }
}

void ContactProcess::recover(std::uint32_t slot)
{
    const Strain s = slots_[slot].state;
    const int si = strain_index(s);
    const Slot& x = slots_[slot];
    for (std::uint32_t k = 0; k < x.nbr_count; ++k)
    {
        const auto y = nbr_slot_[x.nbr_begin + k];
        if (edge_pos_[x.nbr_begin + k] != kNoList)
            remove_edge(slot, k);
        Slot& ys = slots_[y];
        --ys.n[si];
        if (ys.state != Strain::none)
            add_edge(y, neighbor_index(y, slot));
    }

    auto& list = infected_[si];
    const auto pos = slots_[slot].list_pos;
    const auto moved = list.back();
    list[pos] = moved;
    slots_[moved].list_pos = pos;
    list.pop_back();
    slots_[slot].state = Strain::none;
}

double ContactProcess::total_rate() const noexcept
{
    return params_.delta1 * static_cast<double>(infected_[0].size()) +
           params_.delta2 * static_cast<double>(infected_[1].size()) +
           params_.lambda1 * static_cast<double>(edges_[0].size()) +
           params_.lambda2 * static_cast<double>(edges_[1].size());
}

std::uint64_t ContactProcess::count(Strain s) const noexcept
{
    if (s == Strain::none)
        return 0;
    return infected_[strain_index(s)].size();
}

Strain ContactProcess::state(const SiteId& site) const
{
    if (!topology_.contains(site))
        throw TopologyError("site does not belong to " + topology_.describe());
    const auto slot = find_slot(site);
    return slot ? slots_[*slot].state : Strain::none;
}

Configuration ContactProcess::configuration() const
{
    Configuration config;
    for (const auto& list : infected_)
        for (const auto slot : list)
            config.emplace(slots_[slot].site, slots_[slot].state);
    return config;
}

std::vector<SiteId> ContactProcess::frontier() const
{
    std::set<SiteId> active;
    for (const auto& list : infected_)
        for (const auto slot : list)
            active.insert(slots_[slot].site);
    for (const auto& list : edges_)
        for (const auto& e : list)
            active.insert(slots_[nbr_slot_[slots_[e.src].nbr_begin + e.k]].site);
    return {active.begin(), active.end()};
}

double ContactProcess::next_event_time()
{
    if (!pending_)
    {
        const double rate = total_rate();
        pending_ = rate > 0.0 ? time_ + rng_.exponential(rate) : std::numeric_limits<double>::infinity();
    }
    return *pending_;
}

SiteId ContactProcess::apply_next_event()
{
    const double t = next_event_time();
    if (!std::isfinite(t))
        throw EngineError("no event to apply: the configuration is absorbed");
    pending_.reset();
    time_ = t;
    ++events_;

    const double r0 = params_.delta1 * static_cast<double>(infected_[0].size());
    const double r1 = r0 + params_.delta2 * static_cast<double>(infected_[1].size());
    const double r2 = r1 + params_.lambda1 * static_cast<double>(edges_[0].size());
    const double total = r2 + params_.lambda2 * static_cast<double>(edges_[1].size());
    const double u = rng_.uniform() * total;

    // An empty pool has zero width, so u never selects it; the guards only
    // absorb the u == boundary rounding case.
    if (u < r0 && !infected_[0].empty())
    {
        const auto slot = infected_[0][rng_.below(infected_[0].size())];
        recover(slot);
        return slots_[slot].site;
    }
    if (u < r1 && !infected_[1].empty())
    {
        const auto slot = infected_[1][rng_.below(infected_[1].size())];
        recover(slot);
        return slots_[slot].site;
    }
    int si = (u < r2 && !edges_[0].empty()) ? 0 : 1;
    if (edges_[si].empty())
        si = 1 - si;
    if (edges_[si].empty())
        throw EngineError("event pools are empty while the total rate is positive");
    const Edge e = edges_[si][rng_.below(edges_[si].size())];
    const auto target = nbr_slot_[slots_[e.src].nbr_begin + e.k];
    infect(target, si == 0 ? Strain::one : Strain::two);
    return slots_[target].site;
}

RateAudit ContactProcess::audit() const
{
    RateAudit a;
    a.cached_total = total_rate();
    const auto config = configuration();

    // Every site with nonzero rate is infected or adjacent to an infected site.
    std::set<SiteId> candidates;
    for (const auto& [site, strain] : config)
    {
        candidates.insert(site);
        for (const auto& y : topology_.neighbors(site))
            candidates.insert(y);
    }
    std::set<SiteId> recomputed_frontier;
    double total = 0.0;
    for (const auto& site : candidates)
    {
        const auto r = site_rates(topology_, config, site, params_);
        total += r.total();
        if (r.total() > 0.0)
            recomputed_frontier.insert(site);
        if (auto slot = find_slot(site))
        {
            const auto counts = infected_neighbor_counts(topology_, config, site);
            if (slots_[*slot].n[0] != counts.n1 || slots_[*slot].n[1] != counts.n2)
                a.counts_consistent = false;
        }
        else
        {
            // Infected sites and their neighbors are always interned.
            a.counts_consistent = false;
        }
    }
    a.recomputed_total = total;
    const auto cached = frontier();
    a.cached_frontier = cached.size();
    a.recomputed_frontier = recomputed_frontier.size();
    a.frontier_consistent = std::equal(cached.begin(), cached.end(), recomputed_frontier.begin(),
                                       recomputed_frontier.end());
    return a;
}

// ---------------------------------------------------------------------------

SimResult run(const Topology& topology, const Configuration& init, const SimParams& params, std::uint64_t seed)
{
    ContactProcess engine(topology, params, init, seed);

    SimResult result;
    result.seed = seed;
    result.watch_hits.assign(params.observe.size(), false);
    for (const auto& site : params.observe)
        if (!topology.contains(site))
            throw TopologyError("observation site outside " + topology.describe());

    auto snapshot = [&](double t) {
        SampleSummary s;
        s.time = t;
        s.count1 = engine.count(Strain::one);
        s.count2 = engine.count(Strain::two);
        s.boundary_contact = engine.boundary_contact();
        s.observed.reserve(params.observe.size());
        for (const auto& site : params.observe)
            s.observed.push_back(engine.state(site));
        result.samples.push_back(std::move(s));
    };

    bool window_open = false;
    auto open_window = [&] {
        window_open = true;
        for (std::size_t i = 0; i < params.observe.size(); ++i)
            if (engine.state(params.observe[i]) != Strain::none)
                result.watch_hits[i] = true;
    };

    std::size_t next_sample = 0;
    result.peak_infected = engine.infected();
    result.stop = StopReason::horizon;
    auto over_cap = [&] {
        if (params.max_infected == 0 || engine.infected() == 0)
            return false;
        const auto c1 = engine.count(Strain::one);
        const auto c2 = engine.count(Strain::two);
        return (c1 == 0 || c1 > params.max_infected) && (c2 == 0 || c2 > params.max_infected);
    };
    if (over_cap())
        result.stop = StopReason::capped;

    while (result.stop != StopReason::capped)
    {
        const double t_next = engine.next_event_time();
        const double until = std::min(t_next, params.t_max);
        while (next_sample < params.sample_times.size() && params.sample_times[next_sample] < t_next &&
               params.sample_times[next_sample] <= params.t_max)
            snapshot(params.sample_times[next_sample++]);
        if (params.watch_from && !window_open && *params.watch_from <= until)
            open_window();
        if (t_next > params.t_max)
        {
            result.stop = engine.infected() == 0 ? StopReason::absorbed : StopReason::horizon;
            break;
        }
        const SiteId changed = engine.apply_next_event();
        const auto infected = engine.infected();
        result.peak_infected = std::max(result.peak_infected, infected);
        if (window_open)
        {
            for (std::size_t i = 0; i < params.observe.size(); ++i)
                if (params.observe[i] == changed && engine.state(changed) != Strain::none)
                    result.watch_hits[i] = true;
        }
        if (over_cap())
            result.stop = StopReason::capped;
    }

    result.final_config = engine.configuration();
    result.final_count1 = engine.count(Strain::one);
    result.final_count2 = engine.count(Strain::two);
    result.events = engine.events();
    result.boundary_contact = engine.boundary_contact();
    result.elapsed = result.stop == StopReason::capped
                         ? engine.time()
                         : (result.stop == StopReason::absorbed ? engine.time() : params.t_max);
    return result;
}

// ---------------------------------------------------------------------------

Configuration init_single(const Topology& topology, Strain strain, const SiteId& at)
{
    if (strain != Strain::one && strain != Strain::two)
        throw std::invalid_argument("initial strain must be 1 or 2");
    if (!topology.contains(at))
        throw TopologyError("initial site outside " + topology.describe());
    return Configuration{{at, strain}};
}

Configuration init_product(const Topology& topology, double p1, double p2, std::uint64_t seed)
{
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || p1 + p2 > 1.0 + 1e-12)
        throw std::invalid_argument("product initial densities need p1, p2 >= 0 and p1 + p2 <= 1");
    Rng rng(seed);
    Configuration config;
    for (const auto& site : topology.enumerate_sites())
    {
        const double u = rng.uniform();
        if (u < p1)
            config.emplace_hint(config.end(), site, Strain::one);
        else if (u < p1 + p2)
            config.emplace_hint(config.end(), site, Strain::two);
    }
    return config;
}

Configuration init_split(const Topology& topology)
{
    if (!topology.is_tree())
        throw std::invalid_argument("split initial configuration needs a tree topology");
    return Configuration{{topology.site_from_path({0}), Strain::one}, {topology.site_from_path({1}), Strain::two}};
}

Configuration init_pair(const Topology& topology, const SiteId& site1, const SiteId& site2)
{
    if (site1 == site2)
        throw std::invalid_argument("pair initial configuration needs two distinct sites");
    auto config = init_single(topology, Strain::one, site1);
    config.emplace(init_single(topology, Strain::two, site2).begin()->first, Strain::two);
    return config;
}

InitSpec InitSpec::fixed(Configuration config)
{
    InitSpec s;
    s.kind = Kind::fixed;
    s.config = std::move(config);
    return s;
}

InitSpec InitSpec::single(Strain strain, std::optional<SiteId> at)
{
    InitSpec s;
    s.kind = Kind::single;
    s.strain = strain;
    s.at = at;
    return s;
}

InitSpec InitSpec::product(double p1, double p2)
{
    InitSpec s;
    s.kind = Kind::product;
    s.p1 = p1;
    s.p2 = p2;
    return s;
}

InitSpec InitSpec::split()
{
    InitSpec s;
    s.kind = Kind::split;
    return s;
}

InitSpec InitSpec::pair(std::optional<SiteId> site1, std::optional<SiteId> site2)
{
    InitSpec s;
    s.kind = Kind::pair;
    s.site1 = site1;
    s.site2 = site2;
    return s;
}

Configuration InitSpec::realize(const Topology& topology, std::uint64_t replicate_seed) const
{
    switch (kind)
    {
    case Kind::fixed:
        validate_configuration(topology, config);
        return config;
    case Kind::single:
        return init_single(topology, strain, at.value_or(topology.origin()));
    case Kind::product:
        return init_product(topology, p1, p2, derive_seed(replicate_seed, 0x1417));
    case Kind::split:
        return init_split(topology);
    case Kind::pair: {
        // Default pair: the two neighbors of the origin along the first axis
        // (torus), or the root's first two children (tree). Either way the
        // seeds sit at distance 2 from each other.
        if (site1 && site2)
            return init_pair(topology, *site1, *site2);
        const auto nbrs = topology.neighbors(topology.origin());
        const std::size_t first = topology.is_tree() ? 1 : 0;
        if (nbrs.size() < first + 2)
            throw std::invalid_argument("default pair placement needs two neighbors of the origin on " +
                                        topology.describe() + "; give both sites explicitly");
        return init_pair(topology, site1.value_or(nbrs[first]), site2.value_or(nbrs[first + 1]));
    }
    }
    throw std::logic_error("unknown init kind");
}

bool InitSpec::may_contain(Strain s) const
{
    switch (kind)
    {
    case Kind::fixed:
        return std::any_of(config.begin(), config.end(), [s](const auto& kv) { return kv.second == s; });
    case Kind::single:
        return strain == s;
    case Kind::product:
        return (s == Strain::one ? p1 : p2) > 0.0;
    case Kind::split:
    case Kind::pair:
        return s != Strain::none;
    }
    return false;
}

std::string InitSpec::describe() const
{
    std::ostringstream os;
    switch (kind)
    {
    case Kind::fixed:
        os << "fixed(" << config.size() << " sites)";
        break;
    case Kind::single:
        os << "single(strain " << as_int(strain) << ")";
        break;
    case Kind::product:
        os << "product(p1=" << p1 << ", p2=" << p2 << ")";
        break;
    case Kind::split:
        os << "split";
        break;
    case Kind::pair:
        os << "pair";
        break;
    }
    return os.str();
}

Configuration swap_strains(const Configuration& config)
{
    Configuration out;
    for (const auto& [site, s] : config)
        out.emplace_hint(out.end(), site, s == Strain::one ? Strain::two : Strain::one);
    return out;
}

SimParams swap_strains(const SimParams& params)
{
    SimParams out = params;
    std::swap(out.lambda1, out.lambda2);
    std::swap(out.delta1, out.delta2);
    return out;
}

}  // namespace strainwars
