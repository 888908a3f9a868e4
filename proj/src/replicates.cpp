#include "strainwars/replicates.hpp"

namespace strainwars {

unsigned resolve_parallelism(unsigned requested) noexcept
{
    if (requested > 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace strainwars
