#include <string>

#include "tables.hpp"
#include "todo/error.hpp"

namespace todo {

namespace {

bool cpu_has(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(TODO_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::neon:
#if defined(TODO_HAVE_NEON)
        return true;
#else
        return false;
#endif
    case Isa::automatic:
        return true;
    }
    return false;
}

} // namespace

std::string_view to_string(Isa isa) noexcept
{
    switch (isa) {
    case Isa::automatic: return "auto";
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name)
{
    for (Isa isa : {Isa::automatic, Isa::scalar, Isa::avx2, Isa::neon})
        if (to_string(isa) == name)
            return isa;
    throw RangeError("unknown kernel ISA '" + std::string(name) + "'");
}

std::vector<Isa> available_isas()
{
    std::vector<Isa> out{Isa::scalar};
    for (Isa isa : {Isa::avx2, Isa::neon})
        if (cpu_has(isa))
            out.push_back(isa);
    return out;
}

const KernelTable& kernels_for(Isa isa)
{
    if (isa == Isa::automatic)
        isa = available_isas().back();
    if (!cpu_has(isa))
        throw RangeError("kernel ISA '" + std::string(to_string(isa)) + "' is not available");
    switch (isa) {
#if defined(TODO_HAVE_AVX2)
    case Isa::avx2:
        return detail::avx2_kernels();
#endif
#if defined(TODO_HAVE_NEON)
    case Isa::neon:
        return detail::neon_kernels();
#endif
    default:
        return scalar_kernels();
    }
}

} // namespace todo
