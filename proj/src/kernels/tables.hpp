#pragma once

#include "todo/kernels.hpp"

namespace todo::detail {

#if defined(TODO_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(TODO_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif

} // namespace todo::detail
