#include <cstdlib>
#include <string>

#include "svy/kernels.hpp"

namespace svy::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, &scalar::dot, &scalar::sum, &scalar::squared_distance,
                              &scalar::axpy};

#if defined(SVY_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &avx2::dot, &avx2::sum, &avx2::squared_distance,
                            &avx2::axpy};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(SVY_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, &neon::dot, &neon::sum, &neon::squared_distance,
                            &neon::axpy};
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("SVY_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return kScalar;
  }
#if defined(SVY_HAVE_AVX2)
  if (cpu_has_avx2()) return kAvx2;
#endif
#if defined(SVY_HAVE_NEON)
  return kNeon;
#endif
  return kScalar;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
    case Isa::Avx2:
#if defined(SVY_HAVE_AVX2)
      if (cpu_has_avx2()) return &kAvx2;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(SVY_HAVE_NEON)
      return &kNeon;
#endif
      return nullptr;
  }
  return nullptr;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace svy::kernels
