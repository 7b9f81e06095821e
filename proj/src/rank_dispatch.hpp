#pragma once

#include <array>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace autoten::detail {

template <std::size_t N>
using RankTag = std::integral_constant<std::size_t, N>;

/// Calls fn(RankTag<f>{}) for ranks up to 16 so inner loops over components
/// have a compile-time trip count; larger ranks get RankTag<0> and must read
/// the runtime rank.
template <class Fn>
decltype(auto) dispatch_rank(std::size_t f, Fn&& fn) {
  switch (f) {
    case 1: return fn(RankTag<1>{});
    case 2: return fn(RankTag<2>{});
    case 3: return fn(RankTag<3>{});
    case 4: return fn(RankTag<4>{});
    case 5: return fn(RankTag<5>{});
    case 6: return fn(RankTag<6>{});
    case 7: return fn(RankTag<7>{});
    case 8: return fn(RankTag<8>{});
    case 9: return fn(RankTag<9>{});
    case 10: return fn(RankTag<10>{});
    case 11: return fn(RankTag<11>{});
    case 12: return fn(RankTag<12>{});
    case 13: return fn(RankTag<13>{});
    case 14: return fn(RankTag<14>{});
    case 15: return fn(RankTag<15>{});
    case 16: return fn(RankTag<16>{});
    default: return fn(RankTag<0>{});
  }
}

/// Scratch row of length f: a stack array when the rank is static, so the
/// optimizer can keep it in registers.
template <std::size_t Static>
using RankBuffer = std::conditional_t<Static == 0, std::vector<double>, std::array<double, Static>>;

template <std::size_t Static>
RankBuffer<Static> make_rank_buffer(std::size_t f) {
  if constexpr (Static == 0) {
    return std::vector<double>(f, 0.0);
  } else {
    return RankBuffer<Static>{};
  }
}

template <std::size_t Static>
constexpr std::size_t rank_or(std::size_t runtime) {
  if constexpr (Static == 0) {
    return runtime;
  } else {
    return Static;
  }
}

}  // namespace autoten::detail
