#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace dgd::detail {

/// Union of two CCW vertex cycles glued along a shared chain. `i1` indexes an
/// edge r1[i1] -> r1[i1+1] that appears reversed in r2. The chain is extended
/// in both directions over further reversed edges, and its interior vertices
/// are dropped. Returns nullopt when the edge is not shared.
template <class T, class Eq>
std::optional<std::vector<T>> splice_cycles(const std::vector<T>& r1, const std::vector<T>& r2,
                                            std::size_t i1, Eq eq) {
  const std::size_t n1 = r1.size();
  const std::size_t n2 = r2.size();
  if (n1 < 3 || n2 < 3) return std::nullopt;
  auto at1 = [&](long k) -> const T& { return r1[((k % long(n1)) + long(n1)) % long(n1)]; };
  auto at2 = [&](long k) -> const T& { return r2[((k % long(n2)) + long(n2)) % long(n2)]; };

  const T& p = at1(long(i1));
  const T& q = at1(long(i1) + 1);
  long j = -1;
  for (std::size_t k = 0; k < n2; ++k) {
    if (eq(r2[k], q) && eq(at2(long(k) + 1), p)) {
      j = long(k);
      break;
    }
  }
  if (j < 0) return std::nullopt;

  // chain in r1 runs s .. e (indices, e > s); in r2 it runs j_e .. j_s
  long s = long(i1);
  long e = long(i1) + 1;
  long len = 1;
  const long max_len = long(std::min(n1, n2)) - 2;
  while (len < max_len && eq(at1(e + 1), at2(j - (e - long(i1))))) {
    ++e;
    ++len;
  }
  while (len < max_len && eq(at1(s - 1), at2(j + 1 + (long(i1) - s) + 1))) {
    --s;
    ++len;
  }
  const long j_s = j + 1 + (long(i1) - s);
  const long j_e = j - (e - long(i1) - 1);

  std::vector<T> out;
  out.reserve(n1 + n2 - 2 * std::size_t(len));
  for (long k = e; k <= s + long(n1); ++k) out.push_back(at1(k));
  for (long k = j_s + 1; k <= j_e - 1 + long(n2); ++k) out.push_back(at2(k));
  return out;
}

}  // namespace dgd::detail
