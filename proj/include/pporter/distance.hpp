#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <string_view>
#include <vector>

namespace pporter {

// Levenshtein distance (unit insert/delete/substitute) over any two
// random-access ranges with equality-comparable elements. Two-row DP.
template <class RangeA, class RangeB>
std::size_t levenshtein(const RangeA& a, const RangeB& b)
{
    const std::size_t n = std::size(a);
    const std::size_t m = std::size(b);
    if (n == 0)
        return m;
    if (m == 0)
        return n;
    auto ab = std::begin(a);
    auto bb = std::begin(b);
    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        const auto& ai = ab[static_cast<std::ptrdiff_t>(i - 1)];
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t substitute = prev[j - 1] + (ai == bb[static_cast<std::ptrdiff_t>(j - 1)] ? 0 : 1);
            cur[j] = std::min({ prev[j] + 1, cur[j - 1] + 1, substitute });
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// Byte-string Levenshtein distance using the blocked bit-vector algorithm
// (Myers/Hyyro). Same result as `levenshtein`, roughly 64x fewer steps.
inline std::size_t levenshtein_bytes(std::string_view a, std::string_view b)
{
    if (a.size() > b.size())
        std::swap(a, b);
    const std::size_t m = a.size();
    if (m == 0)
        return b.size();
    const std::size_t blocks = (m + 63) / 64;
    std::vector<std::uint64_t> peq(blocks * 256, 0);
    for (std::size_t i = 0; i < m; ++i)
        peq[(i / 64) * 256 + static_cast<unsigned char>(a[i])] |= std::uint64_t { 1 } << (i % 64);

    std::vector<std::uint64_t> pv(blocks, ~std::uint64_t { 0 });
    std::vector<std::uint64_t> mv(blocks, 0);
    const std::uint64_t last_high = std::uint64_t { 1 } << ((m - 1) % 64);
    const std::uint64_t high = std::uint64_t { 1 } << 63;
    std::size_t score = m;

    for (char ch : b) {
        const unsigned char c = static_cast<unsigned char>(ch);
        int carry = 1;
        for (std::size_t k = 0; k < blocks; ++k) {
            std::uint64_t eq = peq[k * 256 + c];
            const std::uint64_t xv = eq | mv[k];
            if (carry < 0)
                eq |= 1;
            const std::uint64_t xh = (((eq & pv[k]) + pv[k]) ^ pv[k]) | eq;
            std::uint64_t ph = mv[k] | ~(xh | pv[k]);
            std::uint64_t mh = pv[k] & xh;
            const std::uint64_t top = k + 1 == blocks ? last_high : high;
            int out = 0;
            if (ph & top)
                out = 1;
            else if (mh & top)
                out = -1;
            ph <<= 1;
            mh <<= 1;
            if (carry < 0)
                mh |= 1;
            else if (carry > 0)
                ph |= 1;
            pv[k] = mh | ~(xv | ph);
            mv[k] = ph & xv;
            carry = out;
        }
        score = static_cast<std::size_t>(static_cast<long long>(score) + carry);
    }
    return score;
}

} // namespace pporter
