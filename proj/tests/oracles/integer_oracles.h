// Copyright 2026 The clocklat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Brute-force integer references used only by tests. They share no code with
// the library's reduction routines.

#ifndef CLOCKLAT_TESTS_INTEGER_ORACLES_H
#define CLOCKLAT_TESTS_INTEGER_ORACLES_H

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace clocklat::oracle {

using boost::multiprecision::cpp_int;
using Matrix = std::vector<std::vector<int64_t>>;

/// Laplace expansion along the first row.
inline cpp_int laplace_det(const std::vector<std::vector<cpp_int>> &m) {
    size_t n = m.size();
    if (n == 0) {
        return 1;
    }
    if (n == 1) {
        return m[0][0];
    }
    cpp_int total = 0;
    for (size_t j = 0; j < n; j++) {
        if (m[0][j] == 0) {
            continue;
        }
        std::vector<std::vector<cpp_int>> minor;
        for (size_t i = 1; i < n; i++) {
            std::vector<cpp_int> row;
            for (size_t k = 0; k < n; k++) {
                if (k != j) {
                    row.push_back(m[i][k]);
                }
            }
            minor.push_back(row);
        }
        cpp_int term = m[0][j] * laplace_det(minor);
        total += (j % 2 == 0) ? term : cpp_int(-term);
    }
    return total;
}

inline cpp_int laplace_det(const Matrix &m) {
    std::vector<std::vector<cpp_int>> big(m.size());
    for (size_t i = 0; i < m.size(); i++) {
        big[i].assign(m[i].begin(), m[i].end());
    }
    return laplace_det(big);
}

/// gcd of all order x order minors of K, by visiting every row and column subset.
inline cpp_int gcd_of_minors(const Matrix &K, size_t order) {
    size_t rows = K.size();
    size_t cols = rows ? K[0].size() : 0;
    cpp_int g = 0;
    std::vector<size_t> rsel, csel;
    std::function<void(size_t)> pick_cols;
    std::function<void(size_t)> pick_rows = [&](size_t start) {
        if (rsel.size() == order) {
            pick_cols(0);
            return;
        }
        for (size_t i = start; i < rows; i++) {
            rsel.push_back(i);
            pick_rows(i + 1);
            rsel.pop_back();
        }
    };
    pick_cols = [&](size_t start) {
        if (csel.size() == order) {
            std::vector<std::vector<cpp_int>> sub(order, std::vector<cpp_int>(order));
            for (size_t a = 0; a < order; a++) {
                for (size_t b = 0; b < order; b++) {
                    sub[a][b] = K[rsel[a]][csel[b]];
                }
            }
            cpp_int d = laplace_det(sub);
            if (d < 0) {
                d = -d;
            }
            g = boost::multiprecision::gcd(g, d);
            return;
        }
        for (size_t j = start; j < cols; j++) {
            csel.push_back(j);
            pick_cols(j + 1);
            csel.pop_back();
        }
    };
    pick_rows(0);
    return g;
}

/// Binomial coefficient by Pascal's triangle.
inline cpp_int pascal_binomial(unsigned n, unsigned k) {
    std::vector<cpp_int> row(n + 1, 0);
    row[0] = 1;
    for (unsigned i = 1; i <= n; i++) {
        for (unsigned j = i; j > 0; j--) {
            row[j] += row[j - 1];
        }
    }
    return k <= n ? row[k] : cpp_int(0);
}

/// Every nonnegative integer vector of length c with sum <= n, by nested recursion.
inline std::vector<std::vector<int64_t>> brute_partitions(int64_t n, size_t c) {
    std::vector<std::vector<int64_t>> out;
    std::vector<int64_t> cur;
    std::function<void(int64_t)> rec = [&](int64_t left) {
        if (cur.size() == c) {
            out.push_back(cur);
            return;
        }
        for (int64_t v = 0; v <= left; v++) {
            cur.push_back(v);
            rec(left - v);
            cur.pop_back();
        }
    };
    rec(n);
    return out;
}

}  // namespace clocklat::oracle

#endif
