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

#include <boost/multiprecision/cpp_int.hpp>
#include <limits>
#include <sstream>
#include <utility>

#include "clocklat/intlat.h"

namespace clocklat::intlat {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;
using BigMatrix = std::vector<std::vector<cpp_int>>;

size_t column_count(const IntMatrix &K) {
    return K.empty() ? 0 : K[0].size();
}

void check_rectangular(const IntMatrix &K) {
    for (const auto &row : K) {
        if (row.size() != column_count(K)) {
            throw InvalidArgument("integer matrix rows have unequal lengths");
        }
    }
}

int64_t narrow(const cpp_int &v) {
    if (v > std::numeric_limits<int64_t>::max() || v < std::numeric_limits<int64_t>::min()) {
        throw Error("integer value exceeds 64 bits: " + v.str());
    }
    return static_cast<int64_t>(v);
}

BigMatrix widen(const IntMatrix &K) {
    BigMatrix out(K.size());
    for (size_t i = 0; i < K.size(); i++) {
        out[i].assign(K[i].begin(), K[i].end());
    }
    return out;
}

BigMatrix identity(size_t n) {
    BigMatrix out(n, std::vector<cpp_int>(n, 0));
    for (size_t i = 0; i < n; i++) {
        out[i][i] = 1;
    }
    return out;
}

IntMatrix narrow(const BigMatrix &M) {
    IntMatrix out(M.size());
    for (size_t i = 0; i < M.size(); i++) {
        for (const auto &v : M[i]) {
            out[i].push_back(narrow(v));
        }
    }
    return out;
}

size_t rank_of_rows(const std::vector<std::vector<cpp_rational>> &rows_in) {
    auto rows = rows_in;
    size_t rank = 0;
    size_t cols = rows.empty() ? 0 : rows[0].size();
    for (size_t c = 0; c < cols && rank < rows.size(); c++) {
        size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][c] == 0) {
            pivot++;
        }
        if (pivot == rows.size()) {
            continue;
        }
        std::swap(rows[rank], rows[pivot]);
        for (size_t i = rank + 1; i < rows.size(); i++) {
            if (rows[i][c] == 0) {
                continue;
            }
            cpp_rational f = rows[i][c] / rows[rank][c];
            for (size_t j = c; j < cols; j++) {
                rows[i][j] -= f * rows[rank][j];
            }
        }
        rank++;
    }
    return rank;
}

std::vector<std::vector<cpp_rational>> to_rational(const IntMatrix &K) {
    std::vector<std::vector<cpp_rational>> out(K.size());
    for (size_t i = 0; i < K.size(); i++) {
        for (auto v : K[i]) {
            out[i].emplace_back(v);
        }
    }
    return out;
}

// Tracks K = T * M * S while M is reduced towards diagonal form. Each
// elementary operation on M is mirrored by its inverse on T or S.
struct Reducer {
    BigMatrix M, T, S;
    size_t rows, cols;

    void add_row(size_t dst, size_t src, const cpp_int &c) {
        for (size_t j = 0; j < cols; j++) {
            M[dst][j] += c * M[src][j];
        }
        for (size_t i = 0; i < rows; i++) {
            T[i][src] -= c * T[i][dst];
        }
    }
    void add_col(size_t dst, size_t src, const cpp_int &c) {
        for (size_t i = 0; i < rows; i++) {
            M[i][dst] += c * M[i][src];
        }
        for (size_t j = 0; j < cols; j++) {
            S[src][j] -= c * S[dst][j];
        }
    }
    void swap_rows(size_t a, size_t b) {
        std::swap(M[a], M[b]);
        for (size_t i = 0; i < rows; i++) {
            std::swap(T[i][a], T[i][b]);
        }
    }
    void swap_cols(size_t a, size_t b) {
        for (size_t i = 0; i < rows; i++) {
            std::swap(M[i][a], M[i][b]);
        }
        std::swap(S[a], S[b]);
    }
    void negate_row(size_t a) {
        for (auto &v : M[a]) {
            v = -v;
        }
        for (size_t i = 0; i < rows; i++) {
            T[i][a] = -T[i][a];
        }
    }

    // Moves the smallest nonzero entry of the trailing block to (t, t).
    void bring_min_pivot(size_t t) {
        size_t bi = t, bj = t;
        cpp_int best = -1;
        for (size_t i = t; i < rows; i++) {
            for (size_t j = t; j < cols; j++) {
                if (M[i][j] == 0) {
                    continue;
                }
                cpp_int a = abs(M[i][j]);
                if (best < 0 || a < best) {
                    best = a;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best < 0) {
            throw RankDeficient("matrix has rank below its row count");
        }
        if (bi != t) {
            swap_rows(bi, t);
        }
        if (bj != t) {
            swap_cols(bj, t);
        }
    }

    void reduce_position(size_t t) {
        while (true) {
            bring_min_pivot(t);
            bool clean = true;
            for (size_t i = t + 1; i < rows; i++) {
                if (M[i][t] != 0) {
                    cpp_int q = M[i][t] / M[t][t];
                    add_row(i, t, -q);
                    clean = clean && M[i][t] == 0;
                }
            }
            for (size_t j = t + 1; j < cols; j++) {
                if (M[t][j] != 0) {
                    cpp_int q = M[t][j] / M[t][t];
                    add_col(j, t, -q);
                    clean = clean && M[t][j] == 0;
                }
            }
            if (!clean) {
                continue;
            }
            bool divides = true;
            for (size_t i = t + 1; i < rows && divides; i++) {
                for (size_t j = t + 1; j < cols; j++) {
                    if (M[i][j] % M[t][t] != 0) {
                        add_row(t, i, 1);
                        divides = false;
                        break;
                    }
                }
            }
            if (divides) {
                break;
            }
        }
        if (M[t][t] < 0) {
            negate_row(t);
        }
    }
};

}  // namespace

size_t rational_rank(const IntMatrix &K) {
    check_rectangular(K);
    return rank_of_rows(to_rational(K));
}

int64_t determinant(const IntMatrix &M) {
    check_rectangular(M);
    size_t n = M.size();
    if (n == 0) {
        return 1;
    }
    if (column_count(M) != n) {
        throw InvalidArgument("determinant of a non-square matrix");
    }
    auto a = to_rational(M);
    cpp_rational det = 1;
    for (size_t c = 0; c < n; c++) {
        size_t p = c;
        while (p < n && a[p][c] == 0) {
            p++;
        }
        if (p == n) {
            return 0;
        }
        if (p != c) {
            std::swap(a[p], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (size_t i = c + 1; i < n; i++) {
            cpp_rational f = a[i][c] / a[c][c];
            for (size_t j = c; j < n; j++) {
                a[i][j] -= f * a[c][j];
            }
        }
    }
    return narrow(numerator(det));
}

IntMatrix multiply(const IntMatrix &a, const IntMatrix &b) {
    check_rectangular(a);
    check_rectangular(b);
    size_t inner = column_count(a);
    if (inner != b.size()) {
        throw InvalidArgument("matrix product shape mismatch");
    }
    size_t cols = column_count(b);
    IntMatrix out(a.size(), std::vector<int64_t>(cols, 0));
    for (size_t i = 0; i < a.size(); i++) {
        for (size_t j = 0; j < cols; j++) {
            cpp_int acc = 0;
            for (size_t k = 0; k < inner; k++) {
                acc += cpp_int(a[i][k]) * b[k][j];
            }
            out[i][j] = narrow(acc);
        }
    }
    return out;
}

SmithForm smith_form(const IntMatrix &K) {
    check_rectangular(K);
    size_t rows = K.size();
    size_t cols = column_count(K);
    if (rows > cols) {
        std::ostringstream msg;
        msg << "K has " << rows << " rows but only " << cols << " columns, so its rows are dependent";
        throw RankDeficient(msg.str());
    }
    auto rational = to_rational(K);
    for (size_t i = 0; i < rows; i++) {
        std::vector<std::vector<cpp_rational>> prefix(rational.begin(), rational.begin() + i + 1);
        if (rank_of_rows(prefix) <= i) {
            std::ostringstream msg;
            msg << "K is rank deficient: row " << i << " is a rational combination of rows {";
            for (size_t j = 0; j < i; j++) {
                msg << (j ? "," : "") << j;
            }
            msg << "}";
            throw RankDeficient(msg.str());
        }
    }

    Reducer red{widen(K), identity(rows), identity(cols), rows, cols};
    for (size_t t = 0; t < rows; t++) {
        red.reduce_position(t);
    }

    // Fix the sign freedom: column l of T and row l of S flip together.
    for (size_t l = 0; l < rows; l++) {
        size_t i = 0;
        while (i < rows && red.T[i][l] == 0) {
            i++;
        }
        if (i < rows && red.T[i][l] < 0) {
            for (size_t k = 0; k < rows; k++) {
                red.T[k][l] = -red.T[k][l];
            }
            for (size_t j = 0; j < cols; j++) {
                red.S[l][j] = -red.S[l][j];
            }
        }
    }

    SmithForm out;
    out.T = narrow(red.T);
    out.S = narrow(red.S);
    out.cols = cols;
    for (size_t l = 0; l < rows; l++) {
        out.A.push_back(narrow(red.M[l][l]));
    }
    return out;
}

int64_t unit_cell_volume(const IntMatrix &K) {
    return smith_form(K).unit_cell_volume();
}

IntMatrix SmithForm::A_matrix() const {
    IntMatrix out(rank(), std::vector<int64_t>(rank(), 0));
    for (size_t l = 0; l < rank(); l++) {
        out[l][l] = A[l];
    }
    return out;
}

IntMatrix SmithForm::P_matrix() const {
    IntMatrix out(rank(), std::vector<int64_t>(cols, 0));
    for (size_t l = 0; l < rank(); l++) {
        out[l][l] = 1;
    }
    return out;
}

int64_t SmithForm::unit_cell_volume() const {
    cpp_int v = 1;
    for (auto a : A) {
        v *= a;
    }
    return narrow(v);
}

IntMatrix SmithForm::reconstruct() const {
    if (rank() == 0) {
        return {};
    }
    return multiply(multiply(multiply(T, A_matrix()), P_matrix()), S);
}

LatticePoint SmithForm::smith_vector(const std::vector<int64_t> &n) const {
    if (n.size() != cols) {
        throw InvalidArgument("partition length does not match the number of columns of K");
    }
    LatticePoint s(rank());
    for (size_t l = 0; l < rank(); l++) {
        int64_t acc = 0;
        for (size_t j = 0; j < cols; j++) {
            acc += S[l][j] * n[j];
        }
        s[l] = acc;
    }
    return s;
}

}  // namespace clocklat::intlat
