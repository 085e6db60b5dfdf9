// Compiled with -mavx2 (and without -mfma); only reached after a runtime
// CPU check in kernels.cpp.

#include <immintrin.h>

#include <limits>

#include "gcnh/kernels.hpp"

namespace gcnh::kernels {
namespace {

// out[j] += av * row[j] for j in [0, m)
inline void scaled_add(double av, const double* row, double* out, std::size_t m) {
    const __m256d s = _mm256_set1_pd(av);
    std::size_t j = 0;
    for (; j + 8 <= m; j += 8) {
        __m256d c0 = _mm256_loadu_pd(out + j);
        __m256d c1 = _mm256_loadu_pd(out + j + 4);
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(s, _mm256_loadu_pd(row + j)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(s, _mm256_loadu_pd(row + j + 4)));
        _mm256_storeu_pd(out + j, c0);
        _mm256_storeu_pd(out + j + 4, c1);
    }
    for (; j + 4 <= m; j += 4) {
        __m256d c0 = _mm256_loadu_pd(out + j);
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(s, _mm256_loadu_pd(row + j)));
        _mm256_storeu_pd(out + j, c0);
    }
    for (; j < m; ++j) {
        out[j] += av * row[j];
    }
}

inline void plain_add(const double* row, double* out, std::size_t m) {
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(row + j)));
    }
    for (; j < m; ++j) {
        out[j] += row[j];
    }
}

inline void zero(double* out, std::size_t m) {
    std::size_t j = 0;
    const __m256d z = _mm256_setzero_pd();
    for (; j + 4 <= m; j += 4) {
        _mm256_storeu_pd(out + j, z);
    }
    for (; j < m; ++j) {
        out[j] = 0.0;
    }
}

void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
              std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) {
                continue;
            }
            scaled_add(av, b + p * m, crow, m);
        }
    }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                 std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* brow = b + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) {
                continue;
            }
            scaled_add(av, brow, c + p * m, m);
        }
    }
}

void csr_sum(CsrView csr, const double* x, double* out, std::size_t d) {
    for (std::size_t r = 0; r < csr.rows; ++r) {
        double* orow = out + r * d;
        zero(orow, d);
        for (std::size_t e = csr.offsets[r]; e < csr.offsets[r + 1]; ++e) {
            plain_add(x + static_cast<std::size_t>(csr.columns[e]) * d, orow, d);
        }
    }
}

void csr_weighted_sum(CsrView csr, const double* weights, const double* x, double* out,
                      std::size_t d) {
    for (std::size_t r = 0; r < csr.rows; ++r) {
        double* orow = out + r * d;
        zero(orow, d);
        for (std::size_t e = csr.offsets[r]; e < csr.offsets[r + 1]; ++e) {
            scaled_add(weights[e], x + static_cast<std::size_t>(csr.columns[e]) * d, orow, d);
        }
    }
}

void csr_max(CsrView csr, const double* x, double* out, std::uint32_t* argmax, std::size_t d) {
    for (std::size_t r = 0; r < csr.rows; ++r) {
        double* orow = out + r * d;
        std::uint32_t* arow = argmax + r * d;
        const std::size_t first = csr.offsets[r];
        const std::size_t last = csr.offsets[r + 1];
        if (first == last) {
            for (std::size_t j = 0; j < d; ++j) {
                orow[j] = 0.0;
                arow[j] = std::numeric_limits<std::uint32_t>::max();
            }
            continue;
        }
        std::size_t j = 0;
        // Indices ride along as doubles (exact below 2^53) so one compare
        // mask can blend both value and index lanes.
        for (; j + 4 <= d; j += 4) {
            const std::uint32_t v0 = csr.columns[first];
            __m256d best = _mm256_loadu_pd(x + static_cast<std::size_t>(v0) * d + j);
            __m256d best_idx = _mm256_set1_pd(static_cast<double>(v0));
            for (std::size_t e = first + 1; e < last; ++e) {
                const std::uint32_t v = csr.columns[e];
                const __m256d cand = _mm256_loadu_pd(x + static_cast<std::size_t>(v) * d + j);
                const __m256d gt = _mm256_cmp_pd(cand, best, _CMP_GT_OQ);
                best = _mm256_blendv_pd(best, cand, gt);
                best_idx = _mm256_blendv_pd(best_idx, _mm256_set1_pd(static_cast<double>(v)), gt);
            }
            _mm256_storeu_pd(orow + j, best);
            alignas(32) double idx[4];
            _mm256_store_pd(idx, best_idx);
            for (int l = 0; l < 4; ++l) {
                arow[j + static_cast<std::size_t>(l)] = static_cast<std::uint32_t>(idx[l]);
            }
        }
        for (; j < d; ++j) {
            const std::uint32_t v0 = csr.columns[first];
            double best = x[static_cast<std::size_t>(v0) * d + j];
            std::uint32_t best_v = v0;
            for (std::size_t e = first + 1; e < last; ++e) {
                const std::uint32_t v = csr.columns[e];
                const double cand = x[static_cast<std::size_t>(v) * d + j];
                if (cand > best) {
                    best = cand;
                    best_v = v;
                }
            }
            orow[j] = best;
            arow[j] = best_v;
        }
    }
}

void axpy(double alpha, const double* x, double* y, std::size_t len) {
    scaled_add(alpha, x, y, len);
}

} // namespace

const KernelTable& avx2_kernel_table() {
    static const KernelTable table{
        "avx2", gemm_acc, gemm_tn_acc, csr_sum, csr_weighted_sum, csr_max, axpy,
    };
    return table;
}

} // namespace gcnh::kernels
