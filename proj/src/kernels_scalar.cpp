#include <limits>

#include "gcnh/kernels.hpp"

namespace gcnh::kernels {
namespace {

// Zero entries of the left operand are skipped: bag-of-words inputs are
// mostly zeros. Vector backends must skip exactly the same entries.

void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
              std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) {
                continue;
            }
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                crow[j] += av * brow[j];
            }
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
            double* crow = c + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void csr_sum(CsrView csr, const double* x, double* out, std::size_t d) {
    for (std::size_t r = 0; r < csr.rows; ++r) {
        double* orow = out + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            orow[j] = 0.0;
        }
        for (std::size_t e = csr.offsets[r]; e < csr.offsets[r + 1]; ++e) {
            const double* xrow = x + static_cast<std::size_t>(csr.columns[e]) * d;
            for (std::size_t j = 0; j < d; ++j) {
                orow[j] += xrow[j];
            }
        }
    }
}

void csr_weighted_sum(CsrView csr, const double* weights, const double* x, double* out,
                      std::size_t d) {
    for (std::size_t r = 0; r < csr.rows; ++r) {
        double* orow = out + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            orow[j] = 0.0;
        }
        for (std::size_t e = csr.offsets[r]; e < csr.offsets[r + 1]; ++e) {
            const double w = weights[e];
            const double* xrow = x + static_cast<std::size_t>(csr.columns[e]) * d;
            for (std::size_t j = 0; j < d; ++j) {
                orow[j] += w * xrow[j];
            }
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
        const std::uint32_t v0 = csr.columns[first];
        for (std::size_t j = 0; j < d; ++j) {
            orow[j] = x[static_cast<std::size_t>(v0) * d + j];
            arow[j] = v0;
        }
        for (std::size_t e = first + 1; e < last; ++e) {
            const std::uint32_t v = csr.columns[e];
            const double* xrow = x + static_cast<std::size_t>(v) * d;
            for (std::size_t j = 0; j < d; ++j) {
                if (xrow[j] > orow[j]) {
                    orow[j] = xrow[j];
                    arow[j] = v;
                }
            }
        }
    }
}

void axpy(double alpha, const double* x, double* y, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
        y[i] += alpha * x[i];
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar", gemm_acc, gemm_tn_acc, csr_sum, csr_weighted_sum, csr_max, axpy,
    };
    return table;
}

} // namespace gcnh::kernels
