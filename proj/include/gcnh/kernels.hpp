#pragma once

// Data-parallel inner loops of the engine.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2 variant. The variant is chosen once at runtime from CPU features.
// All variants vectorize across the column (feature) dimension only and never
// fuse multiply-add, so each output element sees the same sequence of IEEE
// operations in every backend: results are bit-identical, which the
// equivalence tests assert.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace gcnh::kernels {

/// CSR row structure shared by the sparse kernels. `offsets` has rows+1
/// entries; `columns[offsets[r] .. offsets[r+1])` are the entries of row r.
struct CsrView {
    std::size_t rows = 0;
    const std::size_t* offsets = nullptr;
    const std::uint32_t* columns = nullptr;
};

struct KernelTable {
    const char* name;

    /// C[n x m] += A[n x k] * B[k x m], all row-major and densely packed.
    void (*gemm_acc)(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                     std::size_t m);

    /// C[k x m] += A^T * B with A[n x k], B[n x m].
    void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                        std::size_t m);

    /// out[r, :] = sum over stored columns v of row r of x[v, :]; d columns.
    void (*csr_sum)(CsrView csr, const double* x, double* out, std::size_t d);

    /// out[r, :] = sum over stored (v, w) of row r of w * x[v, :].
    void (*csr_weighted_sum)(CsrView csr, const double* weights, const double* x, double* out,
                             std::size_t d);

    /// out[r, j] = max over neighbors v of x[v, j]; argmax[r, j] = the lowest
    /// such v. Empty rows produce 0 and argmax = UINT32_MAX.
    void (*csr_max)(CsrView csr, const double* x, double* out, std::uint32_t* argmax,
                    std::size_t d);

    /// y[i] += alpha * x[i].
    void (*axpy)(double alpha, const double* x, double* y, std::size_t len);
};

const KernelTable& scalar_kernels();

/// Null when the AVX2 variant is not compiled in or not supported by the CPU.
const KernelTable* avx2_kernels();

/// Table used by the tensor engine. Defaults to the best supported backend.
const KernelTable& active();

/// Select a backend by name ("scalar", "avx2" or "auto").
/// Returns false if the requested backend is unavailable.
bool select(std::string_view name);

} // namespace gcnh::kernels
