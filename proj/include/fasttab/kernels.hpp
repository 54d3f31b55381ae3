#pragma once

#include <cstdint>

namespace fasttab::kernels {

// Worker cap; reads FASTTAB_THREADS once. Returns the number of OpenMP
// threads the parallel kernels will use (1 when built without OpenMP).
int thread_count();

// C[n,m] = A[n,k] * B[k,m], row-major. The OpenMP variant parallelizes over
// rows of C only, so each output element is computed by exactly one thread
// in the same order as the serial reference; results are bit-identical.
void matmul_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

// C[n,m] += A[n,k] * B[k,m]
void matmul_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

// C[k,m] += A^T[n,k] * B[n,m]  (A stored [n,k])
void matmul_tn_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_tn_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

// C[n,k] += A[n,m] * B^T[k,m]  (B stored [k,m])
void matmul_nt_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t m, int64_t k);
void matmul_nt_acc(const double* a, const double* b, double* c, int64_t n, int64_t m, int64_t k);

// im2col for a [C,H,W] image: output [C*kh*kw, Hout*Wout], zero padding.
void im2col_serial(const double* x, double* col, int64_t c, int64_t h, int64_t w,
                   int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
                   int64_t hout, int64_t wout);
void im2col(const double* x, double* col, int64_t c, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
            int64_t hout, int64_t wout);

// Scatter-add inverse of im2col. Serial by construction (overlapping writes).
void col2im_acc(const double* col, double* x, int64_t c, int64_t h, int64_t w,
                int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
                int64_t hout, int64_t wout);

}  // namespace fasttab::kernels
