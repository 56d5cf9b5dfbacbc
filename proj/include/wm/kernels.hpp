#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the DSP, encoder and decoder paths.
// Scalar reference implementations are always built; AVX2 (x86-64) and NEON
// (aarch64) variants are selected at runtime and equivalence-tested against
// the scalar versions. The WM_KERNEL_BACKEND environment variable
// (scalar|avx2|neon) overrides the automatic choice.
namespace wm::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
Backend active_backend();
Backend best_backend();
bool backend_available(Backend b);
// Throws wm::ConfigError if the backend is not available on this machine.
void set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void scal(double a, double* x, std::size_t n);                   // x *= a
void elem_mul(const double* a, const double* b, double* out, std::size_t n);
// y = M x with M row-major (rows x cols)
void matvec(const double* m, const double* x, double* y, std::size_t rows,
            std::size_t cols);

// Reference kernels; the oracle side of the backend equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void elem_mul(const double* a, const double* b, double* out, std::size_t n);
void matvec(const double* m, const double* x, double* y, std::size_t rows,
            std::size_t cols);
}  // namespace scalar

}  // namespace wm::kernels
