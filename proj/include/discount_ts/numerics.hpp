#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <thread>
#include <vector>

namespace dts {

/// Dense square matrix, row-major.
class SquareMatrix {
   public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {}
    SquareMatrix(std::size_t dim, std::vector<double> entries);
    SquareMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static SquareMatrix identity(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

    std::span<const double> entries() const noexcept { return a_; }
    std::span<double> entries() noexcept { return a_; }

    bool all_finite() const noexcept;
    SquareMatrix transposed() const;

    // Max absolute row sum.
    double norm_inf() const noexcept;
    double norm_1() const noexcept;

    friend SquareMatrix operator*(const SquareMatrix& lhs, const SquareMatrix& rhs);
    friend SquareMatrix operator+(SquareMatrix lhs, const SquareMatrix& rhs);
    friend SquareMatrix operator-(SquareMatrix lhs, const SquareMatrix& rhs);
    friend SquareMatrix operator*(double s, SquareMatrix m);

    friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

   private:
    std::size_t dim_ = 0;
    std::vector<double> a_;
};

/// e^{A x} by scaling and squaring with the degree-13 Pade approximant.
/// Throws InvalidArgument on non-finite input.
SquareMatrix mat_exp(const SquareMatrix& a, double x);

std::vector<double> mat_vec(const SquareMatrix& a, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

/// Solves A X = B for X by Gaussian elimination with partial pivoting.
SquareMatrix solve(SquareMatrix a, SquareMatrix b);

/// Trapezoidal rule on a uniform grid with spacing dt. Needs >= 2 samples.
double trapezoid(std::span<const double> values, double dt);

/// Trapezoidal rule on a (possibly non-uniform) abscissa grid.
double trapezoid(std::span<const double> grid, std::span<const double> values);

/// Piecewise-linear interpolation. grid strictly increasing, x in [front, back].
double lerp(std::span<const double> grid, std::span<const double> values, double x);

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Identifies one independent substream: the Philox key is the seed and the
/// upper half of the counter is the stream id.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Sequential standard-normal generator over one substream (Box-Muller on
/// Philox output). Output depends only on (seed, stream_id) and the number of
/// draws taken so far.
class NormalStream {
   public:
    explicit NormalStream(RngStream stream) noexcept;

    double next() noexcept {
        if (cached_ == 0) refill();
        return buffer_[--cached_];
    }

    void fill(std::span<double> out) noexcept {
        for (double& x : out) x = next();
    }

   private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<double, 2> buffer_{};
    int cached_ = 0;
};

std::vector<double> gaussian_draws(RngStream stream, std::size_t n);

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Process-wide cap on worker threads (0 restores the hardware default).
void set_max_threads(unsigned n) noexcept;
unsigned max_threads() noexcept;

/// Runs fn(i) for i in [0, n) on up to max_threads() threads, contiguous
/// chunks per thread. fn must only write to per-index state; the first
/// exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn);

}  // namespace dts

#include "discount_ts/detail/parallel.ipp"
