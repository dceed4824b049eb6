#include "discount_ts/numerics.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <string_view>

#include "discount_ts/errors.hpp"

namespace dts {

SquareMatrix::SquareMatrix(std::size_t dim, std::vector<double> entries)
    : dim_(dim), a_(std::move(entries)) {
    if (a_.size() != dim_ * dim_) {
        throw InvalidArgument("SquareMatrix: expected " + std::to_string(dim_ * dim_) +
                              " entries, got " + std::to_string(a_.size()));
    }
}

SquareMatrix::SquareMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : dim_(rows.size()) {
    a_.reserve(dim_ * dim_);
    for (const auto& row : rows) {
        if (row.size() != dim_) throw InvalidArgument("SquareMatrix: ragged row list");
        a_.insert(a_.end(), row.begin(), row.end());
    }
}

SquareMatrix SquareMatrix::identity(std::size_t dim) {
    SquareMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

bool SquareMatrix::all_finite() const noexcept {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

SquareMatrix SquareMatrix::transposed() const {
    SquareMatrix t(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double SquareMatrix::norm_inf() const noexcept {
    double best = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

double SquareMatrix::norm_1() const noexcept { return transposed().norm_inf(); }

SquareMatrix operator*(const SquareMatrix& lhs, const SquareMatrix& rhs) {
    if (lhs.dim_ != rhs.dim_) throw InvalidArgument("SquareMatrix product: dimension mismatch");
    const std::size_t n = lhs.dim_;
    SquareMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double l = lhs(i, k);
            if (l == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += l * rhs(k, j);
        }
    }
    return out;
}

SquareMatrix operator+(SquareMatrix lhs, const SquareMatrix& rhs) {
    if (lhs.dim_ != rhs.dim_) throw InvalidArgument("SquareMatrix sum: dimension mismatch");
    for (std::size_t i = 0; i < lhs.a_.size(); ++i) lhs.a_[i] += rhs.a_[i];
    return lhs;
}

SquareMatrix operator-(SquareMatrix lhs, const SquareMatrix& rhs) {
    if (lhs.dim_ != rhs.dim_) throw InvalidArgument("SquareMatrix difference: dimension mismatch");
    for (std::size_t i = 0; i < lhs.a_.size(); ++i) lhs.a_[i] -= rhs.a_[i];
    return lhs;
}

SquareMatrix operator*(double s, SquareMatrix m) {
    for (double& v : m.a_) v *= s;
    return m;
}

SquareMatrix solve(SquareMatrix a, SquareMatrix b) {
    const std::size_t n = a.dim();
    if (b.dim() != n) throw InvalidArgument("solve: dimension mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw InvalidArgument("solve: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(col, j), a(pivot, j));
                std::swap(b(col, j), b(pivot, j));
            }
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < n; ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = b(col, j);
            for (std::size_t k = col + 1; k < n; ++k) s -= a(col, k) * b(k, j);
            b(col, j) = s / a(col, col);
        }
    }
    return b;
}

SquareMatrix mat_exp(const SquareMatrix& a, double x) {
    if (!std::isfinite(x)) throw InvalidArgument("mat_exp: non-finite scale factor");
    if (!a.all_finite()) throw InvalidArgument("mat_exp: non-finite matrix entry");

    const std::size_t n = a.dim();
    SquareMatrix ax = x * a;
    if (x == 0.0) return SquareMatrix::identity(n);

    // Higham (2005) degree-13 coefficients.
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm = ax.norm_1();
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        ax = std::ldexp(1.0, -squarings) * ax;
    }

    const SquareMatrix id = SquareMatrix::identity(n);
    const SquareMatrix a2 = ax * ax;
    const SquareMatrix a4 = a2 * a2;
    const SquareMatrix a6 = a4 * a2;

    SquareMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                           b[3] * a2 + b[1] * id;
    const SquareMatrix u = ax * u_inner;
    const SquareMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                           b[2] * a2 + b[0] * id;

    SquareMatrix r = solve(v - u, v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    return r;
}

std::vector<double> mat_vec(const SquareMatrix& a, std::span<const double> v) {
    if (a.dim() != v.size()) {
        throw InvalidArgument("mat_vec: matrix of dim " + std::to_string(a.dim()) +
                              " times vector of length " + std::to_string(v.size()));
    }
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double trapezoid(std::span<const double> values, double dt) {
    if (values.size() < 2) throw InvalidArgument("trapezoid: need at least 2 samples");
    if (!(dt > 0.0)) throw InvalidArgument("trapezoid: dt must be positive");
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * dt;
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
    if (grid.size() != values.size()) throw InvalidArgument("trapezoid: length mismatch");
    if (values.size() < 2) throw InvalidArgument("trapezoid: need at least 2 samples");
    double s = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        s += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
    return s;
}

double lerp(std::span<const double> grid, std::span<const double> values, double x) {
    if (grid.size() != values.size() || grid.empty())
        throw InvalidArgument("lerp: grid and values must be non-empty and equally long");
    if (!(x >= grid.front() && x <= grid.back()))
        throw InvalidArgument("lerp: x = " + std::to_string(x) + " outside [" +
                              std::to_string(grid.front()) + ", " + std::to_string(grid.back()) +
                              "]");
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    if (it == grid.end()) return values.back();
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    if (grid[lo] == x) return values[lo];
    const double w = (x - grid[lo]) / (grid[hi] - grid[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = m0 * ctr[0];
        const std::uint64_t p1 = m1 * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

NormalStream::NormalStream(RngStream stream) noexcept
    : key_{static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32)},
      stream_id_(stream.stream_id) {}

void NormalStream::refill() noexcept {
    const auto r = philox4x32_10({static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_id_),
                                  static_cast<std::uint32_t>(stream_id_ >> 32)},
                                 key_);
    ++block_;
    // 53-bit uniforms strictly inside (0, 1).
    const std::uint64_t bits1 = (static_cast<std::uint64_t>(r[0]) << 32 | r[1]) >> 11;
    const std::uint64_t bits2 = (static_cast<std::uint64_t>(r[2]) << 32 | r[3]) >> 11;
    constexpr double scale = 1.0 / 9007199254740992.0;
    const double u1 = (static_cast<double>(bits1) + 0.5) * scale;
    const double u2 = (static_cast<double>(bits2) + 0.5) * scale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    buffer_[1] = radius * std::cos(angle);
    buffer_[0] = radius * std::sin(angle);
    cached_ = 2;
}

std::vector<double> gaussian_draws(RngStream stream, std::size_t n) {
    std::vector<double> out(n);
    NormalStream gen(stream);
    gen.fill(out);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("DISCOUNT_TS_THREADS")) {
        unsigned n = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned> g_max_threads{0};

}  // namespace

void set_max_threads(unsigned n) noexcept { g_max_threads.store(n); }

unsigned max_threads() noexcept {
    const unsigned n = g_max_threads.load();
    return n == 0 ? default_threads() : n;
}

}  // namespace dts
