#pragma once

// Uniform periodic lattices, complex/real field storage, spectral
// differentiation and volume integration.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ehrlab/vec3.hpp"

namespace ehrlab {

using cplx = std::complex<double>;

struct GridSpec {
    int dims = 1;
    std::array<int, 3> points{1, 1, 1};       // unused axes hold 1
    std::array<double, 3> extent{1.0, 1.0, 1.0};

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

namespace detail {
class FftPlans;
}

/// Immutable periodic lattice with site coordinates and wavenumber tables.
///
/// Site coordinates are cell-centred on the box [-L/2, L/2): x_j = -L/2 + j h.
/// Storage is row-major with x the slowest axis and z the fastest.
class Grid {
public:
    explicit Grid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    int dims() const { return spec_.dims; }
    int points(int axis) const { return spec_.points[axis]; }
    double extent(int axis) const { return spec_.extent[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    std::size_t size() const { return size_; }
    double cell_volume() const { return cell_volume_; }
    double volume() const;

    std::span<const double> coords(int axis) const { return coords_[axis]; }

    /// Full FFT-ordered table 2*pi*n/L, n = 0..N/2-1, -N/2..-1.
    std::span<const double> wavenumbers(int axis) const { return k_full_[axis]; }
    /// Table used for first derivatives: identical except that the Nyquist
    /// entry is zero, so the table sums to zero and odd derivatives of real
    /// data stay real.
    std::span<const double> derivative_wavenumbers(int axis) const { return k_deriv_[axis]; }

    /// Largest |k| reachable on the derivative table (Euclidean norm over axes).
    double k_max_norm() const;

    std::array<int, 3> unravel(std::size_t index) const;
    std::size_t ravel(int ix, int iy, int iz) const;
    Vec3 position(std::size_t index) const;

    /// Unnormalised forward transform, in place.
    void forward(std::span<cplx> data) const;
    /// Inverse transform including the 1/N normalisation, in place.
    void inverse(std::span<cplx> data) const;

    /// Calls f(index, kx, ky, kz) over wavenumber space using the derivative table.
    template <typename F>
    void for_each_k(F&& f) const {
        std::size_t idx = 0;
        for (int i = 0; i < spec_.points[0]; ++i)
            for (int j = 0; j < spec_.points[1]; ++j)
                for (int l = 0; l < spec_.points[2]; ++l, ++idx)
                    f(idx, k_deriv_[0][i], k_deriv_[1][j], k_deriv_[2][l]);
    }

    /// Calls f(index, x, y, z) over lattice sites.
    template <typename F>
    void for_each_site(F&& f) const {
        std::size_t idx = 0;
        for (int i = 0; i < spec_.points[0]; ++i)
            for (int j = 0; j < spec_.points[1]; ++j)
                for (int l = 0; l < spec_.points[2]; ++l, ++idx)
                    f(idx, coords_[0][i], coords_[1][j], coords_[2][l]);
    }

    bool operator==(const Grid& other) const { return spec_ == other.spec_; }

private:
    GridSpec spec_;
    std::array<double, 3> spacing_{};
    std::size_t size_ = 0;
    double cell_volume_ = 0.0;
    std::array<std::vector<double>, 3> coords_;
    std::array<std::vector<double>, 3> k_full_;
    std::array<std::vector<double>, 3> k_deriv_;
    std::shared_ptr<detail::FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validates the GridSpec and builds the grid.
/// Throws InvalidArgument for dims outside 1..3, non-power-of-two or < 8
/// points on an active axis, or non-positive extents.
GridPtr make_grid(const GridSpec& spec);

template <typename T>
class BasicField {
public:
    BasicField() = default;
    explicit BasicField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), T{}) {}
    BasicField(GridPtr grid, std::vector<T> values);

    const GridPtr& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    bool all_finite() const;

private:
    GridPtr grid_;
    std::vector<T> values_;
};

using ComplexField = BasicField<cplx>;
using RealField = BasicField<double>;

/// Spectral derivative along `axis`: multiply by i k in wavenumber space.
ComplexField derivative(const ComplexField& f, int axis);
RealField derivative(const RealField& f, int axis);

/// Spectral second derivative (-k^2 multiplier on the derivative table).
ComplexField second_derivative(const ComplexField& f, int axis);

/// Riemann sum h1 h2 h3 * sum(values); spectrally accurate for smooth periodic data.
double integrate(const RealField& f);
cplx integrate(const ComplexField& f);
double integrate(const Grid& grid, std::span<const double> values);

namespace spectral {

// Raw-buffer kernels shared by the steppers. `out` may alias `in`.

void derivative(const Grid& grid, std::span<const cplx> in, int axis, std::span<cplx> out);

/// One forward transform, then one inverse per active axis.
void gradient(const Grid& grid, std::span<const cplx> in, std::array<std::span<cplx>, 3> out);

}  // namespace spectral

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace ehrlab
