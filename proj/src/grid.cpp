#include "ehrlab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "ehrlab/errors.hpp"

namespace ehrlab {

namespace detail {

namespace {
// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

class FftPlans {
public:
    FftPlans(int rank, const int* n, std::size_t size) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        auto* buf = fftw_alloc_complex(size);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft(rank, n, buf, buf, FFTW_FORWARD, flags);
        inv_ = fftw_plan_dft(rank, n, buf, buf, FFTW_BACKWARD, flags);
        fftw_free(buf);
        if (fwd_ == nullptr || inv_ == nullptr) throw Error("FFTW plan creation failed");
    }
    ~FftPlans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    void forward(cplx* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, p, p);
    }
    void inverse(cplx* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(inv_, p, p);
    }

private:
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

}  // namespace detail

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate(const GridSpec& spec) {
    if (spec.dims < 1 || spec.dims > 3)
        throw InvalidArgument("grid: dims must be 1, 2 or 3 (got " + std::to_string(spec.dims) + ")");
    for (int a = 0; a < 3; ++a) {
        const int n = spec.points[a];
        if (a < spec.dims) {
            if (n < 8 || !is_power_of_two(n))
                throw InvalidArgument("grid: points on axis " + std::to_string(a) +
                                      " must be a power of two >= 8 (got " + std::to_string(n) + ")");
            if (!(spec.extent[a] > 0.0) || !std::isfinite(spec.extent[a]))
                throw InvalidArgument("grid: extent on axis " + std::to_string(a) + " must be positive");
        } else if (n != 1) {
            throw InvalidArgument("grid: inactive axis " + std::to_string(a) + " must have 1 point");
        }
    }
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    validate(spec_);
    size_ = 1;
    cell_volume_ = 1.0;
    for (int a = 0; a < 3; ++a) {
        const int n = spec_.points[a];
        size_ *= static_cast<std::size_t>(n);
        coords_[a].assign(n, 0.0);
        k_full_[a].assign(n, 0.0);
        k_deriv_[a].assign(n, 0.0);
        if (a >= spec_.dims) {
            spacing_[a] = 1.0;
            continue;
        }
        const double L = spec_.extent[a];
        spacing_[a] = L / n;
        cell_volume_ *= spacing_[a];
        const double dk = 2.0 * std::numbers::pi / L;
        for (int j = 0; j < n; ++j) {
            coords_[a][j] = -0.5 * L + j * spacing_[a];
            const int m = (j < n / 2) ? j : j - n;
            k_full_[a][j] = dk * m;
            k_deriv_[a][j] = (j == n / 2) ? 0.0 : dk * m;
        }
    }
    std::array<int, 3> n{};
    for (int a = 0; a < spec_.dims; ++a) n[a] = spec_.points[a];
    plans_ = std::make_shared<detail::FftPlans>(spec_.dims, n.data(), size_);
}

double Grid::volume() const {
    double v = 1.0;
    for (int a = 0; a < spec_.dims; ++a) v *= spec_.extent[a];
    return v;
}

double Grid::k_max_norm() const {
    double s = 0.0;
    for (int a = 0; a < spec_.dims; ++a) {
        double m = 0.0;
        for (double k : k_deriv_[a]) m = std::max(m, std::abs(k));
        s += m * m;
    }
    return std::sqrt(s);
}

std::array<int, 3> Grid::unravel(std::size_t index) const {
    const auto ny = static_cast<std::size_t>(spec_.points[1]);
    const auto nz = static_cast<std::size_t>(spec_.points[2]);
    return {static_cast<int>(index / (ny * nz)), static_cast<int>((index / nz) % ny),
            static_cast<int>(index % nz)};
}

std::size_t Grid::ravel(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * spec_.points[1] + iy) * spec_.points[2] + iz;
}

Vec3 Grid::position(std::size_t index) const {
    const auto ijk = unravel(index);
    return {coords_[0][ijk[0]], coords_[1][ijk[1]], coords_[2][ijk[2]]};
}

void Grid::forward(std::span<cplx> data) const { plans_->forward(data.data()); }

void Grid::inverse(std::span<cplx> data) const {
    plans_->inverse(data.data());
    const double s = 1.0 / static_cast<double>(size_);
    for (auto& v : data) v *= s;
}

GridPtr make_grid(const GridSpec& spec) { return std::make_shared<const Grid>(spec); }

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw InvalidArgument(std::string(what) + ": fields live on different grids");
}

template <typename T>
BasicField<T>::BasicField(GridPtr grid, std::vector<T> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size())
        throw InvalidArgument("field: value count " + std::to_string(values_.size()) +
                              " does not match grid size " + std::to_string(grid_->size()));
}

template <typename T>
bool BasicField<T>::all_finite() const {
    for (const auto& v : values_) {
        if constexpr (std::is_same_v<T, cplx>) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        } else {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

template class BasicField<cplx>;
template class BasicField<double>;

namespace spectral {

void derivative(const Grid& grid, std::span<const cplx> in, int axis, std::span<cplx> out) {
    if (axis < 0 || axis >= grid.dims()) throw InvalidArgument("derivative: axis out of range");
    if (out.data() != in.data()) std::copy(in.begin(), in.end(), out.begin());
    grid.forward(out);
    grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
        const double ka = axis == 0 ? kx : (axis == 1 ? ky : kz);
        out[idx] *= cplx(0.0, ka);
    });
    grid.inverse(out);
}

void gradient(const Grid& grid, std::span<const cplx> in, std::array<std::span<cplx>, 3> out) {
    std::vector<cplx> hat(in.begin(), in.end());
    grid.forward(hat);
    for (int a = 0; a < grid.dims(); ++a) {
        auto dst = out[a];
        grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
            const double ka = a == 0 ? kx : (a == 1 ? ky : kz);
            dst[idx] = hat[idx] * cplx(0.0, ka);
        });
        grid.inverse(dst);
    }
}

}  // namespace spectral

ComplexField derivative(const ComplexField& f, int axis) {
    ComplexField out(f.grid());
    spectral::derivative(*f.grid(), f.values(), axis, out.values());
    return out;
}

RealField derivative(const RealField& f, int axis) {
    std::vector<cplx> buf(f.values().begin(), f.values().end());
    spectral::derivative(*f.grid(), buf, axis, buf);
    RealField out(f.grid());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
    return out;
}

ComplexField second_derivative(const ComplexField& f, int axis) {
    if (axis < 0 || axis >= f.grid()->dims()) throw InvalidArgument("second_derivative: axis out of range");
    ComplexField out = f;
    const Grid& g = *f.grid();
    g.forward(out.values());
    g.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
        const double ka = axis == 0 ? kx : (axis == 1 ? ky : kz);
        out[idx] *= -ka * ka;
    });
    g.inverse(out.values());
    return out;
}

double integrate(const Grid& grid, std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
}

double integrate(const RealField& f) { return integrate(*f.grid(), f.values()); }

cplx integrate(const ComplexField& f) {
    cplx s = 0.0;
    for (const auto& v : f.values()) s += v;
    return s * f.grid()->cell_volume();
}

}  // namespace ehrlab
