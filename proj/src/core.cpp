#include "flowest/core.hpp"

#include <cmath>
#include <sstream>

namespace flowest {

namespace {

// Per-axis trapezoidal weights on a nonuniform 1-D grid.
std::vector<double> trapezoid_weights(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    if (n == 1) {
        w[0] = 1.0;  // degenerate axis, unit thickness
        return w;
    }
    w[0] = 0.5 * (x[1] - x[0]);
    w[n - 1] = 0.5 * (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (x[i + 1] - x[i - 1]);
    return w;
}

}  // namespace

Grid::Grid(std::vector<std::vector<double>> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2 || coords_.size() > 3)
        throw std::invalid_argument("Grid: expected 2 or 3 axes, got " +
                                    std::to_string(coords_.size()));
    n_points_ = 1;
    for (std::size_t a = 0; a < coords_.size(); ++a) {
        const auto& x = coords_[a];
        if (x.size() < 2)
            throw std::invalid_argument("Grid: axis " + std::to_string(a) +
                                        " needs at least 2 points");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw std::invalid_argument("Grid: axis " + std::to_string(a) +
                                            " coordinates not strictly increasing at index " +
                                            std::to_string(i));
        n_points_ *= x.size();
    }

    std::vector<std::vector<double>> axis_w;
    axis_w.reserve(coords_.size());
    volume_ = 1.0;
    for (const auto& x : coords_) {
        axis_w.push_back(trapezoid_weights(x));
        volume_ *= x.back() - x.front();
    }

    weights_.resize(static_cast<Eigen::Index>(n_points_));
    std::vector<int> idx(coords_.size(), 0);
    for (std::size_t p = 0; p < n_points_; ++p) {
        double w = 1.0;
        for (std::size_t a = 0; a < coords_.size(); ++a) w *= axis_w[a][idx[a]];
        weights_[static_cast<Eigen::Index>(p)] = w;
        for (std::size_t a = 0; a < coords_.size(); ++a) {
            if (++idx[a] < dim(static_cast<int>(a))) break;
            idx[a] = 0;
        }
    }
}

std::size_t Grid::flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = n_axes() - 1; a >= 0; --a) f = f * dim(a) + idx[a];
    return f;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= dim(a);
    return s;
}

bool Grid::same_layout(const Grid& other) const {
    if (n_axes() != other.n_axes()) return false;
    for (int a = 0; a < n_axes(); ++a)
        if (coords_[a] != other.coords_[a]) return false;
    return true;
}

std::string Grid::describe() const {
    std::ostringstream os;
    os << n_axes() << " axes, dims (";
    for (int a = 0; a < n_axes(); ++a) os << (a ? "," : "") << dim(a);
    os << ")";
    return os.str();
}

GridPtr make_uniform_grid(const std::vector<int>& dims,
                          const std::vector<std::pair<double, double>>& extents) {
    if (dims.size() != extents.size())
        throw std::invalid_argument("make_uniform_grid: dims/extents size mismatch");
    std::vector<std::vector<double>> coords(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) {
        const int n = dims[a];
        if (n < 2) throw std::invalid_argument("make_uniform_grid: axis needs >= 2 points");
        coords[a].resize(n);
        for (int i = 0; i < n; ++i) {
            const double s = static_cast<double>(i) / (n - 1);
            coords[a][i] = extents[a].first + s * (extents[a].second - extents[a].first);
        }
        coords[a].back() = extents[a].second;
    }
    return std::make_shared<Grid>(std::move(coords));
}

VectorField::VectorField(GridPtr grid, std::vector<VectorXd> components)
    : grid_(std::move(grid)), components_(std::move(components)) {
    if (!grid_) throw std::invalid_argument("VectorField: null grid");
    if (static_cast<int>(components_.size()) != grid_->n_axes())
        throw std::invalid_argument("VectorField: " + std::to_string(components_.size()) +
                                    " components for a " + std::to_string(grid_->n_axes()) +
                                    "-axis grid");
    for (const auto& c : components_)
        if (static_cast<std::size_t>(c.size()) != grid_->n_points())
            throw std::invalid_argument("VectorField: component length " +
                                        std::to_string(c.size()) + " != grid points " +
                                        std::to_string(grid_->n_points()));
}

VectorField::VectorField(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw std::invalid_argument("VectorField: null grid");
    components_.assign(grid_->n_axes(),
                       VectorXd::Zero(static_cast<Eigen::Index>(grid_->n_points())));
}

namespace {
void require_same_grid(const VectorField& a, const VectorField& b, const char* op) {
    if (a.grid().get() == b.grid().get()) return;
    if (a.grid()->same_layout(*b.grid())) return;
    throw std::invalid_argument(std::string(op) + ": grid mismatch (" + a.grid()->describe() +
                                " vs " + b.grid()->describe() + ")");
}
}  // namespace

VectorField& VectorField::operator+=(const VectorField& other) {
    require_same_grid(*this, other, "VectorField::operator+=");
    for (int c = 0; c < n_components(); ++c) components_[c] += other.components_[c];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
    require_same_grid(*this, other, "VectorField::operator-=");
    for (int c = 0; c < n_components(); ++c) components_[c] -= other.components_[c];
    return *this;
}

VectorField& VectorField::operator*=(double s) {
    for (auto& c : components_) c *= s;
    return *this;
}

void VectorField::axpy(double s, const VectorField& other) {
    require_same_grid(*this, other, "VectorField::axpy");
    for (int c = 0; c < n_components(); ++c) components_[c] += s * other.components_[c];
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

double inner_product(const VectorField& a, const VectorField& b) {
    require_same_grid(a, b, "inner_product");
    const VectorXd& w = a.grid()->quad_weights();
    double acc = 0.0;
    for (int c = 0; c < a.n_components(); ++c)
        acc += (a.component(c).array() * b.component(c).array() * w.array()).sum();
    return acc;
}

VectorXd derivative_along_axis(const Grid& grid, const VectorXd& values, int axis) {
    if (axis < 0 || axis >= grid.n_axes())
        throw std::invalid_argument("derivative_along_axis: axis out of range");
    if (static_cast<std::size_t>(values.size()) != grid.n_points())
        throw std::invalid_argument("derivative_along_axis: value length mismatch");
    const int n = grid.dim(axis);
    if (n < 3)
        throw std::invalid_argument("derivative_along_axis: axis " + std::to_string(axis) +
                                    " has " + std::to_string(n) + " points, stencil needs 3");
    const auto& x = grid.coords(axis);
    const std::size_t stride = grid.stride(axis);
    const std::size_t n_lines = grid.n_points() / n;

    VectorXd out(values.size());
    // Enumerate the start offset of every grid line along `axis`.
    for (std::size_t line = 0; line < n_lines; ++line) {
        const std::size_t block = line / stride;
        const std::size_t within = line % stride;
        const std::size_t base = block * stride * n + within;

        auto v = [&](int i) { return values[static_cast<Eigen::Index>(base + i * stride)]; };
        auto set = [&](int i, double d) { out[static_cast<Eigen::Index>(base + i * stride)] = d; };

        // One-sided quadratic at the low end.
        {
            const double h1 = x[1] - x[0], h2 = x[2] - x[0];
            set(0, v(0) * (-(h1 + h2) / (h1 * h2)) + v(1) * (h2 / (h1 * (h2 - h1))) +
                    v(2) * (-h1 / (h2 * (h2 - h1))));
        }
        for (int i = 1; i + 1 < n; ++i) {
            const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
            set(i, -v(i - 1) * hp / (hm * (hm + hp)) + v(i) * (hp - hm) / (hm * hp) +
                    v(i + 1) * hm / (hp * (hm + hp)));
        }
        // One-sided quadratic at the high end.
        {
            const double h1 = x[n - 1] - x[n - 2], h2 = x[n - 1] - x[n - 3];
            set(n - 1, v(n - 1) * ((h1 + h2) / (h1 * h2)) - v(n - 2) * (h2 / (h1 * (h2 - h1))) +
                        v(n - 3) * (h1 / (h2 * (h2 - h1))));
        }
    }
    return out;
}

SnapshotSet::SnapshotSet(VectorXd times, std::vector<VectorField> fields, VectorField reference)
    : times_(std::move(times)), fields_(std::move(fields)), reference_(std::move(reference)) {
    if (fields_.size() < 2)
        throw std::invalid_argument("SnapshotSet: need at least 2 snapshots, got " +
                                    std::to_string(fields_.size()));
    if (static_cast<std::size_t>(times_.size()) != fields_.size())
        throw std::invalid_argument("SnapshotSet: time count " + std::to_string(times_.size()) +
                                    " != field count " + std::to_string(fields_.size()));
    for (Eigen::Index i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("SnapshotSet: times not strictly increasing at index " +
                                        std::to_string(i));
    for (const auto& f : fields_) require_same_grid(f, reference_, "SnapshotSet");
}

namespace {
VectorField time_mean(const std::vector<VectorField>& fields) {
    VectorField mean(fields.front().grid());
    for (const auto& f : fields) mean += f;
    mean *= 1.0 / static_cast<double>(fields.size());
    return mean;
}
}  // namespace

SnapshotSet::SnapshotSet(VectorXd times, std::vector<VectorField> fields)
    : SnapshotSet(std::move(times), fields, time_mean(fields)) {}

VectorField SnapshotSet::at_time(double t) const {
    const double t0 = times_[0], t1 = times_[times_.size() - 1];
    const double pad = 1e-9 * (t1 - t0);
    if (t < t0 - pad || t > t1 + pad)
        throw std::invalid_argument("SnapshotSet::at_time: t=" + std::to_string(t) +
                                    " outside coverage [" + std::to_string(t0) + ", " +
                                    std::to_string(t1) + "]");
    t = std::min(std::max(t, t0), t1);
    // Bracketing interval.
    Eigen::Index hi = 1;
    while (hi < times_.size() - 1 && times_[hi] < t) ++hi;
    const Eigen::Index lo = hi - 1;
    const double span = times_[hi] - times_[lo];
    const double s = (t - times_[lo]) / span;
    VectorField out = fields_[static_cast<std::size_t>(lo)];
    out *= 1.0 - s;
    out.axpy(s, fields_[static_cast<std::size_t>(hi)]);
    return out;
}

}  // namespace flowest
