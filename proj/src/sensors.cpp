#include "flowest/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowest {

SensorKind sensor_kind_from_name(const std::string& name) {
    if (name == "point-velocity") return SensorKind::PointVelocity;
    if (name == "wall-shear") return SensorKind::WallShear;
    if (name == "box-average") return SensorKind::BoxAverage;
    throw std::invalid_argument("unknown sensor kind '" + name + "'");
}

std::string sensor_kind_name(SensorKind kind) {
    switch (kind) {
        case SensorKind::PointVelocity: return "point-velocity";
        case SensorKind::WallShear: return "wall-shear";
        case SensorKind::BoxAverage: return "box-average";
    }
    return "?";
}

namespace {

// Bracketing cell index and interpolation fraction along one axis.
std::pair<int, double> locate(const std::vector<double>& x, double v, const char* what) {
    const double pad = 1e-9 * (x.back() - x.front());
    if (v < x.front() - pad || v > x.back() + pad)
        throw std::invalid_argument(std::string(what) + ": coordinate " + std::to_string(v) +
                                    " outside grid range [" + std::to_string(x.front()) + ", " +
                                    std::to_string(x.back()) + "]");
    v = std::min(std::max(v, x.front()), x.back());
    int i = static_cast<int>(std::upper_bound(x.begin(), x.end(), v) - x.begin()) - 1;
    i = std::clamp(i, 0, static_cast<int>(x.size()) - 2);
    return {i, (v - x[i]) / (x[i + 1] - x[i])};
}

double interpolate_point(const Grid& g, const VectorXd& values,
                         const std::vector<double>& location) {
    const int dim = g.n_axes();
    std::vector<std::pair<int, double>> cells(dim);
    for (int a = 0; a < dim; ++a)
        cells[a] = locate(g.coords(a), location[a], "point sensor");

    double acc = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
        double w = 1.0;
        std::vector<int> idx(dim);
        for (int a = 0; a < dim; ++a) {
            const bool hi = corner & (1 << a);
            w *= hi ? cells[a].second : 1.0 - cells[a].second;
            idx[a] = cells[a].first + (hi ? 1 : 0);
        }
        acc += w * values[static_cast<Eigen::Index>(g.flat_index(idx))];
    }
    return acc;
}

double wall_shear(const Grid& g, const VectorField& field, const SensorSpec& spec) {
    const int dim = g.n_axes();
    if (spec.wall_axis < 0 || spec.wall_axis >= dim)
        throw std::invalid_argument("wall-shear sensor: wall_axis " +
                                    std::to_string(spec.wall_axis) + " out of range for " +
                                    std::to_string(dim) + " axes");
    if (spec.component == spec.wall_axis)
        throw std::invalid_argument(
            "wall-shear sensor: component must be wall-tangential, got the wall-normal one");
    if (g.dim(spec.wall_axis) < 3)
        throw std::invalid_argument("wall-shear sensor: fewer than 3 points across the wall axis");

    // Nearest grid node in the tangential directions.
    std::vector<int> idx(dim, 0);
    for (int a = 0; a < dim; ++a) {
        if (a == spec.wall_axis) continue;
        const auto [i, frac] = locate(g.coords(a), spec.location[a], "wall-shear sensor");
        idx[a] = frac > 0.5 ? i + 1 : i;
    }

    const auto& x = g.coords(spec.wall_axis);
    const int n = g.dim(spec.wall_axis);
    const VectorXd& v = field.component(spec.component);

    auto value_at = [&](int i) {
        auto id = idx;
        id[spec.wall_axis] = i;
        return v[static_cast<Eigen::Index>(g.flat_index(id))];
    };

    // Second-order one-sided derivative of the tangential component at the wall.
    if (spec.wall_side == WallSide::Min) {
        const double h1 = x[1] - x[0], h2 = x[2] - x[0];
        return value_at(0) * (-(h1 + h2) / (h1 * h2)) + value_at(1) * (h2 / (h1 * (h2 - h1))) +
               value_at(2) * (-h1 / (h2 * (h2 - h1)));
    }
    const double h1 = x[n - 1] - x[n - 2], h2 = x[n - 1] - x[n - 3];
    return value_at(n - 1) * ((h1 + h2) / (h1 * h2)) - value_at(n - 2) * (h2 / (h1 * (h2 - h1))) +
           value_at(n - 3) * (h1 / (h2 * (h2 - h1)));
}

double box_average(const Grid& g, const VectorXd& values, const SensorSpec& spec) {
    const int dim = g.n_axes();
    if (static_cast<int>(spec.box_lo.size()) != dim ||
        static_cast<int>(spec.box_hi.size()) != dim)
        throw std::invalid_argument("box-average sensor: box_lo/box_hi must give one bound per axis");
    for (int a = 0; a < dim; ++a)
        if (!(spec.box_hi[a] > spec.box_lo[a]))
            throw std::invalid_argument("box-average sensor: empty box along axis " +
                                        std::to_string(a));

    const VectorXd& w = g.quad_weights();
    double wsum = 0.0, acc = 0.0;
    std::vector<int> idx(dim, 0);
    const std::size_t n = g.n_points();
    for (std::size_t p = 0; p < n; ++p) {
        bool inside = true;
        for (int a = 0; a < dim; ++a) {
            const double c = g.coords(a)[idx[a]];
            if (c < spec.box_lo[a] || c > spec.box_hi[a]) {
                inside = false;
                break;
            }
        }
        if (inside) {
            acc += w[static_cast<Eigen::Index>(p)] * values[static_cast<Eigen::Index>(p)];
            wsum += w[static_cast<Eigen::Index>(p)];
        }
        for (int a = 0; a < dim; ++a) {
            if (++idx[a] < g.dim(a)) break;
            idx[a] = 0;
        }
    }
    if (wsum <= 0)
        throw std::invalid_argument("box-average sensor: box contains no grid points");
    return acc / wsum;
}

}  // namespace

double apply(const SensorSpec& spec, const VectorField& field) {
    const Grid& g = *field.grid();
    if (spec.component < 0 || spec.component >= field.n_components())
        throw std::invalid_argument("sensor: component index " + std::to_string(spec.component) +
                                    " out of range for " + std::to_string(field.n_components()) +
                                    " components");
    switch (spec.kind) {
        case SensorKind::PointVelocity: {
            if (static_cast<int>(spec.location.size()) != g.n_axes())
                throw std::invalid_argument("point sensor: location needs one coordinate per axis");
            return spec.weight * interpolate_point(g, field.component(spec.component),
                                                   spec.location);
        }
        case SensorKind::WallShear: {
            if (static_cast<int>(spec.location.size()) != g.n_axes())
                throw std::invalid_argument(
                    "wall-shear sensor: location needs one coordinate per axis");
            return spec.weight * wall_shear(g, field, spec);
        }
        case SensorKind::BoxAverage:
            return spec.weight * box_average(g, field.component(spec.component), spec);
    }
    throw std::logic_error("apply: unhandled sensor kind");
}

SensorSuite build_suite(const std::vector<SensorSpec>& specs, const PodBasis& basis) {
    SensorSuite suite;
    suite.specs = specs;
    const int n_s = static_cast<int>(specs.size());
    const int n_r = basis.n_retained();
    suite.mode_response.resize(n_s, n_r);
    suite.ref_offset.resize(n_s);
    for (int k = 0; k < n_s; ++k) {
        suite.ref_offset[k] = apply(specs[k], basis.reference);
        for (int j = 0; j < n_r; ++j) suite.mode_response(k, j) = apply(specs[k], basis.modes[j]);
    }
    return suite;
}

MeasurementRecord MeasurementRecord::window(int first, int count) const {
    if (first < 0 || count < 1 || first + count > n_samples())
        throw std::invalid_argument("MeasurementRecord::window: range out of bounds");
    MeasurementRecord out;
    out.times = times.segment(first, count);
    out.values = values.middleRows(first, count);
    return out;
}

MeasurementRecord sample_measurements(const SensorSuite& suite, const SnapshotSet& set,
                                      const VectorXd& times) {
    MeasurementRecord rec;
    rec.times = times;
    rec.values.resize(times.size(), suite.n_sensors());

    // Sensors are linear, so measuring the two bracketing snapshots and
    // interpolating their readings equals measuring the interpolated field.
    const VectorXd& st = set.times();
    MatrixXd snap_meas = MatrixXd::Constant(st.size(), suite.n_sensors(),
                                            std::numeric_limits<double>::quiet_NaN());
    auto measured_row = [&](Eigen::Index i) -> const MatrixXd& {
        if (std::isnan(snap_meas(i, 0))) {
            for (int k = 0; k < suite.n_sensors(); ++k)
                snap_meas(i, k) = apply(suite.specs[k], set.field(static_cast<int>(i)));
        }
        return snap_meas;
    };

    const double pad = 1e-9 * (st[st.size() - 1] - st[0]);
    for (Eigen::Index m = 0; m < times.size(); ++m) {
        double t = times[m];
        if (t < st[0] - pad || t > st[st.size() - 1] + pad)
            throw std::invalid_argument("sample_measurements: time " + std::to_string(t) +
                                        " outside snapshot coverage [" + std::to_string(st[0]) +
                                        ", " + std::to_string(st[st.size() - 1]) + "]");
        t = std::min(std::max(t, st[0]), st[st.size() - 1]);
        Eigen::Index hi = 1;
        while (hi < st.size() - 1 && st[hi] < t) ++hi;
        const Eigen::Index lo = hi - 1;
        const double s = (t - st[lo]) / (st[hi] - st[lo]);
        measured_row(lo);
        measured_row(hi);
        rec.values.row(m) = (1.0 - s) * snap_meas.row(lo) + s * snap_meas.row(hi);
    }
    return rec;
}

MeasurementRecord measurements_from_coeffs(const SensorSuite& suite,
                                           const CoefficientTrajectory& coeffs,
                                           const VectorXd& times) {
    if (coeffs.n_modes() != suite.n_modes())
        throw std::invalid_argument("measurements_from_coeffs: mode count mismatch");
    const MatrixXd a = coeffs.sample_at(times);
    MeasurementRecord rec;
    rec.times = times;
    rec.values = (a * suite.mode_response.transpose()).rowwise() + suite.ref_offset.transpose();
    return rec;
}

}  // namespace flowest
