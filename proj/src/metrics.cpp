#include "flowest/metrics.hpp"

#include <cmath>
#include <sstream>

namespace flowest {

namespace {

VectorXd trapezoid_time_weights(const VectorXd& t) {
    const Eigen::Index n = t.size();
    VectorXd w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    w[0] = 0.5 * (t[1] - t[0]);
    w[n - 1] = 0.5 * (t[n - 1] - t[n - 2]);
    for (Eigen::Index i = 1; i + 1 < n; ++i) w[i] = 0.5 * (t[i + 1] - t[i - 1]);
    return w;
}

}  // namespace

double ChannelErrors::mean_defined() const {
    double acc = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < percent.size(); ++i)
        if (defined[static_cast<std::size_t>(i)]) {
            acc += percent[i];
            ++n;
        }
    return n ? acc / n : 0.0;
}

double ChannelErrors::max_defined() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < percent.size(); ++i)
        if (defined[static_cast<std::size_t>(i)]) m = std::max(m, percent[i]);
    return m;
}

ChannelErrors coefficient_error(const CoefficientTrajectory& estimated,
                                const CoefficientTrajectory& reference) {
    if (estimated.n_modes() != reference.n_modes())
        throw std::invalid_argument("coefficient_error: mode count mismatch");
    const MatrixXd est = estimated.sample_at(reference.times);
    const VectorXd w = trapezoid_time_weights(reference.times);

    ChannelErrors out;
    out.percent.resize(reference.n_modes());
    out.defined.assign(static_cast<std::size_t>(reference.n_modes()), 1);
    for (int j = 0; j < reference.n_modes(); ++j) {
        const double den = std::sqrt(
            (reference.values.col(j).array().square() * w.array()).sum());
        const double num = std::sqrt(
            ((est.col(j) - reference.values.col(j)).array().square() * w.array()).sum());
        if (den > 0) {
            out.percent[j] = 100.0 * num / den;
        } else {
            out.percent[j] = 0.0;
            out.defined[static_cast<std::size_t>(j)] = 0;
        }
    }
    return out;
}

FieldErrorMode field_error_mode_from_name(const std::string& name) {
    if (name == "total") return FieldErrorMode::Total;
    if (name == "fluctuating") return FieldErrorMode::Fluctuating;
    if (name == "pod-projected") return FieldErrorMode::PodProjected;
    throw std::invalid_argument("unknown field error mode '" + name + "'");
}

std::string field_error_mode_name(FieldErrorMode mode) {
    switch (mode) {
        case FieldErrorMode::Total: return "total";
        case FieldErrorMode::Fluctuating: return "fluctuating";
        case FieldErrorMode::PodProjected: return "pod-projected";
    }
    return "?";
}

ChannelErrors field_error(const std::vector<VectorField>& estimated,
                          const std::vector<VectorField>& reference, const VectorXd& times,
                          FieldErrorMode mode, const PodBasis& basis) {
    if (estimated.size() != reference.size() ||
        estimated.size() != static_cast<std::size_t>(times.size()))
        throw std::invalid_argument("field_error: estimated/reference/times count mismatch");
    if (estimated.empty()) throw std::invalid_argument("field_error: empty sequences");

    const Grid& g = *reference.front().grid();
    const int n_comp = reference.front().n_components();
    const VectorXd w_space = g.quad_weights();
    const VectorXd w_time = trapezoid_time_weights(times);

    VectorXd num2 = VectorXd::Zero(n_comp), den2 = VectorXd::Zero(n_comp);
    for (std::size_t i = 0; i < reference.size(); ++i) {
        VectorField est = estimated[i];
        VectorField ref = reference[i];
        switch (mode) {
            case FieldErrorMode::Total: break;
            case FieldErrorMode::Fluctuating:
                est -= basis.reference;
                ref -= basis.reference;
                break;
            case FieldErrorMode::PodProjected:
                ref = reconstruct(basis, project(basis, ref));
                break;
        }
        const double wt = w_time[static_cast<Eigen::Index>(i)];
        for (int c = 0; c < n_comp; ++c) {
            const auto diff = est.component(c).array() - ref.component(c).array();
            num2[c] += wt * (diff.square() * w_space.array()).sum();
            den2[c] += wt * (ref.component(c).array().square() * w_space.array()).sum();
        }
    }

    ChannelErrors out;
    out.percent.resize(n_comp);
    out.defined.assign(static_cast<std::size_t>(n_comp), 1);
    for (int c = 0; c < n_comp; ++c) {
        if (den2[c] > 0) {
            out.percent[c] = 100.0 * std::sqrt(num2[c] / den2[c]);
        } else {
            out.percent[c] = 0.0;
            out.defined[static_cast<std::size_t>(c)] = 0;
        }
    }
    return out;
}

namespace {

void append_row(std::ostringstream& os, const std::string& label, const ChannelErrors& e) {
    os << label;
    for (Eigen::Index i = 0; i < e.percent.size(); ++i) {
        if (e.defined[static_cast<std::size_t>(i)]) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " %10.2f", e.percent[i]);
            os << buf;
        } else {
            os << "         --";
        }
    }
    os << "\n";
}

}  // namespace

std::string render_report(const std::vector<ErrorReport>& reports, ReportLayout layout) {
    std::ostringstream os;
    if (layout == ReportLayout::CoefficientTable) {
        os << "# relative percent errors of the modal coefficients, time-averaged\n";
        os << "method";
        const int n = reports.empty() ? 0 : static_cast<int>(reports[0].per_coefficient.percent.size());
        for (int j = 1; j <= n; ++j) os << "     e(a" << j << ")%";
        os << "\n";
        for (const auto& r : reports) append_row(os, r.label, r.per_coefficient);
        return os.str();
    }

    os << "# relative percent errors of the velocity components, time-averaged\n";
    static const char* comp_names[3] = {"U", "V", "W"};
    const int n = reports.empty() ? 0 : static_cast<int>(reports[0].per_component.percent.size());
    os << "method kind";
    for (int c = 0; c < n && c < 3; ++c) os << "      e(" << comp_names[c] << ")%";
    os << "\n";
    for (const auto& r : reports) {
        append_row(os, r.label + " total", r.per_component);
        append_row(os, r.label + " fluct", r.fluctuating);
        append_row(os, r.label + " proj ", r.projected);
    }
    return os.str();
}

}  // namespace flowest
