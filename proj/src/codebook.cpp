#include "irstrack/codebook.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace irstrack {

cvec BeamShape::weights() const {
    cvec w(phases.size());
    for (size_t q = 0; q < phases.size(); ++q) w[q] = std::polar(unit_gain, phases[q]);
    return w;
}

BeamShape linear_profile(int q_count) {
    if (q_count < 1) throw std::invalid_argument("profile needs at least one element");
    return {std::vector<double>(static_cast<size_t>(q_count), 0.0), 1.0};
}

BeamShape quadratic_profile(int q_count, int m_count, double spacing, double wavelength,
                            int member) {
    if (q_count < 1 || m_count < 1) throw std::invalid_argument("invalid profile dimensions");
    if (member < 0 || member >= m_count) throw std::out_of_range("profile member index out of range");
    const double beta_bar = std::min(4.0, wavelength / spacing);
    const double dbeta = beta_bar / m_count;
    const double beta_m = member * dbeta;
    const double scale = 2.0 * kPi * spacing / (m_count * wavelength);
    BeamShape shape{std::vector<double>(static_cast<size_t>(q_count), 0.0), 1.0};
    for (int q = 1; q <= q_count; ++q) {
        shape.phases[q - 1] = -scale * (dbeta * member * q * q / (2.0 * q_count) + beta_m * q);
    }
    return shape;
}

std::string to_string(BeamShapeKind kind) {
    switch (kind) {
        case BeamShapeKind::linear: return "linear";
        case BeamShapeKind::quadratic: return "quadratic";
        case BeamShapeKind::optimized: return "optimized";
    }
    return "unknown";
}

BeamShapeKind beam_shape_kind_from_string(const std::string& s) {
    if (s == "linear") return BeamShapeKind::linear;
    if (s == "quadratic") return BeamShapeKind::quadratic;
    if (s == "optimized") return BeamShapeKind::optimized;
    throw std::invalid_argument("unknown beam shape kind: " + s);
}

namespace {

// Golden-section refinement of a unimodal 1-D maximum.
double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

Codebook::Codebook(BeamShape shape, int m_count, int q_count, double spacing, double wavelength,
                   BeamShapeKind kind, double pointing_a1, double pointing_a2)
    : shape_(std::move(shape)),
      m_count_(m_count),
      q_count_(q_count),
      spacing_(spacing),
      wavelength_(wavelength),
      kind_(kind),
      pointing_a1_(pointing_a1),
      pointing_a2_(pointing_a2) {
    if (shape_.size() != q_count_) throw std::invalid_argument("beam shape length must equal Q");
    if (m_count_ < 1) throw std::invalid_argument("codebook needs at least one codeword per axis");
    if (spacing_ <= 0.0 || wavelength_ <= 0.0) throw std::invalid_argument("invalid codebook geometry");

    const cvec w = shape_.weights();
    for (int axis = 0; axis < 2; ++axis) {
        const double point = pointing(axis);
        axis_vectors_[axis].resize(static_cast<size_t>(m_count_));
        axis_peaks_[axis].resize(static_cast<size_t>(m_count_));
        for (int m = 0; m < m_count_; ++m) {
            const double slope = 4.0 * kPi * spacing_ * m / (wavelength_ * m_count_) - kPi +
                                 2.0 * kPi * spacing_ * point / wavelength_;
            cvec v(static_cast<size_t>(q_count_));
            for (int q = 1; q <= q_count_; ++q) v[q - 1] = w[q - 1] * std::polar(1.0, slope * q);
            axis_vectors_[axis][m] = std::move(v);
        }
        // Peak search: 501-point scan over the A-offset range, golden
        // refinement around the best sample.
        for (int m = 0; m < m_count_; ++m) {
            const auto f = [&](double x) { return std::abs(axis_gain(axis, m, x)); };
            const int n_scan = 501;
            double best_x = -1.0, best_v = -1.0;
            for (int i = 0; i < n_scan; ++i) {
                const double x = -1.0 + 2.0 * i / (n_scan - 1);
                const double v = f(x);
                if (v > best_v) { best_v = v; best_x = x; }
            }
            const double half = 2.0 / (n_scan - 1);
            axis_peaks_[axis][m] = golden_max(f, best_x - half, best_x + half, 1e-6);
        }
    }
}

const cvec& Codebook::axis_vector(int axis, int m_axis) const {
    if (axis < 0 || axis > 1) throw std::out_of_range("axis must be 0 or 1");
    if (m_axis < 0 || m_axis >= m_count_) throw std::out_of_range("codeword index out of range");
    return axis_vectors_[axis][static_cast<size_t>(m_axis)];
}

cvec Codebook::full_vector(const Codeword& m) const {
    return kron(axis_vector(0, m.m1), axis_vector(1, m.m2));
}

cplx Codebook::axis_gain(int axis, int m_axis, double x) const {
    const cvec& v = axis_vector(axis, m_axis);
    const double c = 2.0 * kPi * spacing_ / wavelength_ * x;
    const double offset0 = -0.5 * (q_count_ - 1);
    cplx sum = 0.0;
    for (int q = 0; q < q_count_; ++q) sum += v[q] * std::polar(1.0, -c * (offset0 + q));
    return sum;
}

cplx Codebook::reflection_gain_factors(const Codeword& m, double a1, double a2, double inc_a1,
                                       double inc_a2) const {
    return axis_gain(0, m.m1, a1 - inc_a1) * axis_gain(1, m.m2, a2 - inc_a2);
}

cplx Codebook::reflection_gain(const Codeword& m, const Direction& d, const AzEl& incident) const {
    const auto [a1, a2] = phase_factors(azel_from_direction(d));
    const auto [i1, i2] = phase_factors(incident);
    return reflection_gain_factors(m, a1, a2, i1, i2);
}

Direction Codebook::main_lobe_direction(const Codeword& m, const AzEl& incident) const {
    if (m.m1 < 0 || m.m1 >= m_count_ || m.m2 < 0 || m.m2 >= m_count_)
        throw std::out_of_range("codeword index out of range");
    const auto [i1, i2] = phase_factors(incident);
    double a1 = axis_peaks_[0][m.m1] + i1;
    double a2 = axis_peaks_[1][m.m2] + i2;
    // Keep the factors strictly inside the visible region.
    const double r2 = a1 * a1 + a2 * a2;
    const double lim = 0.999999;
    if (r2 >= lim) {
        const double s = std::sqrt(lim / r2);
        a1 *= s;
        a2 *= s;
    }
    return direction_from_phase_factors(a1, a2);
}

double Codebook::analytic_axis_factor(int m_axis) const {
    return 2.0 * m_axis / m_count_ - wavelength_ / (2.0 * spacing_);
}

double angular_spacing(int m_count) {
    if (m_count < 1) throw std::invalid_argument("codebook size must be positive");
    return 2.0 / m_count;
}

void save_beam_shape(std::ostream& os, const BeamShape& shape, BeamShapeKind kind, int m_count,
                     double spacing, double wavelength) {
    os << "# kind " << to_string(kind) << "\n";
    os << "# q " << shape.size() << "\n";
    os << "# m " << m_count << "\n";
    os << "# spacing_over_wavelength " << spacing / wavelength << "\n";
    char buf[64];
    for (int q = 0; q < shape.size(); ++q) {
        std::snprintf(buf, sizeof(buf), "%d %.17g\n", q, shape.phases[q]);
        os << buf;
    }
}

void save_beam_shape_file(const std::string& path, const BeamShape& shape, BeamShapeKind kind,
                          int m_count, double spacing, double wavelength) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open shape file for writing: " + path);
    save_beam_shape(os, shape, kind, m_count, spacing, wavelength);
}

LoadedBeamShape load_beam_shape(std::istream& is) {
    LoadedBeamShape out;
    std::string line;
    std::vector<std::pair<int, double>> entries;
    int q_declared = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "kind") {
                std::string v;
                hs >> v;
                out.kind = beam_shape_kind_from_string(v);
            } else if (key == "q") {
                hs >> q_declared;
            } else if (key == "m") {
                hs >> out.m_count;
            } else if (key == "spacing_over_wavelength") {
                hs >> out.spacing_over_wavelength;
            }
            continue;
        }
        std::istringstream ls(line);
        int idx;
        double phase;
        if (!(ls >> idx >> phase)) throw std::runtime_error("malformed shape line: " + line);
        entries.emplace_back(idx, phase);
    }
    if (entries.empty()) throw std::runtime_error("shape file contains no elements");
    out.shape.phases.resize(entries.size());
    for (const auto& [idx, phase] : entries) {
        if (idx < 0 || idx >= static_cast<int>(entries.size()))
            throw std::runtime_error("shape element index out of range");
        out.shape.phases[idx] = phase;
    }
    if (q_declared >= 0 && q_declared != static_cast<int>(entries.size()))
        throw std::runtime_error("shape header Q does not match element count");
    return out;
}

LoadedBeamShape load_beam_shape_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open shape file: " + path);
    return load_beam_shape(is);
}

}  // namespace irstrack
