#include "irstrack/beamopt.hpp"

#include <cmath>

namespace irstrack {

void DesignConfig::validate() const {
    if (q_count < 1 || m_count < 1) throw std::invalid_argument("invalid design dimensions");
    if (spacing <= 0.0 || wavelength <= 0.0) throw std::invalid_argument("invalid design geometry");
    if (grid_g < 8) throw std::invalid_argument("quadrature grid must have at least 8 points per axis");
    if (design_snr < 0.0) throw std::invalid_argument("design SNR must be non-negative");
    if (step < 0.0) throw std::invalid_argument("step size must be non-negative");
    if (decay <= 0.0 || decay > 1.0) throw std::invalid_argument("step decay must be in (0, 1]");
    if (stop_tol < 0.0) throw std::invalid_argument("stop tolerance must be non-negative");
    if (gamma < 0) throw std::invalid_argument("gamma must be non-negative");
}

namespace {

// Shift ramp of codeword index m: exp(j (4 pi d m / (lambda M) - pi) q), q = 1..Q.
cvec codeword_ramp(int q_count, int m_count, double spacing, double wavelength, int m) {
    const double slope = 4.0 * kPi * spacing * m / (wavelength * m_count) - kPi;
    cvec v(static_cast<size_t>(q_count));
    for (int q = 1; q <= q_count; ++q) v[q - 1] = std::polar(1.0, slope * q);
    return v;
}

}  // namespace

MseObjectiveCache::MseObjectiveCache(const DesignConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int g = cfg_.grid_g;
    const int q = cfg_.q_count;
    const double r = cfg_.coverage_width();
    const Direction center = direction_from_phase_factors(cfg_.center_a1, cfg_.center_a2);

    points_.reserve(static_cast<size_t>(g) * g);
    for (int i = 0; i < g; ++i) {
        const double theta = center.theta - r / 2.0 + (i + 0.5) * r / g;
        for (int j = 0; j < g; ++j) {
            const double phi = center.phi - r / 2.0 + (j + 0.5) * r / g;
            points_.push_back({theta, phi});
        }
    }

    steering_.resize(points_.size() * 2 * static_cast<size_t>(q));
    const double c = 2.0 * kPi * cfg_.spacing / cfg_.wavelength;
    const double offset0 = -0.5 * (q - 1);
    for (size_t p = 0; p < points_.size(); ++p) {
        const auto [a1, a2] = phase_factors(azel_from_direction(points_[p]));
        cplx* row1 = &steering_[(p * 2 + 0) * q];
        cplx* row2 = &steering_[(p * 2 + 1) * q];
        for (int i = 0; i < q; ++i) {
            row1[i] = std::polar(1.0, -c * a1 * (offset0 + i));
            row2[i] = std::polar(1.0, -c * a2 * (offset0 + i));
        }
    }

    const int m_center = cfg_.m_count / 2;
    for (int d = -cfg_.gamma; d <= cfg_.gamma; ++d) {
        const int m = std::clamp(m_center + d, 0, cfg_.m_count - 1);
        ramps_.push_back(codeword_ramp(q, cfg_.m_count, cfg_.spacing, cfg_.wavelength, m));
    }

    const double cell = r / g;
    cell_weight_ = cell * cell * cell * cell;
}

void MseObjectiveCache::evaluate(const BeamShape& shape, double* value,
                                 std::vector<double>* gradient) const {
    if (shape.size() != cfg_.q_count) throw std::invalid_argument("shape length must equal Q");
    const int q = cfg_.q_count;
    const int np = num_points();
    const int no = num_offsets();
    const int nm = no * no;
    const cvec w = shape.weights();

    // Per-point per-axis gains for every codeword offset.
    std::vector<cplx> axis_gain(static_cast<size_t>(np) * 2 * no);
    for (int p = 0; p < np; ++p) {
        for (int ax = 0; ax < 2; ++ax) {
            const cplx* steer = &steering_[(static_cast<size_t>(p) * 2 + ax) * q];
            for (int o = 0; o < no; ++o) {
                const cvec& ramp = ramps_[o];
                cplx sum = 0.0;
                for (int i = 0; i < q; ++i) sum += steer[i] * w[i] * ramp[i];
                axis_gain[(static_cast<size_t>(p) * 2 + ax) * no + o] = sum;
            }
        }
    }
    std::vector<cplx> gain(static_cast<size_t>(np) * nm);  // g_m per point
    for (int p = 0; p < np; ++p) {
        const cplx* g1 = &axis_gain[(static_cast<size_t>(p) * 2 + 0) * no];
        const cplx* g2 = &axis_gain[(static_cast<size_t>(p) * 2 + 1) * no];
        cplx* out = &gain[static_cast<size_t>(p) * nm];
        for (int o1 = 0; o1 < no; ++o1)
            for (int o2 = 0; o2 < no; ++o2) out[o1 * no + o2] = g1[o1] * g2[o2];
    }

    const bool want_grad = gradient != nullptr;
    std::vector<cplx> beta;
    if (want_grad) beta.assign(static_cast<size_t>(np) * nm, cplx{0.0, 0.0});

    // Pair loop over unordered point pairs; the full double integral counts
    // ordered pairs, so each contribution enters twice.
    double total = 0.0;
    std::vector<cplx> diff(static_cast<size_t>(nm));
    for (int p = 0; p < np; ++p) {
        const cplx* gp = &gain[static_cast<size_t>(p) * nm];
        for (int p2 = p + 1; p2 < np; ++p2) {
            const cplx* gq = &gain[static_cast<size_t>(p2) * nm];
            double dsum = 0.0;
            for (int m = 0; m < nm; ++m) {
                diff[m] = gp[m] - gq[m];
                dsum += std::norm(diff[m]);
            }
            const double dt = points_[p].theta - points_[p2].theta;
            const double dp = points_[p].phi - points_[p2].phi;
            const double dist2 = dt * dt + dp * dp;
            const double kernel = std::exp(-cfg_.design_snr * dsum) * dist2;
            total += 2.0 * kernel;
            if (want_grad && kernel != 0.0) {
                cplx* bp = &beta[static_cast<size_t>(p) * nm];
                cplx* bq = &beta[static_cast<size_t>(p2) * nm];
                for (int m = 0; m < nm; ++m) {
                    const cplx c = kernel * std::conj(diff[m]);
                    bp[m] += c;
                    bq[m] -= c;
                }
            }
        }
    }
    if (value) *value = total * cell_weight_;

    if (!want_grad) return;
    gradient->assign(static_cast<size_t>(q), 0.0);
    // Contract beta with the per-axis structure:
    //   d g_m(p) / d rho_i = j w_i (steer1_i ramp_m1_i G2 + steer2_i ramp_m2_i G1)
    std::vector<cplx> gamma1(static_cast<size_t>(no)), gamma2(static_cast<size_t>(no));
    std::vector<cplx> acc(static_cast<size_t>(q), cplx{0.0, 0.0});
    for (int p = 0; p < np; ++p) {
        const cplx* bp = &beta[static_cast<size_t>(p) * nm];
        const cplx* g1 = &axis_gain[(static_cast<size_t>(p) * 2 + 0) * no];
        const cplx* g2 = &axis_gain[(static_cast<size_t>(p) * 2 + 1) * no];
        for (int o1 = 0; o1 < no; ++o1) {
            cplx s = 0.0;
            for (int o2 = 0; o2 < no; ++o2) s += bp[o1 * no + o2] * g2[o2];
            gamma1[o1] = s;
        }
        for (int o2 = 0; o2 < no; ++o2) {
            cplx s = 0.0;
            for (int o1 = 0; o1 < no; ++o1) s += bp[o1 * no + o2] * g1[o1];
            gamma2[o2] = s;
        }
        const cplx* steer1 = &steering_[(static_cast<size_t>(p) * 2 + 0) * q];
        const cplx* steer2 = &steering_[(static_cast<size_t>(p) * 2 + 1) * q];
        for (int o = 0; o < no; ++o) {
            const cvec& ramp = ramps_[o];
            const cplx c1 = gamma1[o], c2 = gamma2[o];
            for (int i = 0; i < q; ++i) acc[i] += c1 * steer1[i] * ramp[i] + c2 * steer2[i] * ramp[i];
        }
    }
    // The ordered pair sum contributes twice per unordered pair (swap
    // symmetry), on top of the 2 Re[...] from differentiating |E|^2.
    const cplx j_unit{0.0, 1.0};
    for (int i = 0; i < q; ++i) {
        (*gradient)[i] =
            -4.0 * cfg_.design_snr * cell_weight_ * std::real(j_unit * w[i] * acc[i]);
    }
}

double MseObjectiveCache::value(const BeamShape& shape) const {
    double v = 0.0;
    evaluate(shape, &v, nullptr);
    return v;
}

std::vector<double> MseObjectiveCache::gradient(const BeamShape& shape) const {
    std::vector<double> g;
    evaluate(shape, nullptr, &g);
    return g;
}

double mse_hat(const BeamShape& shape, const DesignConfig& cfg) {
    return MseObjectiveCache(cfg).value(shape);
}

std::vector<double> mse_hat_gradient(const BeamShape& shape, const DesignConfig& cfg) {
    return MseObjectiveCache(cfg).gradient(shape);
}

double equivocation_density(const Direction& psi, const Direction& psi_prime,
                            const BeamShape& shape, const DesignConfig& cfg) {
    cfg.validate();
    if (shape.size() != cfg.q_count) throw std::invalid_argument("shape length must equal Q");
    const cvec w = shape.weights();
    const int m_center = cfg.m_count / 2;
    const double c = 2.0 * kPi * cfg.spacing / cfg.wavelength;
    const double offset0 = -0.5 * (cfg.q_count - 1);
    const auto axis_gain = [&](double a, const cvec& ramp) {
        cplx sum = 0.0;
        for (int i = 0; i < cfg.q_count; ++i)
            sum += std::polar(1.0, -c * a * (offset0 + i)) * w[i] * ramp[i];
        return sum;
    };
    const auto [pa1, pa2] = phase_factors(azel_from_direction(psi));
    const auto [qa1, qa2] = phase_factors(azel_from_direction(psi_prime));
    double dsum = 0.0;
    for (int d1 = -cfg.gamma; d1 <= cfg.gamma; ++d1) {
        const cvec r1 = codeword_ramp(cfg.q_count, cfg.m_count, cfg.spacing, cfg.wavelength,
                                      std::clamp(m_center + d1, 0, cfg.m_count - 1));
        const cplx g1p = axis_gain(pa1, r1), g1q = axis_gain(qa1, r1);
        for (int d2 = -cfg.gamma; d2 <= cfg.gamma; ++d2) {
            const cvec r2 = codeword_ramp(cfg.q_count, cfg.m_count, cfg.spacing, cfg.wavelength,
                                          std::clamp(m_center + d2, 0, cfg.m_count - 1));
            dsum += std::norm(g1p * axis_gain(pa2, r2) - g1q * axis_gain(qa2, r2));
        }
    }
    return std::exp(-cfg.design_snr * dsum);
}

double shape_peak_offset(const BeamShape& shape, const DesignConfig& cfg) {
    Codebook cb(shape, cfg.m_count, cfg.q_count, cfg.spacing, cfg.wavelength,
                BeamShapeKind::optimized);
    return cb.axis_peak_offset(0, cfg.m_count / 2);
}

double default_design_snr(const BeamShape& shape, const DesignConfig& cfg) {
    Codebook cb(shape, cfg.m_count, cfg.q_count, cfg.spacing, cfg.wavelength,
                BeamShapeKind::optimized);
    const int mc = cfg.m_count / 2;
    const double x = cb.axis_peak_offset(0, mc);
    const cplx g_peak = cb.axis_gain(0, mc, x) * cb.axis_gain(1, mc, x);
    const cplx g_edge = cb.axis_gain(0, mc, x + cfg.coverage_width() / 2.0) * cb.axis_gain(1, mc, x);
    const double d0 = std::norm(g_peak - g_edge);
    if (d0 <= 0.0) throw std::domain_error("degenerate shape: flat gain over the coverage window");
    return 1.0 / d0;
}

DesignResult optimize_beam_shape(const BeamShape& init, const DesignConfig& cfg) {
    const MseObjectiveCache cache(cfg);
    DesignResult res;
    res.shape = init;

    std::vector<double> rho = init.phases;
    BeamShape current{rho, init.unit_gain};
    double f_current = 0.0;
    std::vector<double> grad;
    cache.evaluate(current, &f_current, &grad);
    res.initial_objective = f_current;

    BeamShape best = current;
    double f_best = f_current;
    int l = 0;
    for (; l < cfg.max_iterations; ++l) {
        const double step0 = std::pow(cfg.decay, l) * cfg.step;
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        res.final_step_norm = step0 * gnorm;
        if (res.final_step_norm < cfg.stop_tol) {
            res.converged = true;
            res.stop_reason = "step_norm_below_tolerance";
            break;
        }
        double step = step0;
        BeamShape candidate = current;
        double f_candidate = 0.0;
        bool descended = false;
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (int i = 0; i < current.size(); ++i)
                candidate.phases[i] = current.phases[i] - step * grad[i];
            f_candidate = cache.value(candidate);
            if (f_candidate <= f_current) {
                descended = true;
                break;
            }
            step *= 0.5;
        }
        if (!descended) {
            res.converged = true;
            res.stop_reason = "no_descending_step";
            break;
        }
        current = candidate;
        f_current = f_candidate;
        if (f_current < f_best) {
            f_best = f_current;
            best = current;
        }
        cache.evaluate(current, nullptr, &grad);
    }
    if (l == cfg.max_iterations) {
        res.converged = false;
        res.stop_reason = "iteration_cap";
    }
    res.iterations = l;
    res.shape = best;
    res.final_objective = f_best;
    return res;
}

}  // namespace irstrack
