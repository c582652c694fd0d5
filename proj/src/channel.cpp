#include "irstrack/channel.hpp"

#include <cmath>

namespace irstrack {

double path_gain(double distance, double reflection_coefficient, double wavelength) {
    if (distance <= 0.0) throw std::domain_error("path distance must be positive");
    const double amp = reflection_coefficient * wavelength / (4.0 * kPi * distance);
    return amp * amp;
}

double rice_factor(const LinkChannel& link) {
    if (link.num_paths() < 2) throw std::invalid_argument("link has no non-LoS paths");
    double nlos = 0.0;
    for (int l = 1; l < link.num_paths(); ++l) nlos += link.path_gains[l];
    return link.path_gains[0] / nlos;
}

LinkChannel scale_for_rice_factor(const LinkChannel& link, double target_k) {
    if (target_k <= 0.0) throw std::invalid_argument("Rice factor must be positive");
    const double current = rice_factor(link);  // also checks for non-LoS paths
    LinkChannel out = link;
    const double scale = current / target_k;
    for (int l = 1; l < out.num_paths(); ++l) out.path_gains[l] *= scale;
    return out;
}

namespace {

cvec steering_towards(const ArrayNode& node, const Position& target) {
    const auto [a1, a2] = phase_factors_towards(node.frame, node.position, target);
    return steering_vector_from_factors(node.geometry, a1, a2);
}

}  // namespace

LinkChannel build_link(const ArrayNode& tx, const ArrayNode& rx,
                       const std::vector<Scatterer>& scatterers) {
    LinkChannel link;
    const double lambda = tx.geometry.wavelength;
    const double d_los = (rx.position - tx.position).norm();
    link.steering_tx.push_back(steering_towards(tx, rx.position));
    link.steering_rx.push_back(steering_towards(rx, tx.position));
    link.path_gains.push_back(std::sqrt(path_gain(d_los, 1.0, lambda)));
    for (const Scatterer& sc : scatterers) {
        const double d = (sc.position - tx.position).norm() + (rx.position - sc.position).norm();
        link.steering_tx.push_back(steering_towards(tx, sc.position));
        link.steering_rx.push_back(steering_towards(rx, sc.position));
        link.path_gains.push_back(std::sqrt(path_gain(d, sc.reflection_coefficient, lambda)));
    }
    return link;
}

Links build_links(const ArrayNode& bs, const ArrayNode& irs, const ArrayNode& ue,
                  const std::vector<Scatterer>& scatterers_t,
                  const std::vector<Scatterer>& scatterers_r) {
    return {build_link(bs, irs, scatterers_t), build_link(irs, ue, scatterers_r)};
}

namespace {

cplx dot_conj(const cvec& a, const cvec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
    cplx sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
    return sum;
}

// a^H diag(w) b for same-length vectors.
cplx weighted_dot(const cvec& a, const cvec& w, const cvec& b) {
    if (a.size() != w.size() || a.size() != b.size())
        throw std::invalid_argument("vector length mismatch");
    cplx sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * w[i] * b[i];
    return sum;
}

}  // namespace

cplx end_to_end_gain(const LinkChannel& h_t, const LinkChannel& h_r, const cvec& omega,
                     const cvec& f_bs, const cvec& f_ue) {
    // f_ue^H H_r diag(w) H_t f_bs
    //   = sum_{lr,lt} (f_ue^H a_ue,lr) g_r,lr (a_r,lr^H diag(w) a_t,lt) g_t,lt (a_bs,lt^H f_bs)
    cplx total = 0.0;
    for (int lr = 0; lr < h_r.num_paths(); ++lr) {
        const cplx rx_side = dot_conj(f_ue, h_r.steering_rx[lr]) * h_r.path_gains[lr];
        for (int lt = 0; lt < h_t.num_paths(); ++lt) {
            const cplx irs_factor = weighted_dot(h_r.steering_tx[lr], omega, h_t.steering_rx[lt]);
            const cplx tx_side = h_t.path_gains[lt] * dot_conj(h_t.steering_tx[lt], f_bs);
            total += rx_side * irs_factor * tx_side;
        }
    }
    return total;
}

cplx complex_gaussian(std::mt19937_64& rng, double variance) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    return {n(rng), n(rng)};
}

cvec synthesize_measurement(const EndToEndContext& ctx, cplx reflection_gain, const cvec& pilot,
                            std::mt19937_64& rng) {
    cvec r(pilot.size());
    const double noise_var = ctx.ue_antennas * ctx.noise_variance;
    for (size_t n = 0; n < pilot.size(); ++n) {
        r[n] = reflection_gain * ctx.xi * pilot[n] + complex_gaussian(rng, noise_var);
    }
    return r;
}

cvec full_measurement(const LinkChannel& h_t, const LinkChannel& h_r, const cvec& omega,
                      const cvec& f_bs, const cvec& f_ue, const cvec& pilot,
                      double noise_variance, std::mt19937_64& rng) {
    const cplx h = end_to_end_gain(h_t, h_r, omega, f_bs, f_ue);
    cvec r(pilot.size());
    const double noise_var = static_cast<double>(f_ue.size()) * noise_variance;
    for (size_t n = 0; n < pilot.size(); ++n) {
        r[n] = h * pilot[n] + complex_gaussian(rng, noise_var);
    }
    return r;
}

}  // namespace irstrack
