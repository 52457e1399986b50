#include "pidlft/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pidlft {

void PidGains::validate() const {
    if (!(alpha_i > 0.0) || alpha_i > 1.0 || !(alpha_d > 0.0) || alpha_d > 1.0) {
        throw std::invalid_argument("pid gains: alpha_i and alpha_d must be in (0, 1]");
    }
}

PidState::PidState(std::size_t n_entries, double limit)
    : integral(n_entries, 0.0), prev_error(n_entries, 0.0), integral_limit(limit) {
    if (!(limit > 0.0)) {
        throw std::invalid_argument("pid state: integral limit must be > 0");
    }
}

void PidState::reset() {
    integral.assign(integral.size(), 0.0);
    prev_error.assign(prev_error.size(), 0.0);
}

double nonlinear_map(double x, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("nonlinear_map: alpha must be in (0, 1]");
    }
    if (alpha == 1.0) return x;  // linear degenerate, bit-exact
    if (x > 0.0) return std::pow(x, alpha);
    if (x < 0.0) return -std::pow(-x, alpha);
    return 0.0;
}

double instant_error(const Model& m, const Entry& e) {
    return e.value - m.predict(e.i, e.j, e.k);
}

double refined_error(PidState& state, std::size_t slot, double e_now, const PidGains& gains) {
    if (slot >= state.integral.size()) {
        throw std::out_of_range("refined_error: slot " + std::to_string(slot) +
                                " >= state size " + std::to_string(state.integral.size()));
    }
    double acc = state.integral[slot] + e_now;
    if (acc > state.integral_limit) acc = state.integral_limit;
    if (acc < -state.integral_limit) acc = -state.integral_limit;
    state.integral[slot] = acc;

    const double delta = e_now - state.prev_error[slot];
    state.prev_error[slot] = e_now;

    return gains.k_p * e_now + gains.k_i * nonlinear_map(acc, gains.alpha_i) +
           gains.k_d * nonlinear_map(delta, gains.alpha_d);
}

namespace {

// Shared update kernel: every gradient product reads pre-update values, the
// error term having been computed once beforehand.
void apply_update(Model& m, const Entry& e, double err, double eta, double lambda) {
    const int rank = m.rank();
    double* s = m.s_row(e.i);
    double* mm = m.m_row(e.j);
    double* t = m.t_row(e.k);
    for (int r = 0; r < rank; ++r) {
        const double sv = s[r];
        const double mv = mm[r];
        const double tv = t[r];
        s[r] = sv + eta * (err * mv * tv - lambda * sv);
        mm[r] = mv + eta * (err * sv * tv - lambda * mv);
        t[r] = tv + eta * (err * sv * mv - lambda * tv);
    }
    const double av = m.a[e.i];
    const double bv = m.b[e.j];
    const double cv = m.c[e.k];
    m.a[e.i] = av + eta * (err - lambda * av);
    m.b[e.j] = bv + eta * (err - lambda * bv);
    m.c[e.k] = cv + eta * (err - lambda * cv);

    for (int r = 0; r < rank; ++r) {
        if (!std::isfinite(s[r]) || !std::isfinite(mm[r]) || !std::isfinite(t[r])) {
            throw DivergenceError("step produced non-finite factor at entry (" +
                                  std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                                  std::to_string(e.k) + ")");
        }
    }
    if (!std::isfinite(m.a[e.i]) || !std::isfinite(m.b[e.j]) || !std::isfinite(m.c[e.k])) {
        throw DivergenceError("step produced non-finite bias at entry (" + std::to_string(e.i) +
                              "," + std::to_string(e.j) + "," + std::to_string(e.k) + ")");
    }
}

void check_eta(double eta) {
    if (!(eta > 0.0)) {
        throw std::invalid_argument("step: eta must be > 0");
    }
}

}  // namespace

void sgd_step(Model& m, const Entry& e, double eta, double lambda) {
    check_eta(eta);
    m.check_entry(e);
    const double err = instant_error(m, e);
    apply_update(m, e, err, eta, lambda);
}

void pid_sgd_step(Model& m, PidState& state, std::size_t slot, const Entry& e, double eta,
                  double lambda, const PidGains& gains) {
    check_eta(eta);
    gains.validate();
    m.check_entry(e);
    const double err = instant_error(m, e);
    const double refined = refined_error(state, slot, err, gains);
    apply_update(m, e, refined, eta, lambda);
}

}  // namespace pidlft
